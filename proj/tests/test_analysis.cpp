#include "neurodavis/analysis.hpp"
#include "neurodavis/error.hpp"

#include "doctest.h"

#include <cmath>

using namespace neurodavis;

namespace {

Matrix unit_cube_points(std::size_t n, std::size_t d, Rng& rng) {
    Matrix x(n, d);
    for (double& v : x.values()) {
        v = rng.uniform();
    }
    return x;
}

}  // namespace

TEST_SUITE("analysis") {

TEST_CASE("lemma1 boundary cases") {
    CHECK(lemma1_norm(Matrix(3, 2), 0.7) == doctest::Approx(1.0).epsilon(1e-15));
    // rank one with unit Frobenius norm: eigenvalues of W W^T are 1 and 0
    Matrix w(3, 1);
    w(0, 0) = 0.6;
    w(1, 0) = 0.8;
    CHECK(lemma1_norm(w, 1.0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(lemma1_norm(w, 0.5) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("lemma1 suite stays non-expansive") {
    Rng rng(0);
    const Lemma1Report r = check_lemma1(1000, 8, rng);
    CHECK(r.trials == 1000);
    CHECK(r.max_norm <= 1.0 + 1e-9);
    CHECK(r.max_norm >= 1.0 - 1e-9);
    CHECK_THROWS_AS(check_lemma1(0, 8, rng), InvalidInput);
}

TEST_CASE("theorem1 gap still shrinks overall for a wider pair") {
    // once the embedding gap reaches the data gap it may wobble upward by a
    // fraction of a percent, so only the end-to-end shrinkage is checked here
    Rng data(3);
    Matrix x = unit_cube_points(20, 3, data);
    const double delta = contraction_radius(x);
    x(19, 0) = x(4, 0) + 0.1 * delta;
    x(19, 1) = x(4, 1);
    x(19, 2) = x(4, 2);
    Rng rng(1);
    const ContractionTrace trace = check_theorem1(x, {4, 19}, 0.9, 200, rng);
    CHECK(trace.back().gap < 0.05 * trace.front().gap);
}

TEST_CASE("theorem1 trace on a close pair") {
    Rng data(3);
    Matrix x = unit_cube_points(20, 3, data);
    const double delta = contraction_radius(x);
    for (std::size_t f = 0; f < 3; ++f) {
        x(19, f) = x(4, f) + (f == 0 ? 1e-6 * delta : 0.0);
    }
    Rng rng(1);
    const ContractionTrace trace = check_theorem1(x, {4, 19}, 0.9, 200, rng);
    REQUIRE(trace.size() == 201);
    CHECK(is_non_increasing(trace, 1e-9));
    CHECK(trace.back().gap < trace.front().gap);
    for (const auto& step : trace) {
        CHECK(step.gap >= 0.0);
        CHECK(step.recon_frobenius <= 1.0 + 1e-12);
    }
}

TEST_CASE("theorem1 with identical points and zero step size") {
    Rng data(5);
    Matrix x = unit_cube_points(10, 2, data);
    x(9, 0) = x(2, 0);
    x(9, 1) = x(2, 1);
    Rng rng(2);
    const ContractionTrace shrinking = check_theorem1(x, {2, 9}, 1.0, 100, rng);
    CHECK(is_non_increasing(shrinking, 1e-9));

    Rng rng2(2);
    const ContractionTrace frozen = check_theorem1(x, {2, 9}, 0.0, 20, rng2);
    for (const auto& step : frozen) {
        CHECK(step.gap == frozen.front().gap);
    }
}

TEST_CASE("theorem1 precondition errors") {
    Rng data(5);
    const Matrix x = unit_cube_points(10, 2, data);
    Rng rng(1);
    try {
        check_theorem1(x, {0, 1}, 0.5, 10, rng);
        FAIL("expected a precondition error");
    } catch (const InvalidInput& e) {
        CHECK(std::string(e.what()).find("delta") != std::string::npos);
    }
    Matrix close = x;
    close(1, 0) = close(0, 0);
    close(1, 1) = close(0, 1);
    CHECK_THROWS_AS(check_theorem1(close, {0, 1}, 1.5, 10, rng), InvalidInput);
    CHECK_THROWS_AS(check_theorem1(close, {0, 0}, 0.5, 10, rng), InvalidInput);
    CHECK_THROWS_AS(check_theorem1(close, {0, 10}, 0.5, 10, rng), InvalidInput);
}

TEST_CASE("theorem1 suite") {
    Rng rng(0);
    const Theorem1SuiteReport r = check_theorem1_suite(20, rng);
    CHECK(r.configurations == 20);
    CHECK(r.non_increasing == 20);
    CHECK(r.worst_step_ratio <= 1.0 + 1e-9);
}

TEST_CASE("is_non_increasing tolerance") {
    ContractionTrace t{{0, 1.0, 0.5}, {1, 1.0 + 5e-10, 0.5}, {2, 0.9, 0.5}};
    CHECK(is_non_increasing(t, 1e-9));
    t[1].gap = 1.0 + 2e-9;
    CHECK_FALSE(is_non_increasing(t, 1e-9));
}

TEST_CASE("summaries") {
    const MetricSummary odd = summarize({3.0, 1.0, 2.0});
    CHECK(odd.median == 2.0);
    CHECK(odd.min == 1.0);
    CHECK(odd.max == 3.0);
    CHECK(odd.count == 3);
    CHECK(summarize({4.0, 1.0, 2.0, 3.0}).median == 2.5);
}

TEST_CASE("identity embedding scores one everywhere") {
    Rng rng(2);
    Dataset ds = gen_synthetic(SyntheticKind::Olympic, rng);
    SuiteOptions options;
    options.pair_budget = 20000;
    options.cluster_to_rest = true;
    const EvalReport r = evaluate_embedding(ds, ds.x, options, 4);
    CHECK(r.metrics.at("distance_rho") == doctest::Approx(1.0));
    CHECK(r.metrics.at("centroid_rho") == doctest::Approx(1.0));
    CHECK(r.metrics.at("area_r") == doctest::Approx(1.0));
    for (int c = 0; c < 5; ++c) {
        CHECK(r.metrics.at("cluster_rest_rho." + std::to_string(c)) == doctest::Approx(1.0));
    }
}

TEST_CASE("preservation suite is deterministic across thread counts") {
    Rng rng(1);
    const Dataset ds = gen_synthetic(SyntheticKind::Spiral, rng);
    ModelConfig config;
    config.epochs = 15;
    SuiteOptions serial;
    serial.base_seed = 10;
    serial.threads = 1;
    SuiteOptions parallel = serial;
    parallel.threads = 3;
    const SuiteResult a = run_preservation_suite(ds, config, 3, serial);
    const SuiteResult b = run_preservation_suite(ds, config, 3, parallel);
    REQUIRE(a.runs.size() == 3);
    for (std::size_t r = 0; r < 3; ++r) {
        CHECK(a.runs[r].seed == 10 + r);
        CHECK(a.runs[r].metrics == b.runs[r].metrics);
        CHECK(a.runs[r].config_hash == b.runs[r].config_hash);
    }
    CHECK(a.summary.at("distance_rho").median == b.summary.at("distance_rho").median);
    CHECK(a.summary.at("distance_rho").count == 3);
    CHECK(a.summary.count("centroid_rho") == 1);
    CHECK_THROWS_AS(run_preservation_suite(ds, config, 0, serial), InvalidInput);
}

}
