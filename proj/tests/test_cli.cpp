#include "cli.hpp"

#include "neurodavis/datasets.hpp"
#include "neurodavis/metrics.hpp"
#include "neurodavis/model_io.hpp"

#include "support/temp_dir.hpp"

#include "doctest.h"
#include "json.hpp"

#include <sstream>
#include <string>
#include <vector>

using namespace neurodavis;
using nlohmann::json;

namespace {

struct Outcome {
    int code = 0;
    std::string out;
    std::string err;
};

Outcome run(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

std::size_t count_of(const std::string& text, const std::string& needle) {
    std::size_t count = 0;
    for (std::size_t pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos + 1)) {
        ++count;
    }
    return count;
}

json read_json(const std::string& path) { return json::parse(read_file(path)); }

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("gen writes the requested dataset") {
    TempDir dir;
    const auto path = dir / "spiral.csv";
    const Outcome r = run({"gen", "--kind", "spiral", "--seed", "7", "--out", path});
    REQUIRE(r.code == cli::kOk);
    const Dataset ds = load_csv(path, LabelColumn{std::string("label")}, true);
    CHECK(ds.samples() == 312);
    CHECK(ds.class_count() == 3);

    const auto again = dir / "again.csv";
    REQUIRE(run({"gen", "--kind", "spiral", "--seed", "7", "--out", again}).code == cli::kOk);
    CHECK(read_file(path) == read_file(again));

    const auto lifted = dir / "lifted.csv";
    REQUIRE(run({"gen", "--kind", "spiral", "--seed", "7", "--lift9", "--out", lifted}).code == cli::kOk);
    CHECK(load_csv(lifted, LabelColumn{std::string("label")}, true).features() == 9);
}

TEST_CASE("gen errors") {
    TempDir dir;
    const Outcome bad = run({"gen", "--kind", "circles", "--out", dir / "x.csv"});
    CHECK(bad.code == cli::kUsage);
    CHECK(bad.err.find("Usage") != std::string::npos);
    const Outcome unwritable = run({"gen", "--kind", "spiral", "--out", dir / "missing/dir/x.csv"});
    CHECK(unwritable.code == cli::kUsage);
    CHECK(unwritable.err.find("cannot write") != std::string::npos);
    CHECK(run({"gen", "--kind", "spiral", "--out", dir / "x.csv", "--bogus"}).code == cli::kUsage);
    CHECK(run({}).code == cli::kUsage);
    CHECK(run({"frobnicate"}).code == cli::kUsage);
}

TEST_CASE("help exits cleanly") {
    const Outcome r = run({"--help"});
    CHECK(r.code == cli::kOk);
    CHECK(r.out.find("fit") != std::string::npos);
    CHECK(run({"fit", "--help"}).code == cli::kOk);
}

TEST_CASE("fit writes checkpoint, embedding and report") {
    TempDir dir;
    const auto data = dir / "ring.csv";
    REQUIRE(run({"gen", "--kind", "elliptic_ring", "--seed", "1", "--out", data}).code == cli::kOk);
    const std::vector<std::string> args{"fit",     "--in",     data,   "--k",     "2",      "--seed", "1",
                                        "--hidden", "64,64",   "--alpha", "1e-6", "--beta", "1e-4",
                                        "--epochs", "5"};
    const Outcome r = run(args);
    REQUIRE(r.code == cli::kOk);
    const Dataset emb = load_csv(dir / "ring.embedding.csv", std::nullopt, true);
    CHECK(emb.samples() == 1100);
    CHECK(emb.features() == 2);
    CHECK(emb.feature_names == std::vector<std::string>{"z0", "z1"});

    const json report = read_json(dir / "ring.fit.json");
    CHECK(report.at("config").at("hidden_widths") == json::array({64, 64}));
    CHECK(report.at("config").at("alpha") == 1e-6);
    CHECK(report.at("config").at("beta") == 1e-4);
    CHECK(report.at("config").at("seed") == 1);
    CHECK(report.at("samples") == 1100);
    CHECK(report.at("train").at("epochs_run") == 5);
    CHECK(report.at("config_hash").get<std::string>().size() == 16);

    const Checkpoint ck = load_checkpoint(dir / "ring.model.json");
    CHECK(embed(ck.model) == emb.x);

    const std::string first = read_file(dir / "ring.embedding.csv");
    REQUIRE(run(args).code == cli::kOk);
    CHECK(read_file(dir / "ring.embedding.csv") == first);
}

TEST_CASE("fit explicit outputs, hidden none and bad flags") {
    TempDir dir;
    const auto data = dir / "s.csv";
    REQUIRE(run({"gen", "--kind", "spiral", "--out", data}).code == cli::kOk);
    const Outcome r = run({"fit", "--in", data, "--hidden", "none", "--epochs", "3", "--model-out", dir / "m.json",
                           "--embedding-out", dir / "e.csv", "--report-out", dir / "r.json", "--standardize",
                           "none", "--batch-size", "500"});
    REQUIRE(r.code == cli::kOk);
    const json report = read_json(dir / "r.json");
    CHECK(report.at("config").at("hidden_widths") == json::array());
    CHECK(report.at("config").at("batch_size") == 312);
    CHECK(report.at("standardize") == "none");

    CHECK(run({"fit", "--in", data, "--hidden", "4,x"}).code == cli::kUsage);
    CHECK(run({"fit", "--in", data, "--k", "0"}).code == cli::kUsage);
    CHECK(run({"fit", "--in", data, "--standardize", "zscore"}).code == cli::kUsage);
    CHECK(run({"fit", "--in", dir / "nothing.csv"}).code == cli::kUsage);
    CHECK(run({"fit", "--in", dir.file("bad.csv", "a,b\n1,2\n3,zz\n").string()}).code == cli::kUsage);
}

TEST_CASE("fit divergence exits 3 and still writes the report") {
    TempDir dir;
    const auto data = dir / "s.csv";
    REQUIRE(run({"gen", "--kind", "spiral", "--out", data}).code == cli::kOk);
    const Outcome r = run({"fit", "--in", data, "--lr", "1e300", "--epochs", "20"});
    CHECK(r.code == cli::kNumeric);
    const json report = read_json(dir / "s.fit.json");
    CHECK(report.at("status") == "diverged");
    CHECK(report.at("train").at("epochs_run").get<int>() >= 1);
}

TEST_CASE("eval against itself and with selected metrics") {
    TempDir dir;
    const auto data = dir / "w.csv";
    REQUIRE(run({"gen", "--kind", "world_map", "--out", data}).code == cli::kOk);
    const Outcome self = run({"eval", "--high", data, "--low", data, "--out", dir / "self.json"});
    REQUIRE(self.code == cli::kOk);
    const json s = read_json(dir / "self.json");
    CHECK(s.at("runs").at(0).at("metrics").at("distance_rho") == 1.0);

    const Outcome three = run({"eval", "--high", data, "--low", data, "--metrics", "distance,centroid,area",
                               "--pair-budget", "5000"});
    REQUIRE(three.code == cli::kOk);
    const json j = json::parse(three.out);
    const auto& metrics = j.at("runs").at(0).at("metrics");
    CHECK(metrics.size() == 3);
    CHECK(metrics.contains("distance_rho"));
    CHECK(metrics.contains("centroid_rho"));
    CHECK(metrics.contains("area_r"));
    CHECK(j.at("pairs") == 5000);

    const Outcome all = run({"eval", "--high", data, "--low", data, "--metrics",
                             "distance,centroid,area,knn,kmeans,agglomerative,cluster_rest", "--pair-budget", "2000"});
    REQUIRE(all.code == cli::kOk);
    const json all_json = json::parse(all.out);
    const auto& every = all_json.at("runs").at(0).at("metrics");
    CHECK(every.at("knn_accuracy").get<double>() > 0.9);
    CHECK(every.at("kmeans_ari").get<double>() > 0.5);
    CHECK(every.contains("agglomerative_fmi"));
    CHECK(every.contains("cluster_rest_rho.4"));
}

TEST_CASE("eval compares run sets with a rank test") {
    TempDir dir;
    const auto data = dir / "s.csv";
    REQUIRE(run({"gen", "--kind", "spiral", "--out", data}).code == cli::kOk);
    const Dataset source = load_csv(data, LabelColumn{std::string("label")}, true);
    std::vector<std::string> good, noisy;
    for (int r = 0; r < 4; ++r) {
        Rng rng(static_cast<std::uint64_t>(r));
        Dataset a;
        a.x = source.x;
        Dataset b;
        b.x = source.x;
        for (std::size_t i = 0; i < source.x.size(); ++i) {
            a.x.values()[i] += rng.normal(0.0, 0.05);
            b.x.values()[i] += rng.normal(0.0, 1.5);
        }
        good.push_back(dir / ("good" + std::to_string(r) + ".csv"));
        noisy.push_back(dir / ("noisy" + std::to_string(r) + ".csv"));
        save_csv(a, good.back());
        save_csv(b, noisy.back());
    }
    std::vector<std::string> args{"eval", "--high", data};
    for (const auto& g : good) {
        args.insert(args.end(), {"--low", g});
    }
    for (const auto& n : noisy) {
        args.insert(args.end(), {"--compare", n});
    }
    const Outcome r = run(args);
    REQUIRE(r.code == cli::kOk);
    const json j = json::parse(r.out);
    const auto& mw = j.at("mann_whitney").at("distance_rho");

    std::vector<double> a, b;
    for (const auto& run_json : j.at("runs")) {
        a.push_back(run_json.at("metrics").at("distance_rho"));
    }
    for (const auto& run_json : j.at("compare_runs")) {
        b.push_back(run_json.at("metrics").at("distance_rho"));
    }
    const MannWhitneyResult expected = mann_whitney_u(a, b);
    CHECK(mw.at("u") == expected.u);
    CHECK(mw.at("p_two_sided") == expected.p_two_sided);
    CHECK(mw.at("u") == 16.0);
}

TEST_CASE("eval errors") {
    TempDir dir;
    const auto data = dir / "s.csv";
    REQUIRE(run({"gen", "--kind", "spiral", "--out", data}).code == cli::kOk);
    const auto other = dir / "o.csv";
    REQUIRE(run({"gen", "--kind", "elliptic_ring", "--out", other}).code == cli::kOk);
    const Outcome mismatch = run({"eval", "--high", data, "--low", other});
    CHECK(mismatch.code == cli::kUsage);
    CHECK(mismatch.err.find("row count mismatch") != std::string::npos);
    CHECK(run({"eval", "--high", data, "--low", data, "--metrics", "distance,magic"}).code == cli::kUsage);
    CHECK(run({"eval", "--high", data, "--low", data, "--no-labels", "--metrics", "centroid"}).code == cli::kUsage);
}

TEST_CASE("plot writes one circle per row") {
    TempDir dir;
    const auto data = dir / "s.csv";
    REQUIRE(run({"gen", "--kind", "spiral", "--out", data}).code == cli::kOk);
    REQUIRE(run({"fit", "--in", data, "--epochs", "2"}).code == cli::kOk);
    const auto svg = dir / "s.svg";
    const Outcome r = run({"plot", "--embedding", dir / "s.embedding.csv", "--labels", data, "--out", svg,
                           "--title", "spiral"});
    REQUIRE(r.code == cli::kOk);
    const std::string text = read_file(svg);
    CHECK(count_of(text, "<circle") == 312);
    const auto svg2 = dir / "s2.svg";
    REQUIRE(run({"plot", "--embedding", dir / "s.embedding.csv", "--labels", data, "--out", svg2, "--title",
                 "spiral"})
                .code == cli::kOk);
    CHECK(read_file(svg2) == text);
}

TEST_CASE("plot errors") {
    TempDir dir;
    const auto lifted = dir / "l.csv";
    REQUIRE(run({"gen", "--kind", "spiral", "--lift9", "--out", lifted}).code == cli::kOk);
    CHECK(run({"plot", "--embedding", lifted, "--out", dir / "x.svg"}).code == cli::kUsage);
    const auto empty = dir.file("empty.csv", "z0,z1\n");
    CHECK(run({"plot", "--embedding", empty.string(), "--out", dir / "x.svg"}).code == cli::kUsage);
    const auto data = dir / "s.csv";
    REQUIRE(run({"gen", "--kind", "spiral", "--out", data}).code == cli::kOk);
    const auto ring = dir / "r.csv";
    REQUIRE(run({"gen", "--kind", "elliptic_ring", "--out", ring}).code == cli::kOk);
    CHECK(run({"plot", "--embedding", data, "--labels", ring, "--out", dir / "x.svg"}).code == cli::kUsage);
}

TEST_CASE("check runs the verification suites") {
    const Outcome lemma = run({"check", "--which", "lemma1", "--seed", "0"});
    CHECK(lemma.code == cli::kOk);
    CHECK(lemma.out.find("lemma1: PASS") != std::string::npos);
    const Outcome grads = run({"check", "--which", "gradients"});
    CHECK(grads.code == cli::kOk);
    CHECK(grads.out.find("max relative error") != std::string::npos);
    const Outcome thm = run({"check", "--which", "theorem1", "--trials", "5"});
    CHECK(thm.code == cli::kOk);
    CHECK(thm.out.find("5/5 traces non-increasing") != std::string::npos);
    CHECK(run({"check", "--which", "lemma2"}).code == cli::kUsage);
}

TEST_CASE("suite and sweep") {
    TempDir dir;
    const Outcome suite = run({"suite", "--kind", "spiral", "--runs", "2", "--epochs", "5", "--out", dir / "suite.json"});
    REQUIRE(suite.code == cli::kOk);
    const json j = read_json(dir / "suite.json");
    CHECK(j.at("runs").size() == 2);
    CHECK(j.at("summary").at("distance_rho").at("count") == 2);

    const Outcome sweep = run({"sweep", "--kind", "spiral", "--runs", "1", "--epochs", "3", "--alphas", "0,1e-3",
                               "--betas", "1e-4", "--out", dir / "sweep.json"});
    REQUIRE(sweep.code == cli::kOk);
    CHECK(read_json(dir / "sweep.json").at("cells").size() == 2);
    CHECK(run({"sweep", "--kind", "spiral", "--alphas", "a,b"}).code == cli::kUsage);
    CHECK(run({"suite"}).code == cli::kUsage);
    CHECK(run({"suite", "--kind", "spiral", "--in", "x.csv"}).code == cli::kUsage);
}

}
