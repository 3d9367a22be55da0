#include "neurodavis/analysis.hpp"

#include "neurodavis/error.hpp"
#include "neurodavis/model_io.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <numeric>
#include <string>
#include <thread>

namespace neurodavis {

double lemma1_norm(const Matrix& w, double eta) {
    Matrix m = Matrix::identity(w.rows()) - eta * matmul_transposed(w, w);
    return spectral_norm(m);
}

Lemma1Report check_lemma1(std::size_t trials, std::size_t max_dim, Rng& rng) {
    if (trials < 1 || max_dim < 1) {
        throw InvalidInput("check_lemma1 needs trials >= 1 and max_dim >= 1");
    }
    Lemma1Report report;
    report.trials = trials;
    for (std::size_t t = 0; t < trials; ++t) {
        const auto rows = static_cast<std::size_t>(1 + rng.below(max_dim));
        const auto cols = static_cast<std::size_t>(1 + rng.below(max_dim));
        Matrix w(rows, cols);
        for (double& v : w.values()) {
            v = rng.normal();
        }
        const double norm = frobenius_norm(w);
        // target Frobenius norm in (0, 1], with a quarter of trials exactly on the boundary
        const double target = rng.below(4) == 0 ? 1.0 : 1.0 - rng.uniform();
        if (norm > 0.0) {
            w = (target / norm) * w;
        }
        const double eta = 1.0 - rng.uniform();
        const double value = lemma1_norm(w, eta);
        if (value > report.max_norm) {
            report.max_norm = value;
            report.worst_trial = t;
        }
    }
    return report;
}

double contraction_radius(const Matrix& x) {
    return 1e-3 * diameter(x);
}

namespace {

void project_frobenius(Matrix& w) {
    const double norm = frobenius_norm(w);
    if (norm > 1.0) {
        w = (1.0 / norm) * w;
    }
}

void descend(std::span<double> param, std::span<const double> grad, double eta) {
    for (std::size_t i = 0; i < param.size(); ++i) {
        param[i] -= eta * grad[i];
    }
}

}  // namespace

ContractionTrace check_theorem1(const Matrix& x, IndexPair pair, double eta, std::size_t steps, Rng& rng,
                                std::size_t latent_dim) {
    if (pair.i >= x.rows() || pair.j >= x.rows() || pair.i == pair.j) {
        throw InvalidInput("check_theorem1: pair must name two distinct rows");
    }
    if (!(eta >= 0.0 && eta <= 1.0)) {
        throw InvalidInput("check_theorem1: eta must lie in [0, 1], got " + std::to_string(eta));
    }
    const double delta = contraction_radius(x);
    const double separation = euclidean_distance(x.row(pair.i), x.row(pair.j));
    if (!(separation < delta || separation == 0.0)) {
        throw InvalidInput("check_theorem1: pair distance " + std::to_string(separation) +
                           " is not below delta = " + std::to_string(delta));
    }

    ModelConfig config;
    config.latent_dim = latent_dim;
    config.hidden_widths = std::vector<std::size_t>{};
    config.alpha = 0.0;
    config.beta = 0.0;
    config.seed = rng.next_u64();
    Model model = init_model(config, x.rows(), x.cols());
    project_frobenius(model.layers.back().weights);

    std::vector<std::size_t> all(x.rows());
    std::iota(all.begin(), all.end(), 0);

    ContractionTrace trace;
    auto record = [&](std::size_t step) {
        trace.push_back({step, euclidean_distance(model.latent.row(pair.i), model.latent.row(pair.j)),
                         frobenius_norm(model.layers.back().weights)});
    };
    record(0);
    for (std::size_t s = 1; s <= steps; ++s) {
        const Gradients g = gradients(model, all, x, config);
        descend(model.latent.values(), g.latent.values(), eta);
        for (std::size_t j = 0; j < model.layers.size(); ++j) {
            descend(model.layers[j].weights.values(), g.layers[j].weights.values(), eta);
            descend(model.layers[j].bias, g.layers[j].bias, eta);
        }
        project_frobenius(model.layers.back().weights);
        record(s);
    }
    return trace;
}

bool is_non_increasing(const ContractionTrace& trace, double rel_tol) {
    for (std::size_t t = 1; t < trace.size(); ++t) {
        if (trace[t].gap > trace[t - 1].gap * (1.0 + rel_tol)) {
            return false;
        }
    }
    return true;
}

Theorem1SuiteReport check_theorem1_suite(std::size_t configurations, Rng& rng, double rel_tol) {
    constexpr std::size_t kPoints = 20;
    constexpr std::size_t kSteps = 200;
    Theorem1SuiteReport report;
    for (std::size_t c = 0; c < configurations; ++c) {
        const auto d = static_cast<std::size_t>(2 + rng.below(5));
        Matrix base(kPoints - 1, d);
        for (double& v : base.values()) {
            v = rng.uniform();
        }
        const double radius = contraction_radius(base);
        const auto anchor = static_cast<std::size_t>(rng.below(kPoints - 1));

        std::vector<double> values(base.values().begin(), base.values().end());
        std::vector<double> direction(d);
        double norm = 0.0;
        for (double& v : direction) {
            v = rng.normal();
            norm += v * v;
        }
        for (std::size_t f = 0; f < d; ++f) {
            values.push_back(base(anchor, f) + 1e-6 * radius * direction[f] / std::sqrt(norm));
        }
        const Matrix x(kPoints, d, std::move(values));
        const double eta = rng.uniform(0.5, 1.0);

        const ContractionTrace trace = check_theorem1(x, {anchor, kPoints - 1}, eta, kSteps, rng);
        ++report.configurations;
        if (is_non_increasing(trace, rel_tol)) {
            ++report.non_increasing;
        }
        for (std::size_t t = 1; t < trace.size(); ++t) {
            if (trace[t - 1].gap > 0.0) {
                report.worst_step_ratio = std::max(report.worst_step_ratio, trace[t].gap / trace[t - 1].gap);
            }
        }
        const double shrink = trace.front().gap > 0.0 ? trace.back().gap / trace.front().gap : 0.0;
        report.min_final_over_initial = std::min(report.min_final_over_initial, shrink);
        report.max_final_over_initial = std::max(report.max_final_over_initial, shrink);
    }
    return report;
}

GradientCheckReport check_gradients(const Model& model, std::span<const std::size_t> indices, const Matrix& x_batch,
                                    const ModelConfig& config, double h) {
    const Gradients analytic = gradients(model, indices, x_batch, config);
    Model probe = model;
    auto batch_loss = [&] { return loss(forward(probe, indices), x_batch, probe, config).total; };

    GradientCheckReport report;
    auto compare = [&](std::span<double> param, std::span<const double> grad) {
        for (std::size_t i = 0; i < param.size(); ++i) {
            const double saved = param[i];
            param[i] = saved + h;
            const double up = batch_loss();
            param[i] = saved - h;
            const double down = batch_loss();
            param[i] = saved;
            const double numeric = (up - down) / (2.0 * h);
            const double abs_err = std::abs(numeric - grad[i]);
            const double scale = std::max({std::abs(numeric), std::abs(grad[i]), kGradientErrorFloor});
            report.max_abs_error = std::max(report.max_abs_error, abs_err);
            report.max_rel_error = std::max(report.max_rel_error, abs_err / scale);
            ++report.parameters;
        }
    };
    compare(probe.latent.values(), analytic.latent.values());
    for (std::size_t j = 0; j < probe.layers.size(); ++j) {
        compare(probe.layers[j].weights.values(), analytic.layers[j].weights.values());
        compare(probe.layers[j].bias, analytic.layers[j].bias);
    }
    return report;
}

GradientCheckReport check_gradient_suite(std::size_t models, Rng& rng) {
    GradientCheckReport total;
    for (std::size_t m = 0; m < models; ++m) {
        const auto n = static_cast<std::size_t>(1 + rng.below(6));
        const auto d = static_cast<std::size_t>(1 + rng.below(6));
        ModelConfig config;
        config.latent_dim = static_cast<std::size_t>(1 + rng.below(6));
        std::vector<std::size_t> widths(static_cast<std::size_t>(rng.below(3)));
        for (auto& w : widths) {
            w = static_cast<std::size_t>(1 + rng.below(6));
        }
        config.hidden_widths = widths;
        config.alpha = rng.below(2) == 0 ? 0.0 : 1e-3;
        config.beta = rng.below(2) == 0 ? 0.0 : 1e-3;
        config.seed = rng.next_u64();

        Model model = init_model(config, n, d);
        // spread the latent table and biases so activations sit away from the ReLU kink
        for (double& v : model.latent.values()) {
            v = rng.uniform(-1.0, 1.0);
        }
        for (auto& layer : model.layers) {
            for (double& b : layer.bias) {
                b = rng.uniform(-0.5, 0.5);
            }
        }
        Matrix x(n, d);
        for (double& v : x.values()) {
            v = rng.uniform(-1.0, 1.0);
        }

        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), 0);
        rng.shuffle(std::span<std::size_t>(order));
        order.resize(static_cast<std::size_t>(1 + rng.below(n)));

        const GradientCheckReport r = check_gradients(model, order, gather_rows(x, order), config);
        total.parameters += r.parameters;
        total.max_rel_error = std::max(total.max_rel_error, r.max_rel_error);
        total.max_abs_error = std::max(total.max_abs_error, r.max_abs_error);
    }
    return total;
}

MetricSummary summarize(std::vector<double> values) {
    MetricSummary s;
    s.count = values.size();
    if (values.empty()) {
        return s;
    }
    std::sort(values.begin(), values.end());
    const std::size_t mid = values.size() / 2;
    s.median = values.size() % 2 == 1 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
    s.min = values.front();
    s.max = values.back();
    return s;
}

std::size_t thread_cap() {
    if (const char* env = std::getenv("NEURODAVIS_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && v >= 1) {
            return static_cast<std::size_t>(v);
        }
    }
    return 1;
}

EvalReport evaluate_embedding(const Dataset& source, const Matrix& embedding, const SuiteOptions& options,
                              std::uint64_t seed) {
    EvalReport report;
    report.dataset = source.name;
    report.seed = seed;
    Rng pair_rng = Rng(seed).fork(0xD157);
    const std::uint64_t available = pair_count(source.samples());
    std::optional<std::uint64_t> budget = options.pair_budget;
    if (budget && *budget >= available) {
        budget.reset();
    }
    report.metrics["distance_rho"] = distance_preservation(source.x, embedding, budget, pair_rng);
    if (source.labels && source.class_count() >= 3) {
        const auto& labels = *source.labels;
        report.metrics["centroid_rho"] = centroid_distance_preservation(source.x, embedding, labels);
        if (source.features() == 2 && embedding.cols() == 2) {
            report.metrics["area_r"] = cluster_area_preservation(source.x, embedding, labels);
        }
        if (options.cluster_to_rest) {
            for (std::size_t c = 0; c < source.class_count(); ++c) {
                Rng cross_rng = Rng(seed).fork(0xC105 + c);
                report.metrics["cluster_rest_rho." + std::to_string(c)] = cluster_to_rest_preservation(
                    source.x, embedding, labels, static_cast<int>(c), options.pair_budget, cross_rng);
            }
        }
    }
    return report;
}

SuiteResult run_preservation_suite(const Dataset& dataset, const ModelConfig& config, std::size_t n_runs,
                                   const SuiteOptions& options) {
    if (n_runs < 1) {
        throw InvalidInput("run_preservation_suite needs at least one run");
    }
    const Dataset scaled = isotropic_standardize(dataset);
    SuiteResult result;
    result.runs.resize(n_runs);

    auto one_run = [&](std::size_t r) {
        ModelConfig run_config = config;
        run_config.seed = options.base_seed + r;
        const FitResult fitted = fit(scaled.x, run_config);
        EvalReport report = evaluate_embedding(dataset, embed(fitted.model), options, run_config.seed);
        report.config_hash = config_hash(run_config);
        result.runs[r] = std::move(report);
    };

    const std::size_t workers = std::min(n_runs, options.threads > 0 ? options.threads : thread_cap());
    if (workers <= 1) {
        for (std::size_t r = 0; r < n_runs; ++r) {
            one_run(r);
        }
    } else {
        std::atomic<std::size_t> next{0};
        std::exception_ptr failure;
        std::mutex failure_mutex;
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (std::size_t r = next++; r < n_runs; r = next++) {
                    try {
                        one_run(r);
                    } catch (...) {
                        std::lock_guard lock(failure_mutex);
                        if (!failure) {
                            failure = std::current_exception();
                        }
                    }
                }
            });
        }
        for (auto& t : pool) {
            t.join();
        }
        if (failure) {
            std::rethrow_exception(failure);
        }
    }

    std::map<std::string, std::vector<double>> columns;
    for (const auto& run : result.runs) {
        for (const auto& [name, value] : run.metrics) {
            columns[name].push_back(value);
        }
    }
    for (auto& [name, values] : columns) {
        result.summary[name] = summarize(std::move(values));
    }
    return result;
}

}  // namespace neurodavis
