#include "neurodavis/model.hpp"

#include "neurodavis/error.hpp"
#include "neurodavis/rng.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <string>

namespace neurodavis {

namespace {

constexpr double kLatentInitBound = 0.01;

enum Stream : std::uint64_t { kInitStream = 1, kShuffleStream = 2 };

Matrix affine(const Matrix& h, const DenseLayer& layer) {
    Matrix out = matmul(h, layer.weights);
    for (std::size_t r = 0; r < out.rows(); ++r) {
        auto row = out.row(r);
        for (std::size_t c = 0; c < row.size(); ++c) {
            row[c] += layer.bias[c];
        }
    }
    return out;
}

double row_norm(std::span<const double> row) {
    return std::sqrt(dot(row, row));
}

DenseLayer zeros_like(const DenseLayer& layer) {
    return {Matrix(layer.weights.rows(), layer.weights.cols()), std::vector<double>(layer.bias.size(), 0.0)};
}

std::vector<std::size_t> unique_sorted(std::span<const std::size_t> indices) {
    std::vector<std::size_t> out(indices.begin(), indices.end());
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

double batch_latent_norm(const Model& model, const std::vector<std::size_t>& rows) {
    double sum = 0.0;
    for (std::size_t r : rows) {
        auto y = model.latent.row(r);
        sum += dot(y, y);
    }
    return std::sqrt(sum);
}

void adam_update(std::span<double> param, std::span<const double> grad, std::span<double> m, std::span<double> v,
                 const ModelConfig& config, double correction1, double correction2) {
    const double b1 = config.adam_beta1;
    const double b2 = config.adam_beta2;
    for (std::size_t i = 0; i < param.size(); ++i) {
        const double g = grad[i];
        m[i] = b1 * m[i] + (1.0 - b1) * g;
        v[i] = b2 * v[i] + (1.0 - b2) * g * g;
        const double m_hat = m[i] / correction1;
        const double v_hat = v[i] / correction2;
        param[i] -= config.learning_rate * m_hat / (std::sqrt(v_hat) + config.adam_eps);
    }
}

}  // namespace

bool operator==(const Model& a, const Model& b) {
    if (a.latent != b.latent || a.layers.size() != b.layers.size() || a.adam.step != b.adam.step ||
        a.adam.latent_m != b.adam.latent_m || a.adam.latent_v != b.adam.latent_v) {
        return false;
    }
    for (std::size_t j = 0; j < a.layers.size(); ++j) {
        if (a.layers[j].weights != b.layers[j].weights || a.layers[j].bias != b.layers[j].bias ||
            a.adam.layers_m[j].weights != b.adam.layers_m[j].weights ||
            a.adam.layers_m[j].bias != b.adam.layers_m[j].bias ||
            a.adam.layers_v[j].weights != b.adam.layers_v[j].weights ||
            a.adam.layers_v[j].bias != b.adam.layers_v[j].bias) {
            return false;
        }
    }
    return true;
}

void validate(const ModelConfig& config) {
    if (config.latent_dim < 1) {
        throw InvalidConfig("latent_dim must be at least 1");
    }
    if (config.hidden_widths) {
        for (std::size_t w : *config.hidden_widths) {
            if (w == 0) {
                throw InvalidConfig("hidden layer width must be positive");
            }
        }
    }
    if (!(config.alpha >= 0.0) || !(config.beta >= 0.0)) {
        throw InvalidConfig("alpha and beta must be non-negative");
    }
    if (!(config.learning_rate > 0.0)) {
        throw InvalidConfig("learning_rate must be positive");
    }
    if (!(config.adam_beta1 >= 0.0 && config.adam_beta1 < 1.0) ||
        !(config.adam_beta2 >= 0.0 && config.adam_beta2 < 1.0) || !(config.adam_eps > 0.0)) {
        throw InvalidConfig("adam betas must lie in [0, 1) and eps must be positive");
    }
    if (config.batch_size && *config.batch_size < 1) {
        throw InvalidConfig("batch_size must be at least 1");
    }
    if (config.convergence && config.convergence->window < 2) {
        throw InvalidConfig("convergence window must be at least 2");
    }
}

std::vector<std::size_t> resolve_hidden_widths(const ModelConfig& config, std::size_t d) {
    if (config.hidden_widths) {
        return *config.hidden_widths;
    }
    const std::size_t half = (d + 1) / 2;
    const std::size_t width = std::clamp<std::size_t>(half, 16, 256);
    return {width, width};
}

std::size_t resolve_batch_size(const ModelConfig& config, std::size_t n) {
    return config.batch_size ? std::min(*config.batch_size, n) : std::min<std::size_t>(n, 64);
}

Model init_model(const ModelConfig& config, std::size_t n, std::size_t d) {
    validate(config);
    if (n < 1 || d < 1) {
        throw InvalidInput("init_model needs n >= 1 and d >= 1");
    }
    Rng rng = Rng(config.seed).fork(kInitStream);
    const std::size_t k = config.latent_dim;

    Model model;
    model.latent = Matrix(n, k);
    for (double& v : model.latent.values()) {
        v = rng.uniform(-kLatentInitBound, kLatentInitBound);
    }

    std::vector<std::size_t> widths = resolve_hidden_widths(config, d);
    widths.insert(widths.begin(), k);
    widths.push_back(d);
    for (std::size_t j = 0; j + 1 < widths.size(); ++j) {
        const std::size_t fan_in = widths[j];
        const std::size_t fan_out = widths[j + 1];
        const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        DenseLayer layer{Matrix(fan_in, fan_out), std::vector<double>(fan_out, 0.0)};
        for (double& v : layer.weights.values()) {
            v = rng.uniform(-limit, limit);
        }
        model.layers.push_back(std::move(layer));
    }

    model.adam.latent_m = Matrix(n, k);
    model.adam.latent_v = Matrix(n, k);
    for (const auto& layer : model.layers) {
        model.adam.layers_m.push_back(zeros_like(layer));
        model.adam.layers_v.push_back(zeros_like(layer));
    }
    return model;
}

Matrix gather_rows(const Matrix& x, std::span<const std::size_t> indices) {
    Matrix out(indices.size(), x.cols());
    for (std::size_t r = 0; r < indices.size(); ++r) {
        if (indices[r] >= x.rows()) {
            throw InvalidInput("row index " + std::to_string(indices[r]) + " out of range for " +
                               std::to_string(x.rows()) + " rows");
        }
        std::copy_n(x.row(indices[r]).begin(), x.cols(), out.row(r).begin());
    }
    return out;
}

ForwardTrace forward(const Model& model, std::span<const std::size_t> indices) {
    ForwardTrace trace;
    trace.indices.assign(indices.begin(), indices.end());
    Matrix latent = gather_rows(model.latent, indices);
    trace.pre.push_back(latent);
    trace.post.push_back(std::move(latent));

    const std::size_t hidden = model.hidden_count();
    for (std::size_t j = 0; j < model.layers.size(); ++j) {
        Matrix a = affine(trace.post.back(), model.layers[j]);
        Matrix h = a;
        if (j < hidden) {
            for (double& v : h.values()) {
                v = std::max(0.0, v);
            }
        }
        trace.pre.push_back(std::move(a));
        trace.post.push_back(std::move(h));
    }
    return trace;
}

LossTerms loss(const ForwardTrace& trace, const Matrix& x_batch, const Model& model, const ModelConfig& config) {
    const Matrix& recon = trace.reconstruction();
    if (x_batch.rows() != recon.rows() || x_batch.cols() != recon.cols()) {
        throw InvalidInput("loss: batch data and reconstruction shapes differ");
    }
    const auto b = static_cast<double>(x_batch.rows());
    LossTerms terms;

    double sq = 0.0;
    for (std::size_t i = 0; i < x_batch.size(); ++i) {
        const double r = x_batch.values()[i] - recon.values()[i];
        sq += r * r;
    }
    terms.reconstruction = sq / b;

    if (config.alpha != 0.0) {
        // latent layer plus every hidden layer; the reconstruction layer is excluded
        double activity = 0.0;
        for (std::size_t j = 0; j + 1 < trace.post.size(); ++j) {
            for (std::size_t i = 0; i < trace.post[j].rows(); ++i) {
                activity += row_norm(trace.post[j].row(i));
            }
        }
        terms.activity = config.alpha * activity / b;
    }

    if (config.beta != 0.0) {
        double weight = batch_latent_norm(model, unique_sorted(trace.indices));
        for (std::size_t j = 0; j < model.hidden_count(); ++j) {
            weight += frobenius_norm(model.layers[j].weights);
        }
        terms.weight = config.beta * weight;
    }

    terms.total = terms.reconstruction + terms.activity + terms.weight;
    return terms;
}

Gradients gradients(const Model& model, std::span<const std::size_t> indices, const Matrix& x_batch,
                    const ModelConfig& config) {
    const ForwardTrace trace = forward(model, indices);
    const Matrix& recon = trace.reconstruction();
    if (x_batch.rows() != recon.rows() || x_batch.cols() != recon.cols()) {
        throw InvalidInput("gradients: batch data and reconstruction shapes differ");
    }
    const auto b = static_cast<double>(indices.size());
    const std::size_t hidden = model.hidden_count();

    Gradients grads;
    grads.latent = Matrix(model.latent.rows(), model.latent.cols());
    grads.layers.reserve(model.layers.size());
    for (const auto& layer : model.layers) {
        grads.layers.push_back(zeros_like(layer));
    }

    // dL/dh for the reconstruction layer
    Matrix delta = recon - x_batch;
    for (double& v : delta.values()) {
        v *= 2.0 / b;
    }

    const double activity_scale = config.alpha / b;
    for (std::size_t jj = model.layers.size(); jj-- > 0;) {
        // delta holds dL/da for layers[jj]; layer input is post[jj]
        const Matrix& input = trace.post[jj];
        DenseLayer& g = grads.layers[jj];
        g.weights = transposed_matmul(input, delta);
        for (std::size_t r = 0; r < delta.rows(); ++r) {
            auto row = delta.row(r);
            for (std::size_t c = 0; c < row.size(); ++c) {
                g.bias[c] += row[c];
            }
        }
        Matrix upstream = matmul_transposed(delta, model.layers[jj].weights);

        if (activity_scale != 0.0) {
            for (std::size_t i = 0; i < input.rows(); ++i) {
                const double norm = row_norm(input.row(i));
                if (norm > 0.0) {
                    auto src = input.row(i);
                    auto dst = upstream.row(i);
                    for (std::size_t c = 0; c < dst.size(); ++c) {
                        dst[c] += activity_scale * src[c] / norm;
                    }
                }
            }
        }

        if (jj > 0) {
            // input is a hidden ReLU output; subgradient 0 at the kink
            const Matrix& pre = trace.pre[jj];
            for (std::size_t i = 0; i < upstream.size(); ++i) {
                if (!(pre.values()[i] > 0.0)) {
                    upstream.values()[i] = 0.0;
                }
            }
        } else {
            for (std::size_t r = 0; r < indices.size(); ++r) {
                auto dst = grads.latent.row(indices[r]);
                auto src = upstream.row(r);
                for (std::size_t c = 0; c < dst.size(); ++c) {
                    dst[c] += src[c];
                }
            }
        }
        delta = std::move(upstream);
    }

    if (config.beta != 0.0) {
        const auto rows = unique_sorted(indices);
        const double latent_norm = batch_latent_norm(model, rows);
        if (latent_norm > 0.0) {
            for (std::size_t r : rows) {
                auto dst = grads.latent.row(r);
                auto src = model.latent.row(r);
                for (std::size_t c = 0; c < dst.size(); ++c) {
                    dst[c] += config.beta * src[c] / latent_norm;
                }
            }
        }
        for (std::size_t j = 0; j < hidden; ++j) {
            const Matrix& w = model.layers[j].weights;
            const double norm = frobenius_norm(w);
            if (norm > 0.0) {
                auto dst = grads.layers[j].weights.values();
                auto src = w.values();
                for (std::size_t i = 0; i < dst.size(); ++i) {
                    dst[i] += config.beta * src[i] / norm;
                }
            }
        }
    }
    return grads;
}

void adam_step(Model& model, const Gradients& grads, const ModelConfig& config) {
    if (grads.layers.size() != model.layers.size() || grads.latent.rows() != model.latent.rows() ||
        grads.latent.cols() != model.latent.cols()) {
        throw InvalidInput("adam_step: gradient bundle does not match the model");
    }
    AdamState& s = model.adam;
    ++s.step;
    const auto t = static_cast<double>(s.step);
    const double c1 = 1.0 - std::pow(config.adam_beta1, t);
    const double c2 = 1.0 - std::pow(config.adam_beta2, t);

    adam_update(model.latent.values(), grads.latent.values(), s.latent_m.values(), s.latent_v.values(), config, c1,
                c2);
    for (std::size_t j = 0; j < model.layers.size(); ++j) {
        adam_update(model.layers[j].weights.values(), grads.layers[j].weights.values(),
                    s.layers_m[j].weights.values(), s.layers_v[j].weights.values(), config, c1, c2);
        adam_update(model.layers[j].bias, grads.layers[j].bias, s.layers_m[j].bias, s.layers_v[j].bias, config,
                    c1, c2);
    }
}

LossTerms full_loss(const Model& model, const Matrix& x, const ModelConfig& config) {
    std::vector<std::size_t> all(model.samples());
    std::iota(all.begin(), all.end(), 0);
    return loss(forward(model, all), x, model, config);
}

FitResult fit(const Matrix& x, const ModelConfig& config) {
    validate(config);
    if (x.rows() < 1 || x.cols() < 1) {
        throw InvalidInput("fit needs a non-empty data matrix");
    }
    if (!x.all_finite()) {
        throw InvalidInput("fit: data contains NaN or infinite values");
    }
    const auto start = std::chrono::steady_clock::now();
    const std::size_t n = x.rows();
    const std::size_t batch = resolve_batch_size(config, n);

    FitResult result{init_model(config, n, x.cols()), {}};
    Model& model = result.model;
    TrainReport& report = result.report;
    report.initial_loss = full_loss(model, x, config).total;

    Rng shuffler = Rng(config.seed).fork(kShuffleStream);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);

    auto elapsed = [&] {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    };

    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        shuffler.shuffle(std::span<std::size_t>(order));
        for (std::size_t lo = 0; lo < n; lo += batch) {
            const std::span<const std::size_t> idx(order.data() + lo, std::min(batch, n - lo));
            const Gradients grads = gradients(model, idx, gather_rows(x, idx), config);
            adam_step(model, grads, config);
        }

        const LossTerms terms = full_loss(model, x, config);
        report.epochs.push_back(terms);
        report.epochs_run = epoch + 1;
        if (!std::isfinite(terms.total)) {
            report.wall_seconds = elapsed();
            throw TrainingDiverged("training diverged at epoch " + std::to_string(epoch + 1), report);
        }

        if (config.convergence && report.epochs.size() > config.convergence->window) {
            const double then = report.epochs[report.epochs.size() - 1 - config.convergence->window].total;
            const double improvement = (then - terms.total) / std::max(std::abs(then), 1e-300);
            if (improvement < config.convergence->rel_tol) {
                report.converged = true;
                break;
            }
        }
    }
    report.wall_seconds = elapsed();
    return result;
}

Matrix embed(const Model& model) {
    return model.latent;
}

Matrix reconstruct(const Model& model) {
    std::vector<std::size_t> all(model.samples());
    std::iota(all.begin(), all.end(), 0);
    return forward(model, all).reconstruction();
}

}  // namespace neurodavis
