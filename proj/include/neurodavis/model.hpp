#ifndef NEURODAVIS_MODEL_HPP
#define NEURODAVIS_MODEL_HPP

#include "neurodavis/matrix.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

/**
 * @file model.hpp
 *
 * @brief The neural embedding network.
 *
 * Every training sample i owns a trainable latent vector y_i (the latent layer
 * output for the one-hot input e_i). The latent vector is decoded through
 * ReLU hidden layers and a linear reconstruction layer back to the input
 * space, and the latent vectors themselves are learned jointly with the
 * decoder by minimizing
 *
 *     (1/b) sum_i |x_i - x~_i|^2
 *   + (alpha/b) sum_{layers j <= l+1} sum_i |h_ji|_2
 *   + beta sum_{j <= l+1} |W_j|_F
 *
 * over a batch of b samples. The one-hot input is realized as a row lookup
 * into `Model::latent`, which stores W_1 e_i + b_1 fused per sample.
 *
 * Matrices follow the row-vector convention: a layer maps h (1 x in) to
 * h W + b with W of shape in x out.
 */

namespace neurodavis {

struct ConvergencePolicy {
    std::size_t window = 20;
    double rel_tol = 1e-5;
};

struct ModelConfig {
    std::size_t latent_dim = 2;
    /// Unset means two hidden layers of width clamp(ceil(d/2), 16, 256).
    std::optional<std::vector<std::size_t>> hidden_widths;
    double alpha = 1e-6;
    double beta = 1e-4;
    double learning_rate = 1e-3;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    std::size_t epochs = 1000;
    /// Unset means min(n, 64).
    std::optional<std::size_t> batch_size;
    std::uint64_t seed = 0;
    /// Unset disables early stopping.
    std::optional<ConvergencePolicy> convergence = ConvergencePolicy{};
};

/// Throws `InvalidConfig` when a field is out of range.
void validate(const ModelConfig& config);
std::vector<std::size_t> resolve_hidden_widths(const ModelConfig& config, std::size_t d);
std::size_t resolve_batch_size(const ModelConfig& config, std::size_t n);

struct DenseLayer {
    Matrix weights;            ///< in x out
    std::vector<double> bias;  ///< out
};

struct AdamState {
    Matrix latent_m;
    Matrix latent_v;
    std::vector<DenseLayer> layers_m;
    std::vector<DenseLayer> layers_v;
    std::uint64_t step = 0;
};

struct Model {
    Matrix latent;                  ///< n x k, row i is the latent vector of sample i
    std::vector<DenseLayer> layers;  ///< hidden layers, then the reconstruction layer
    AdamState adam;

    std::size_t samples() const { return latent.rows(); }
    std::size_t latent_dim() const { return latent.cols(); }
    std::size_t hidden_count() const { return layers.size() - 1; }
    std::size_t output_dim() const { return layers.back().weights.cols(); }
    const DenseLayer& reconstruction() const { return layers.back(); }

    friend bool operator==(const Model& a, const Model& b);
};

struct ForwardTrace {
    std::vector<std::size_t> indices;
    /// pre[0] is the latent layer; pre[j] for j >= 1 is the input to layers[j-1].
    std::vector<Matrix> pre;
    /// post[j] = ReLU(pre[j]) for hidden layers, identity for latent and reconstruction.
    std::vector<Matrix> post;

    const Matrix& reconstruction() const { return post.back(); }
};

struct LossTerms {
    double total = 0.0;
    double reconstruction = 0.0;
    double activity = 0.0;
    double weight = 0.0;
};

/// Parameter-shaped gradient bundle; `latent` is n x k with zero rows outside the batch.
struct Gradients {
    Matrix latent;
    std::vector<DenseLayer> layers;
};

struct TrainReport {
    double initial_loss = 0.0;
    std::vector<LossTerms> epochs;
    std::size_t epochs_run = 0;
    bool converged = false;
    double wall_seconds = 0.0;
};

/// Raised by `fit` when the loss becomes non-finite; carries the history so far.
class TrainingDiverged : public std::runtime_error {
public:
    TrainingDiverged(const std::string& what, TrainReport report)
        : std::runtime_error(what), report_(std::move(report)) {}

    const TrainReport& report() const { return report_; }

private:
    TrainReport report_;
};

/**
 * Fresh parameters: latent entries uniform in (-0.01, 0.01), decoder weights
 * Glorot-uniform, biases and Adam moments zero.
 */
Model init_model(const ModelConfig& config, std::size_t n, std::size_t d);

ForwardTrace forward(const Model& model, std::span<const std::size_t> indices);

/// Rows of `x` selected by `indices`.
Matrix gather_rows(const Matrix& x, std::span<const std::size_t> indices);

/**
 * Objective for one batch. `x_batch` is row-aligned with `trace.indices`.
 *
 * The latent-layer weight norm covers the latent rows present in the batch,
 * which are the only columns of W_1 the batch selects; with the full data as
 * the batch this is the Frobenius norm of the whole table.
 */
LossTerms loss(const ForwardTrace& trace, const Matrix& x_batch, const Model& model, const ModelConfig& config);

Gradients gradients(const Model& model, std::span<const std::size_t> indices, const Matrix& x_batch,
                    const ModelConfig& config);

/// Bias-corrected Adam over every parameter; increments the step counter.
void adam_step(Model& model, const Gradients& grads, const ModelConfig& config);

struct FitResult {
    Model model;
    TrainReport report;
};

FitResult fit(const Matrix& x, const ModelConfig& config);

/// Full-data loss (batch = every sample).
LossTerms full_loss(const Model& model, const Matrix& x, const ModelConfig& config);

Matrix embed(const Model& model);
Matrix reconstruct(const Model& model);

}  // namespace neurodavis

#endif
