#ifndef NEURODAVIS_ANALYSIS_HPP
#define NEURODAVIS_ANALYSIS_HPP

#include "neurodavis/datasets.hpp"
#include "neurodavis/metrics.hpp"
#include "neurodavis/model.hpp"

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace neurodavis {

// --- I - eta W W^T stays non-expansive ---------------------------------------

struct Lemma1Report {
    std::size_t trials = 0;
    double max_norm = 0.0;
    std::size_t worst_trial = 0;
};

/// Random W with |W|_F <= 1 and eta in (0, 1]; records the largest |I - eta W W^T|_2.
Lemma1Report check_lemma1(std::size_t trials, std::size_t max_dim, Rng& rng);

/// |I - eta W W^T|_2 for one W (rows x cols, product is rows x rows).
double lemma1_norm(const Matrix& w, double eta);

// --- neighbours contract under plain gradient descent ------------------------

struct ContractionStep {
    std::size_t step = 0;
    double gap = 0.0;
    double recon_frobenius = 0.0;
};

using ContractionTrace = std::vector<ContractionStep>;

/// Neighbourhood radius used as the hypothesis: 1e-3 times the data diameter.
double contraction_radius(const Matrix& x);

/**
 * Trains a decoder with no hidden layer and no regularization by full-batch
 * gradient descent (not Adam), rescaling the reconstruction weights to
 * Frobenius norm <= 1 at initialization and after every step, and records the
 * latent gap of `pair` before the first step and after each step.
 *
 * Throws `InvalidInput` naming the measured distance and the radius when the
 * pair is not within `contraction_radius(x)` or eta is outside [0, 1].
 */
ContractionTrace check_theorem1(const Matrix& x, IndexPair pair, double eta, std::size_t steps, Rng& rng,
                                std::size_t latent_dim = 2);

/// True when gap[t+1] <= gap[t] * (1 + rel_tol) for every step.
bool is_non_increasing(const ContractionTrace& trace, double rel_tol = 1e-9);

struct Theorem1SuiteReport {
    std::size_t configurations = 0;
    std::size_t non_increasing = 0;
    /// Largest gap[t+1] / gap[t] seen over all traces.
    double worst_step_ratio = 0.0;
    double min_final_over_initial = 1.0;
    double max_final_over_initial = 0.0;
};

/**
 * Seeded configurations of 20 points in [0, 1]^d (d in [2, 6]): 19 uniform
 * points plus a partner of one of them displaced by 1e-6 of the
 * neighbourhood radius, eta in [0.5, 1], 200 steps each.
 */
Theorem1SuiteReport check_theorem1_suite(std::size_t configurations, Rng& rng, double rel_tol = 1e-9);

// --- analytic vs finite-difference gradients ---------------------------------

struct GradientCheckReport {
    std::size_t parameters = 0;
    double max_rel_error = 0.0;
    double max_abs_error = 0.0;
};

/**
 * Relative error floor: differences are divided by max(|analytic|, |numeric|, this).
 * A central difference with step 1e-6 carries roughly 1e-9 of rounding noise,
 * so smaller denominators would measure that noise rather than the gradient.
 */
inline constexpr double kGradientErrorFloor = 1e-4;

/// Central differences of the batch loss with step `h` against `gradients`.
GradientCheckReport check_gradients(const Model& model, std::span<const std::size_t> indices, const Matrix& x_batch,
                                    const ModelConfig& config, double h = 1e-6);

/**
 * Random small problems: n, d, k in [1, 6], l in {0, 1, 2}, hidden widths
 * in [1, 6], alpha and beta each 0 or 1e-3, a random nonempty batch.
 */
GradientCheckReport check_gradient_suite(std::size_t models, Rng& rng);

// --- repeated-run structure preservation -------------------------------------

struct MetricSummary {
    double median = 0.0;
    double min = 0.0;
    double max = 0.0;
    std::size_t count = 0;
};

struct SuiteOptions {
    std::uint64_t base_seed = 0;
    std::optional<std::uint64_t> pair_budget = kDefaultPairBudget;
    /// Adds cluster_rest_rho.<class> for every class (cross-cluster distance preservation).
    bool cluster_to_rest = false;
    /// 0 means NEURODAVIS_THREADS or 1.
    std::size_t threads = 0;
};

struct SuiteResult {
    std::vector<EvalReport> runs;
    std::map<std::string, MetricSummary> summary;
};

MetricSummary summarize(std::vector<double> values);

/**
 * Structure scores of one embedding against its source data: distance_rho,
 * plus centroid_rho with >= 3 classes and area_r when both spaces are 2D.
 */
EvalReport evaluate_embedding(const Dataset& source, const Matrix& embedding, const SuiteOptions& options,
                              std::uint64_t seed);

/**
 * `n_runs` independent fits with seeds base_seed, base_seed + 1, ...; each run
 * fits the isotropically standardized data, embeds it and scores the
 * embedding against the original data. Runs are reported in seed order.
 */
SuiteResult run_preservation_suite(const Dataset& dataset, const ModelConfig& config, std::size_t n_runs,
                                   const SuiteOptions& options = {});

/// Thread cap from NEURODAVIS_THREADS, at least 1.
std::size_t thread_cap();

}  // namespace neurodavis

#endif
