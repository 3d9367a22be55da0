#ifndef NEURODAVIS_METRICS_HPP
#define NEURODAVIS_METRICS_HPP

#include "neurodavis/matrix.hpp"
#include "neurodavis/numerics.hpp"
#include "neurodavis/rng.hpp"

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace neurodavis {

/// Named metric values plus the provenance needed to reproduce them.
struct EvalReport {
    std::string dataset;
    std::uint64_t seed = 0;
    std::string config_hash;
    std::map<std::string, double> metrics;
};

/// 1-based ranks; tied values share the mean of the ranks they span.
std::vector<double> average_ranks(std::span<const double> values);

/// Throws `DegenerateInput` when either side has zero variance.
double pearson_r(std::span<const double> a, std::span<const double> b);
/// Pearson correlation of average-tie ranks.
double spearman_rho(std::span<const double> a, std::span<const double> b);

struct MannWhitneyResult {
    double u = 0.0;  ///< statistic for the first sample
    double z = 0.0;
    double p_two_sided = 1.0;
};

/**
 * Mann-Whitney U test, normal approximation.
 *
 * Variance is tie-corrected and a 0.5 continuity correction is applied
 * toward the mean. The approximation is coarse for tiny samples: with
 * n1 = n2 = 3 and total separation the exact two-sided p is 0.1 while the
 * approximation gives about 0.081.
 */
MannWhitneyResult mann_whitney_u(std::span<const double> a, std::span<const double> b);

/// Spearman correlation between matched pair distances in the two spaces.
double distance_preservation(const Matrix& high, const Matrix& low, const std::vector<IndexPair>& pairs);
/// Same, selecting the pairs first (all pairs when `pair_budget` is unset).
double distance_preservation(const Matrix& high, const Matrix& low, std::optional<std::uint64_t> pair_budget,
                             Rng& rng);

/// Per-class mean rows, indexed by class id.
Matrix class_centroids(const Matrix& x, std::span<const int> labels);

/// Spearman correlation between pairwise class-centroid distances; needs >= 3 classes.
double centroid_distance_preservation(const Matrix& high, const Matrix& low, std::span<const int> labels);

/// Axis-aligned bounding-rectangle area of each class in a 2D space.
std::vector<double> class_box_areas(const Matrix& x2d, std::span<const int> labels);

/// Pearson correlation between per-class bounding-rectangle areas; both spaces 2D, >= 3 classes.
double cluster_area_preservation(const Matrix& high, const Matrix& low, std::span<const int> labels);

/**
 * Spearman correlation between the distances from every point of `cluster`
 * to every point of the other clusters, high vs low space. Mirrors the
 * per-continent distance boxplots. At most `pair_budget` cross pairs are
 * sampled from `rng` when given.
 */
double cluster_to_rest_preservation(const Matrix& high, const Matrix& low, std::span<const int> labels, int cluster,
                                    std::optional<std::uint64_t> pair_budget, Rng& rng);

struct KnnResult {
    double accuracy = 0.0;
    double f1_macro = 0.0;
    std::size_t train_size = 0;
    std::size_t test_size = 0;
};

/**
 * Stratified split, then k-nearest-neighbour classification of the test part.
 *
 * Each class contributes round(count * test_fraction) test points. Neighbours
 * are ordered by distance then training index; a tied vote goes to the tied
 * class whose member appears first in that order. F1 is macro-averaged over
 * the classes present in the true or predicted test labels.
 */
KnnResult knn_evaluate(const Matrix& embedding, std::span<const int> labels, std::size_t k, double test_fraction,
                       Rng& rng);

struct KMeansResult {
    std::vector<int> labels;
    Matrix centroids;
    double inertia = 0.0;
    std::size_t iterations = 0;
    /// Inertia after each Lloyd assignment of the winning restart.
    std::vector<double> inertia_history;
};

inline constexpr std::size_t kKMeansMaxIterations = 300;

/**
 * k-means++ seeding and Lloyd iterations until assignments stop changing
 * (at most 300 iterations); the restart with the lowest inertia wins, ties
 * to the earlier restart. A centroid that loses all members is moved to the
 * point farthest from its current centroid.
 */
KMeansResult kmeans(const Matrix& x, std::size_t k, Rng& rng, std::size_t restarts = 10);

/**
 * Average-linkage agglomerative clustering on Euclidean distance, merged
 * down to `k` clusters. Each cluster is identified by its smallest member
 * index and equal merge distances go to the lexicographically smallest pair.
 * Output ids are numbered by first appearance in row order.
 */
std::vector<int> agglomerative(const Matrix& x, std::size_t k);

double ari(std::span<const int> truth, std::span<const int> predicted);
double fmi(std::span<const int> truth, std::span<const int> predicted);

}  // namespace neurodavis

#endif
