#ifndef NEURODAVIS_NUMERICS_HPP
#define NEURODAVIS_NUMERICS_HPP

#include "neurodavis/matrix.hpp"
#include "neurodavis/rng.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

namespace neurodavis {

struct IndexPair {
    std::size_t i = 0;
    std::size_t j = 0;

    friend bool operator==(const IndexPair&, const IndexPair&) = default;
};

struct PairDistance {
    std::size_t i = 0;
    std::size_t j = 0;
    double distance = 0.0;
};

/// Default number of sampled pairs used when a budget is requested implicitly.
inline constexpr std::uint64_t kDefaultPairBudget = 2'000'000;

/// Number of unordered pairs among n items.
std::uint64_t pair_count(std::size_t n);

/**
 * Unordered index pairs (i < j) in lexicographic order.
 *
 * Without a budget every pair is returned. With a budget a uniform sample
 * without replacement of that many pairs is drawn from `rng`; the sample is
 * still returned in lexicographic order so that two spaces evaluated with the
 * same pair list line up index by index.
 */
std::vector<IndexPair> select_pairs(std::size_t n, std::optional<std::uint64_t> budget, Rng& rng);

/// Euclidean distances between the rows named by `pairs`.
std::vector<double> pair_distances(const Matrix& x, const std::vector<IndexPair>& pairs);

/// All (or a seeded sample of) pairwise Euclidean distances between rows of `x`.
std::vector<PairDistance> pairwise_euclidean(const Matrix& x, std::optional<std::uint64_t> pair_budget, Rng& rng);

/// Largest pairwise distance between rows (brute force).
double diameter(const Matrix& x);

inline constexpr double kSpectralTolerance = 1e-10;
inline constexpr int kSpectralMaxIterations = 10'000;

/**
 * Largest singular value by power iteration on the Gram matrix of W.
 *
 * Iteration s applies G^(2^s) (built by repeated squaring) to the start
 * vector, so nearly tied leading singular values still converge in a few
 * dozen steps. Iteration starts from the normalized all-ones vector. Because
 * that vector can be orthogonal to the leading singular vector (e.g.
 * W = [1, -1]), a second fixed pseudo-random start is also run and the larger
 * estimate is returned. Convergence is declared when the Rayleigh quotient
 * changes by at most `tol` relative to its value and no entry of the unit
 * iterate moves by more than `tol`. Throws `NumericError`
 * carrying the last iterate after `kSpectralMaxIterations` steps.
 */
double spectral_norm(const Matrix& w, double tol = kSpectralTolerance);

struct PcaResult {
    Matrix components;                     ///< d x m, orthonormal columns
    Matrix projected;                      ///< n x m scores of the centered data
    std::vector<double> explained_variance;  ///< per component, decreasing
    double total_variance = 0.0;
    std::vector<double> mean;
};

/**
 * Principal component analysis of mean-centered `x`.
 *
 * Uses the d x d covariance when d <= n and the n x n Gram matrix otherwise.
 * Each component is signed so that its largest-magnitude entry is positive.
 */
PcaResult pca(const Matrix& x, std::size_t n_components);

}  // namespace neurodavis

#endif
