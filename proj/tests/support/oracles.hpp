#ifndef NEURODAVIS_TESTS_ORACLES_HPP
#define NEURODAVIS_TESTS_ORACLES_HPP

// Slow, direct reference implementations used to check the library. None of
// these share code with src/.

#include "neurodavis/matrix.hpp"
#include "neurodavis/model.hpp"

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

namespace oracle {

using neurodavis::Matrix;

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, descending.
std::vector<double> jacobi_eigenvalues(const Matrix& symmetric);

/// Eigenpairs by cyclic Jacobi; columns of `vectors` match `values` (descending).
void jacobi_eigen(const Matrix& symmetric, std::vector<double>& values, Matrix& vectors);

/// Largest singular value from the Jacobi spectrum of W^T W.
double spectral_norm(const Matrix& w);

/// Rank by counting: 1 + #smaller + (#equal - 1) / 2.
std::vector<double> ranks_by_counting(const std::vector<double>& v);

/// Pearson r from raw sums in long double.
double pearson(const std::vector<double>& a, const std::vector<double>& b);

double spearman(const std::vector<double>& a, const std::vector<double>& b);

struct ExactMannWhitney {
    double u = 0.0;
    /// P(|U - n1 n2 / 2| >= |u - n1 n2 / 2|) over every split of the pooled values.
    double p_two_sided = 1.0;
};

/// Enumerates all C(n1 + n2, n1) assignments of the pooled sample.
ExactMannWhitney mann_whitney_exact(const std::vector<double>& a, const std::vector<double>& b);

/// Adjusted Rand index by visiting every unordered pair of items.
double ari_by_pairs(const std::vector<int>& truth, const std::vector<int>& pred);

/// Fowlkes-Mallows index by visiting every unordered pair of items.
double fmi_by_pairs(const std::vector<int>& truth, const std::vector<int>& pred);

/**
 * Average linkage by recomputing every cluster-to-cluster mean distance from
 * the raw points at each merge. Ties go to the pair whose smallest members
 * are lexicographically first. Labels are numbered by first appearance.
 */
std::vector<int> average_linkage(const Matrix& points, std::size_t k);

/// True when two labelings induce the same partition.
bool same_partition(const std::vector<int>& a, const std::vector<int>& b);

/// Forward pass written sample by sample with plain loops.
std::vector<double> decode_sample(const neurodavis::Model& model, std::size_t sample);

/// Batch objective evaluated term by term from `decode_sample`.
double batch_objective(const neurodavis::Model& model, const std::vector<std::size_t>& batch, const Matrix& x_batch,
                       double alpha, double beta);

/// Path of a committed fixture file under tests/fixtures.
std::filesystem::path fixture(const std::string& name);

}  // namespace oracle

#endif
