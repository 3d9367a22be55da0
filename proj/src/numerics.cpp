#include "neurodavis/numerics.hpp"

#include "neurodavis/error.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <string>
#include <unordered_set>

namespace neurodavis {

std::uint64_t pair_count(std::size_t n) {
    const auto m = static_cast<std::uint64_t>(n);
    return n < 2 ? 0 : m * (m - 1) / 2;
}

namespace {

// Expands sorted linear pair indices into (i, j) by walking the rows once.
std::vector<IndexPair> expand_sorted(std::size_t n, const std::vector<std::uint64_t>& sorted) {
    std::vector<IndexPair> out;
    out.reserve(sorted.size());
    std::size_t i = 0;
    std::uint64_t row_start = 0;
    std::uint64_t row_len = n - 1;
    for (std::uint64_t idx : sorted) {
        while (idx >= row_start + row_len) {
            row_start += row_len;
            ++i;
            --row_len;
        }
        out.push_back({i, i + 1 + static_cast<std::size_t>(idx - row_start)});
    }
    return out;
}

std::vector<IndexPair> all_pairs(std::size_t n) {
    std::vector<IndexPair> out;
    out.reserve(pair_count(n));
    for (std::size_t i = 0; i + 1 < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            out.push_back({i, j});
        }
    }
    return out;
}

}  // namespace

std::vector<IndexPair> select_pairs(std::size_t n, std::optional<std::uint64_t> budget, Rng& rng) {
    if (n < 2) {
        throw InvalidInput("pairwise distances need at least 2 rows, got " + std::to_string(n));
    }
    const std::uint64_t total = pair_count(n);
    if (!budget) {
        return all_pairs(n);
    }
    if (*budget > total) {
        throw InvalidInput("pair budget " + std::to_string(*budget) + " exceeds the " + std::to_string(total) +
                           " available pairs");
    }
    const std::uint64_t want = *budget;
    std::vector<std::uint64_t> chosen;
    chosen.reserve(want);
    if (want * 2 > total) {
        // selection sampling: one pass, output already sorted
        std::uint64_t needed = want;
        for (std::uint64_t t = 0; t < total && needed > 0; ++t) {
            if (rng.below(total - t) < needed) {
                chosen.push_back(t);
                --needed;
            }
        }
    } else {
        // Floyd's algorithm
        std::unordered_set<std::uint64_t> seen;
        seen.reserve(want * 2);
        for (std::uint64_t j = total - want; j < total; ++j) {
            const std::uint64_t t = rng.below(j + 1);
            if (!seen.insert(t).second) {
                seen.insert(j);
            }
        }
        chosen.assign(seen.begin(), seen.end());
        std::sort(chosen.begin(), chosen.end());
    }
    return expand_sorted(n, chosen);
}

std::vector<double> pair_distances(const Matrix& x, const std::vector<IndexPair>& pairs) {
    std::vector<double> out;
    out.reserve(pairs.size());
    for (const auto& p : pairs) {
        if (p.i >= x.rows() || p.j >= x.rows()) {
            throw InvalidInput("pair index out of range");
        }
        out.push_back(euclidean_distance(x.row(p.i), x.row(p.j)));
    }
    return out;
}

std::vector<PairDistance> pairwise_euclidean(const Matrix& x, std::optional<std::uint64_t> pair_budget, Rng& rng) {
    const auto pairs = select_pairs(x.rows(), pair_budget, rng);
    std::vector<PairDistance> out;
    out.reserve(pairs.size());
    for (const auto& p : pairs) {
        out.push_back({p.i, p.j, euclidean_distance(x.row(p.i), x.row(p.j))});
    }
    return out;
}

double diameter(const Matrix& x) {
    double best = 0.0;
    for (std::size_t i = 0; i < x.rows(); ++i) {
        for (std::size_t j = i + 1; j < x.rows(); ++j) {
            best = std::max(best, euclidean_distance(x.row(i), x.row(j)));
        }
    }
    return best;
}

namespace {

double rayleigh(const Matrix& g, std::span<const double> v) {
    double sum = 0.0;
    for (std::size_t r = 0; r < g.rows(); ++r) {
        sum += v[r] * dot(g.row(r), v);
    }
    return sum;
}

// Power iteration on the Gram matrix G, where iteration s applies G^(2^s) to
// the start vector by repeated squaring. Returns the largest eigenvalue estimate.
double power_iterate(const Matrix& gram, std::span<const double> start, double tol) {
    const std::size_t m = gram.rows();
    double scale = frobenius_norm(gram);
    if (scale == 0.0) {
        return 0.0;
    }
    Matrix power = (1.0 / scale) * gram;
    std::vector<double> v(m);
    std::vector<double> prev_v(m, 0.0);
    double previous = 0.0;
    for (int iter = 0; iter < kSpectralMaxIterations; ++iter) {
        for (std::size_t r = 0; r < m; ++r) {
            v[r] = dot(power.row(r), start);
        }
        const double norm = std::sqrt(dot(v, v));
        if (norm == 0.0) {
            // start vector orthogonal to every surviving direction
            return previous;
        }
        for (double& x : v) {
            x /= norm;
        }
        const double estimate = rayleigh(gram, v);
        if (!std::isfinite(estimate)) {
            throw NumericError("spectral_norm: non-finite iterate", std::sqrt(std::abs(previous)));
        }
        // a stalled quotient alone is not enough: with nearly tied values the
        // iterate keeps rotating while the quotient barely moves
        double moved = 0.0;
        for (std::size_t r = 0; r < m; ++r) {
            moved = std::max(moved, std::abs(v[r] - prev_v[r]));
        }
        if (iter > 0 && std::abs(estimate - previous) <= tol * estimate && moved <= tol) {
            return estimate;
        }
        previous = estimate;
        prev_v = v;
        power = matmul(power, power);
        scale = frobenius_norm(power);
        if (scale == 0.0) {
            return previous;
        }
        power = (1.0 / scale) * power;
    }
    throw NumericError("spectral_norm: power iteration did not converge", std::sqrt(previous));
}

}  // namespace

double spectral_norm(const Matrix& w, double tol) {
    if (w.empty()) {
        throw InvalidInput("spectral_norm of an empty matrix");
    }
    if (!(tol > 0.0)) {
        throw InvalidInput("spectral_norm tolerance must be positive");
    }
    // W^T W and W W^T share their nonzero spectrum; iterate on the smaller one
    const Matrix gram = w.cols() <= w.rows() ? transposed_matmul(w, w) : matmul_transposed(w, w);
    const std::size_t m = gram.rows();

    std::vector<double> ones(m, 1.0 / std::sqrt(static_cast<double>(m)));
    const double from_ones = power_iterate(gram, ones, tol);

    Rng rng(0x5EC7A1ULL);
    std::vector<double> alt(m);
    for (double& a : alt) {
        a = rng.uniform(-1.0, 1.0);
    }
    const double alt_norm = std::sqrt(dot(alt, alt));
    for (double& a : alt) {
        a /= alt_norm;
    }
    const double from_alt = power_iterate(gram, alt, tol);
    return std::sqrt(std::max({from_ones, from_alt, 0.0}));
}

PcaResult pca(const Matrix& x, std::size_t n_components) {
    const std::size_t n = x.rows();
    const std::size_t d = x.cols();
    if (n < 2 || d == 0) {
        throw InvalidInput("pca needs at least 2 rows and 1 column");
    }
    if (n_components == 0 || n_components > std::min(n - 1, d)) {
        throw InvalidInput("pca n_components must be in [1, min(n-1, d)] = [1, " +
                           std::to_string(std::min(n - 1, d)) + "], got " + std::to_string(n_components));
    }

    PcaResult result;
    result.mean = column_means(x);
    Eigen::MatrixXd centered(n, d);
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < d; ++c) {
            centered(r, c) = x(r, c) - result.mean[c];
        }
    }
    const double denom = static_cast<double>(n - 1);
    result.total_variance = centered.squaredNorm() / denom;
    if (!(result.total_variance > 0.0)) {
        throw DegenerateInput("pca: data has zero variance");
    }

    Eigen::MatrixXd directions(d, n_components);
    Eigen::VectorXd variances(n_components);
    if (d <= n) {
        const Eigen::MatrixXd cov = (centered.transpose() * centered) / denom;
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
        if (solver.info() != Eigen::Success) {
            throw NumericError("pca: covariance eigendecomposition failed", 0.0);
        }
        // eigenvalues ascend
        for (std::size_t m = 0; m < n_components; ++m) {
            const auto src = static_cast<Eigen::Index>(d - 1 - m);
            directions.col(static_cast<Eigen::Index>(m)) = solver.eigenvectors().col(src);
            variances(static_cast<Eigen::Index>(m)) = std::max(0.0, solver.eigenvalues()(src));
        }
    } else {
        const Eigen::MatrixXd gram = centered * centered.transpose();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(gram);
        if (solver.info() != Eigen::Success) {
            throw NumericError("pca: Gram eigendecomposition failed", 0.0);
        }
        for (std::size_t m = 0; m < n_components; ++m) {
            const auto src = static_cast<Eigen::Index>(n - 1 - m);
            const double eig = solver.eigenvalues()(src);
            if (!(eig > 0.0)) {
                throw DegenerateInput("pca: requested more components than the data rank");
            }
            Eigen::VectorXd dir = centered.transpose() * solver.eigenvectors().col(src);
            dir /= dir.norm();
            directions.col(static_cast<Eigen::Index>(m)) = dir;
            variances(static_cast<Eigen::Index>(m)) = eig / denom;
        }
    }

    for (Eigen::Index m = 0; m < directions.cols(); ++m) {
        Eigen::Index arg = 0;
        directions.col(m).cwiseAbs().maxCoeff(&arg);
        if (directions(arg, m) < 0.0) {
            directions.col(m) *= -1.0;
        }
    }
    const Eigen::MatrixXd scores = centered * directions;

    result.components = Matrix(d, n_components);
    result.projected = Matrix(n, n_components);
    for (std::size_t r = 0; r < d; ++r) {
        for (std::size_t m = 0; m < n_components; ++m) {
            result.components(r, m) = directions(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(m));
        }
    }
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t m = 0; m < n_components; ++m) {
            result.projected(r, m) = scores(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(m));
        }
    }
    result.explained_variance.assign(variances.data(), variances.data() + variances.size());
    return result;
}

}  // namespace neurodavis
