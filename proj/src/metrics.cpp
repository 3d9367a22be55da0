#include "neurodavis/metrics.hpp"

#include "neurodavis/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace neurodavis {

namespace {

void require_same_length(std::span<const double> a, std::span<const double> b, const char* what) {
    if (a.size() != b.size()) {
        throw InvalidInput(std::string(what) + ": sequences differ in length");
    }
    if (a.size() < 2) {
        throw InvalidInput(std::string(what) + ": need at least 2 values");
    }
}

std::size_t checked_class_count(std::span<const int> labels, std::size_t rows) {
    if (labels.size() != rows) {
        throw InvalidInput("label count does not match row count");
    }
    int max_label = -1;
    for (int l : labels) {
        if (l < 0) {
            throw InvalidInput("labels must be non-negative class ids");
        }
        max_label = std::max(max_label, l);
    }
    return static_cast<std::size_t>(max_label + 1);
}

double choose2(double n) {
    return n * (n - 1.0) / 2.0;
}

struct Contingency {
    double pairs_both = 0.0;   // sum over cells of C(n_ij, 2)
    double pairs_truth = 0.0;  // sum over rows of C(a_i, 2)
    double pairs_pred = 0.0;   // sum over columns of C(b_j, 2)
    double pairs_total = 0.0;
};

Contingency contingency(std::span<const int> truth, std::span<const int> predicted) {
    if (truth.size() != predicted.size()) {
        throw InvalidInput("labelings differ in length");
    }
    const std::size_t rows = checked_class_count(truth, truth.size());
    const std::size_t cols = checked_class_count(predicted, predicted.size());
    std::vector<double> table(rows * cols, 0.0);
    std::vector<double> row_sums(rows, 0.0);
    std::vector<double> col_sums(cols, 0.0);
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const auto r = static_cast<std::size_t>(truth[i]);
        const auto c = static_cast<std::size_t>(predicted[i]);
        table[r * cols + c] += 1.0;
        row_sums[r] += 1.0;
        col_sums[c] += 1.0;
    }
    Contingency out;
    for (double v : table) {
        out.pairs_both += choose2(v);
    }
    for (double v : row_sums) {
        out.pairs_truth += choose2(v);
    }
    for (double v : col_sums) {
        out.pairs_pred += choose2(v);
    }
    out.pairs_total = choose2(static_cast<double>(truth.size()));
    return out;
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        sum += d * d;
    }
    return sum;
}

}  // namespace

std::vector<double> average_ranks(std::span<const double> values) {
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(values.size());
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i + 1;
        while (j < order.size() && values[order[j]] == values[order[i]]) {
            ++j;
        }
        // positions i..j-1 hold ranks i+1..j
        const double rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
        for (std::size_t t = i; t < j; ++t) {
            ranks[order[t]] = rank;
        }
        i = j;
    }
    return ranks;
}

double pearson_r(std::span<const double> a, std::span<const double> b) {
    require_same_length(a, b, "pearson_r");
    const auto n = static_cast<double>(a.size());
    const double mean_a = std::accumulate(a.begin(), a.end(), 0.0) / n;
    const double mean_b = std::accumulate(b.begin(), b.end(), 0.0) / n;
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double da = a[i] - mean_a;
        const double db = b[i] - mean_b;
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    if (!(saa > 0.0) || !(sbb > 0.0)) {
        throw DegenerateInput("correlation undefined: zero variance");
    }
    return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

double spearman_rho(std::span<const double> a, std::span<const double> b) {
    require_same_length(a, b, "spearman_rho");
    const auto ra = average_ranks(a);
    const auto rb = average_ranks(b);
    return pearson_r(ra, rb);
}

MannWhitneyResult mann_whitney_u(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty()) {
        throw InvalidInput("mann_whitney_u: both samples must be nonempty");
    }
    std::vector<double> pooled(a.begin(), a.end());
    pooled.insert(pooled.end(), b.begin(), b.end());
    const auto ranks = average_ranks(pooled);
    const auto n1 = static_cast<double>(a.size());
    const auto n2 = static_cast<double>(b.size());
    const double n = n1 + n2;
    const double rank_sum_a = std::accumulate(ranks.begin(), ranks.begin() + static_cast<std::ptrdiff_t>(a.size()), 0.0);

    MannWhitneyResult result;
    result.u = rank_sum_a - n1 * (n1 + 1.0) / 2.0;

    std::vector<double> sorted = pooled;
    std::sort(sorted.begin(), sorted.end());
    double tie_term = 0.0;
    for (std::size_t i = 0; i < sorted.size();) {
        std::size_t j = i + 1;
        while (j < sorted.size() && sorted[j] == sorted[i]) {
            ++j;
        }
        const auto t = static_cast<double>(j - i);
        tie_term += t * t * t - t;
        i = j;
    }
    const double mean = n1 * n2 / 2.0;
    const double variance = n1 * n2 / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)));
    if (!(variance > 0.0)) {
        return result;
    }
    const double offset = result.u - mean;
    const double corrected = std::max(std::abs(offset) - 0.5, 0.0);
    result.z = std::copysign(corrected / std::sqrt(variance), offset);
    result.p_two_sided = std::min(1.0, std::erfc(std::abs(result.z) / std::sqrt(2.0)));
    return result;
}

double distance_preservation(const Matrix& high, const Matrix& low, const std::vector<IndexPair>& pairs) {
    if (high.rows() != low.rows()) {
        throw InvalidInput("distance_preservation: row counts differ (" + std::to_string(high.rows()) + " vs " +
                           std::to_string(low.rows()) + ")");
    }
    const auto dh = pair_distances(high, pairs);
    const auto dl = pair_distances(low, pairs);
    return spearman_rho(dh, dl);
}

double distance_preservation(const Matrix& high, const Matrix& low, std::optional<std::uint64_t> pair_budget,
                             Rng& rng) {
    if (high.rows() != low.rows()) {
        throw InvalidInput("distance_preservation: row counts differ (" + std::to_string(high.rows()) + " vs " +
                           std::to_string(low.rows()) + ")");
    }
    return distance_preservation(high, low, select_pairs(high.rows(), pair_budget, rng));
}

Matrix class_centroids(const Matrix& x, std::span<const int> labels) {
    const std::size_t classes = checked_class_count(labels, x.rows());
    Matrix centroids(classes, x.cols());
    std::vector<std::size_t> counts(classes, 0);
    for (std::size_t i = 0; i < x.rows(); ++i) {
        const auto c = static_cast<std::size_t>(labels[i]);
        ++counts[c];
        auto dst = centroids.row(c);
        auto src = x.row(i);
        for (std::size_t f = 0; f < dst.size(); ++f) {
            dst[f] += src[f];
        }
    }
    for (std::size_t c = 0; c < classes; ++c) {
        if (counts[c] == 0) {
            throw InvalidInput("class " + std::to_string(c) + " has no members");
        }
        for (double& v : centroids.row(c)) {
            v /= static_cast<double>(counts[c]);
        }
    }
    return centroids;
}

double centroid_distance_preservation(const Matrix& high, const Matrix& low, std::span<const int> labels) {
    if (high.rows() != low.rows()) {
        throw InvalidInput("centroid_distance_preservation: row counts differ");
    }
    const Matrix ch = class_centroids(high, labels);
    const Matrix cl = class_centroids(low, labels);
    if (ch.rows() < 3) {
        throw InvalidInput("centroid_distance_preservation needs at least 3 classes");
    }
    Rng unused(0);
    const auto pairs = select_pairs(ch.rows(), std::nullopt, unused);
    return spearman_rho(pair_distances(ch, pairs), pair_distances(cl, pairs));
}

std::vector<double> class_box_areas(const Matrix& x2d, std::span<const int> labels) {
    if (x2d.cols() != 2) {
        throw InvalidInput("bounding-rectangle areas need 2D data");
    }
    const std::size_t classes = checked_class_count(labels, x2d.rows());
    constexpr double inf = std::numeric_limits<double>::infinity();
    std::vector<double> min_x(classes, inf), max_x(classes, -inf), min_y(classes, inf), max_y(classes, -inf);
    for (std::size_t i = 0; i < x2d.rows(); ++i) {
        const auto c = static_cast<std::size_t>(labels[i]);
        min_x[c] = std::min(min_x[c], x2d(i, 0));
        max_x[c] = std::max(max_x[c], x2d(i, 0));
        min_y[c] = std::min(min_y[c], x2d(i, 1));
        max_y[c] = std::max(max_y[c], x2d(i, 1));
    }
    std::vector<double> areas(classes);
    for (std::size_t c = 0; c < classes; ++c) {
        if (min_x[c] == inf) {
            throw InvalidInput("class " + std::to_string(c) + " has no members");
        }
        areas[c] = (max_x[c] - min_x[c]) * (max_y[c] - min_y[c]);
    }
    return areas;
}

double cluster_area_preservation(const Matrix& high, const Matrix& low, std::span<const int> labels) {
    if (high.rows() != low.rows()) {
        throw InvalidInput("cluster_area_preservation: row counts differ");
    }
    const auto ah = class_box_areas(high, labels);
    const auto al = class_box_areas(low, labels);
    if (ah.size() < 3) {
        throw InvalidInput("cluster_area_preservation needs at least 3 classes");
    }
    return pearson_r(ah, al);
}

double cluster_to_rest_preservation(const Matrix& high, const Matrix& low, std::span<const int> labels, int cluster,
                                    std::optional<std::uint64_t> pair_budget, Rng& rng) {
    if (high.rows() != low.rows()) {
        throw InvalidInput("cluster_to_rest_preservation: row counts differ");
    }
    checked_class_count(labels, high.rows());
    std::vector<std::size_t> inside, outside;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        (labels[i] == cluster ? inside : outside).push_back(i);
    }
    if (inside.empty() || outside.empty()) {
        throw InvalidInput("cluster_to_rest_preservation: cluster " + std::to_string(cluster) +
                           " must be nonempty and not the whole dataset");
    }
    const std::uint64_t total = static_cast<std::uint64_t>(inside.size()) * outside.size();
    std::vector<double> dh, dl;
    auto add = [&](std::uint64_t linear) {
        const std::size_t a = inside[linear / outside.size()];
        const std::size_t b = outside[linear % outside.size()];
        dh.push_back(euclidean_distance(high.row(a), high.row(b)));
        dl.push_back(euclidean_distance(low.row(a), low.row(b)));
    };
    if (!pair_budget || *pair_budget >= total) {
        for (std::uint64_t t = 0; t < total; ++t) {
            add(t);
        }
    } else {
        std::uint64_t needed = *pair_budget;
        for (std::uint64_t t = 0; t < total && needed > 0; ++t) {
            if (rng.below(total - t) < needed) {
                add(t);
                --needed;
            }
        }
    }
    return spearman_rho(dh, dl);
}

KnnResult knn_evaluate(const Matrix& embedding, std::span<const int> labels, std::size_t k, double test_fraction,
                       Rng& rng) {
    const std::size_t classes = checked_class_count(labels, embedding.rows());
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
        throw InvalidInput("knn test fraction must lie in (0, 1)");
    }
    std::vector<std::vector<std::size_t>> members(classes);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        members[static_cast<std::size_t>(labels[i])].push_back(i);
    }
    std::vector<std::size_t> train, test;
    for (std::size_t c = 0; c < classes; ++c) {
        auto& m = members[c];
        if (m.empty()) {
            continue;
        }
        rng.shuffle(std::span<std::size_t>(m));
        const auto n_test = static_cast<std::size_t>(std::llround(static_cast<double>(m.size()) * test_fraction));
        if (n_test >= m.size()) {
            throw InvalidInput("stratified split leaves class " + std::to_string(c) + " absent from the training set");
        }
        test.insert(test.end(), m.begin(), m.begin() + static_cast<std::ptrdiff_t>(n_test));
        train.insert(train.end(), m.begin() + static_cast<std::ptrdiff_t>(n_test), m.end());
    }
    std::sort(train.begin(), train.end());
    std::sort(test.begin(), test.end());
    if (test.empty()) {
        throw InvalidInput("split produced no test points");
    }
    if (k < 1 || k > train.size()) {
        throw InvalidInput("k must be in [1, train size = " + std::to_string(train.size()) + "]");
    }

    std::vector<int> truth, predicted;
    std::vector<std::pair<double, std::size_t>> dist(train.size());
    std::vector<std::size_t> votes(classes);
    for (std::size_t t : test) {
        for (std::size_t r = 0; r < train.size(); ++r) {
            dist[r] = {squared_distance(embedding.row(t), embedding.row(train[r])), train[r]};
        }
        std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
        std::fill(votes.begin(), votes.end(), 0);
        for (std::size_t r = 0; r < k; ++r) {
            ++votes[static_cast<std::size_t>(labels[dist[r].second])];
        }
        const std::size_t best = *std::max_element(votes.begin(), votes.end());
        int choice = -1;
        for (std::size_t r = 0; r < k && choice < 0; ++r) {
            const int c = labels[dist[r].second];
            if (votes[static_cast<std::size_t>(c)] == best) {
                choice = c;
            }
        }
        truth.push_back(labels[t]);
        predicted.push_back(choice);
    }

    KnnResult result;
    result.train_size = train.size();
    result.test_size = test.size();
    std::vector<double> tp(classes, 0.0), fp(classes, 0.0), fn(classes, 0.0);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const auto t = static_cast<std::size_t>(truth[i]);
        const auto p = static_cast<std::size_t>(predicted[i]);
        if (t == p) {
            ++correct;
            tp[t] += 1.0;
        } else {
            fp[p] += 1.0;
            fn[t] += 1.0;
        }
    }
    result.accuracy = static_cast<double>(correct) / static_cast<double>(truth.size());
    double f1_sum = 0.0;
    std::size_t present = 0;
    for (std::size_t c = 0; c < classes; ++c) {
        if (tp[c] + fp[c] + fn[c] == 0.0) {
            continue;
        }
        ++present;
        f1_sum += 2.0 * tp[c] / (2.0 * tp[c] + fp[c] + fn[c]);
    }
    result.f1_macro = f1_sum / static_cast<double>(present);
    return result;
}

namespace {

double assign(const Matrix& x, const Matrix& centroids, std::vector<int>& labels) {
    double inertia = 0.0;
    for (std::size_t i = 0; i < x.rows(); ++i) {
        double best = std::numeric_limits<double>::infinity();
        int arg = 0;
        for (std::size_t c = 0; c < centroids.rows(); ++c) {
            const double d = squared_distance(x.row(i), centroids.row(c));
            if (d < best) {
                best = d;
                arg = static_cast<int>(c);
            }
        }
        labels[i] = arg;
        inertia += best;
    }
    return inertia;
}

Matrix kmeans_plus_plus(const Matrix& x, std::size_t k, Rng& rng) {
    const std::size_t n = x.rows();
    Matrix centroids(k, x.cols());
    std::vector<double> closest(n, std::numeric_limits<double>::infinity());
    std::size_t pick = static_cast<std::size_t>(rng.below(n));
    for (std::size_t c = 0; c < k; ++c) {
        std::copy_n(x.row(pick).begin(), x.cols(), centroids.row(c).begin());
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            closest[i] = std::min(closest[i], squared_distance(x.row(i), centroids.row(c)));
            total += closest[i];
        }
        if (c + 1 == k) {
            break;
        }
        if (total > 0.0) {
            // D^2 sampling; the last positive-weight point absorbs rounding at the top end
            const double target = rng.uniform() * total;
            double cumulative = 0.0;
            std::optional<std::size_t> last_positive;
            std::optional<std::size_t> chosen;
            for (std::size_t i = 0; i < n && !chosen; ++i) {
                if (closest[i] > 0.0) {
                    last_positive = i;
                    cumulative += closest[i];
                    if (cumulative > target) {
                        chosen = i;
                    }
                }
            }
            pick = chosen ? *chosen : *last_positive;
        } else {
            pick = static_cast<std::size_t>(rng.below(n));
        }
    }
    return centroids;
}

KMeansResult lloyd(const Matrix& x, Matrix centroids) {
    const std::size_t k = centroids.rows();
    KMeansResult result;
    result.labels.assign(x.rows(), -1);
    std::vector<int> next(x.rows(), 0);
    for (std::size_t iter = 0; iter < kKMeansMaxIterations; ++iter) {
        const double inertia = assign(x, centroids, next);
        result.inertia_history.push_back(inertia);
        result.inertia = inertia;
        result.iterations = iter + 1;
        if (next == result.labels) {
            break;
        }
        result.labels = next;

        Matrix sums(k, x.cols());
        std::vector<std::size_t> counts(k, 0);
        for (std::size_t i = 0; i < x.rows(); ++i) {
            const auto c = static_cast<std::size_t>(result.labels[i]);
            ++counts[c];
            auto dst = sums.row(c);
            auto src = x.row(i);
            for (std::size_t f = 0; f < dst.size(); ++f) {
                dst[f] += src[f];
            }
        }
        for (std::size_t c = 0; c < k; ++c) {
            if (counts[c] > 0) {
                for (std::size_t f = 0; f < x.cols(); ++f) {
                    centroids(c, f) = sums(c, f) / static_cast<double>(counts[c]);
                }
            }
        }
        for (std::size_t c = 0; c < k; ++c) {
            if (counts[c] > 0) {
                continue;
            }
            // empty cluster: move it to the point farthest from its own centroid
            double far = -1.0;
            std::size_t arg = 0;
            for (std::size_t i = 0; i < x.rows(); ++i) {
                const double d =
                    squared_distance(x.row(i), centroids.row(static_cast<std::size_t>(result.labels[i])));
                if (d > far) {
                    far = d;
                    arg = i;
                }
            }
            std::copy_n(x.row(arg).begin(), x.cols(), centroids.row(c).begin());
            result.labels[arg] = static_cast<int>(c);
        }
    }
    result.centroids = std::move(centroids);
    return result;
}

}  // namespace

KMeansResult kmeans(const Matrix& x, std::size_t k, Rng& rng, std::size_t restarts) {
    if (k < 1 || k > x.rows()) {
        throw InvalidInput("kmeans: k must be in [1, n]");
    }
    if (restarts < 1) {
        throw InvalidInput("kmeans: restarts must be at least 1");
    }
    std::optional<KMeansResult> best;
    for (std::size_t r = 0; r < restarts; ++r) {
        Rng local = rng.fork(r);
        KMeansResult candidate = lloyd(x, kmeans_plus_plus(x, k, local));
        if (!best || candidate.inertia < best->inertia) {
            best = std::move(candidate);
        }
    }
    return std::move(*best);
}

std::vector<int> agglomerative(const Matrix& x, std::size_t k) {
    const std::size_t n = x.rows();
    if (k < 1 || k > n) {
        throw InvalidInput("agglomerative: k must be in [1, n]");
    }
    std::vector<double> dist(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double d = euclidean_distance(x.row(i), x.row(j));
            dist[i * n + j] = d;
            dist[j * n + i] = d;
        }
    }
    std::vector<std::size_t> size(n, 1);
    std::vector<bool> active(n, true);
    std::vector<std::size_t> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    std::vector<std::size_t> nearest(n, n);

    auto rescan = [&](std::size_t i) {
        std::size_t arg = n;
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < n; ++j) {
            if (j != i && active[j] && dist[i * n + j] < best) {
                best = dist[i * n + j];
                arg = j;
            }
        }
        nearest[i] = arg;
    };
    for (std::size_t i = 0; i < n; ++i) {
        rescan(i);
    }

    for (std::size_t clusters = n; clusters > k; --clusters) {
        std::size_t a = n, b = n;
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < n; ++i) {
            if (!active[i]) {
                continue;
            }
            const std::size_t j = nearest[i];
            const double d = dist[i * n + j];
            const std::size_t lo = std::min(i, j), hi = std::max(i, j);
            if (d < best || (d == best && (lo < a || (lo == a && hi < b)))) {
                best = d;
                a = lo;
                b = hi;
            }
        }
        const double wa = static_cast<double>(size[a]);
        const double wb = static_cast<double>(size[b]);
        for (std::size_t j = 0; j < n; ++j) {
            if (active[j] && j != a && j != b) {
                const double d = (wa * dist[a * n + j] + wb * dist[b * n + j]) / (wa + wb);
                dist[a * n + j] = d;
                dist[j * n + a] = d;
            }
        }
        active[b] = false;
        size[a] += size[b];
        parent[b] = a;
        rescan(a);
        for (std::size_t i = 0; i < n; ++i) {
            if (!active[i] || i == a) {
                continue;
            }
            if (nearest[i] == a || nearest[i] == b) {
                rescan(i);
            } else {
                const double da = dist[i * n + a];
                const double dn = dist[i * n + nearest[i]];
                if (da < dn || (da == dn && a < nearest[i])) {
                    nearest[i] = a;
                }
            }
        }
    }

    std::vector<int> labels(n, -1);
    std::vector<int> id_of_root(n, -1);
    int next_id = 0;
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t root = i;
        while (parent[root] != root) {
            root = parent[root];
        }
        if (id_of_root[root] < 0) {
            id_of_root[root] = next_id++;
        }
        labels[i] = id_of_root[root];
    }
    return labels;
}

double ari(std::span<const int> truth, std::span<const int> predicted) {
    const Contingency c = contingency(truth, predicted);
    if (c.pairs_total == 0.0) {
        return 1.0;
    }
    const double expected = c.pairs_truth * c.pairs_pred / c.pairs_total;
    const double max_index = 0.5 * (c.pairs_truth + c.pairs_pred);
    const double denom = max_index - expected;
    if (denom == 0.0) {
        // both labelings trivial (all one cluster or all singletons)
        return 1.0;
    }
    return (c.pairs_both - expected) / denom;
}

double fmi(std::span<const int> truth, std::span<const int> predicted) {
    const Contingency c = contingency(truth, predicted);
    if (c.pairs_both == 0.0) {
        return 0.0;
    }
    return c.pairs_both / std::sqrt(c.pairs_truth * c.pairs_pred);
}

}  // namespace neurodavis
