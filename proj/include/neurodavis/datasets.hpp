#ifndef NEURODAVIS_DATASETS_HPP
#define NEURODAVIS_DATASETS_HPP

#include "neurodavis/matrix.hpp"
#include "neurodavis/rng.hpp"

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace neurodavis {

struct Dataset {
    Matrix x;
    /// Class ids, dense from 0, one per row.
    std::optional<std::vector<int>> labels;
    /// Original label text for each class id, when known.
    std::vector<std::string> class_names;
    /// Empty or one name per column.
    std::vector<std::string> feature_names;
    std::string name;

    std::size_t samples() const { return x.rows(); }
    std::size_t features() const { return x.cols(); }
    std::size_t class_count() const;
};

enum class SyntheticKind { EllipticRing, Olympic, Spiral, Shape, WorldMap };

std::string_view to_string(SyntheticKind kind);
/// Accepts elliptic_ring, olympic, spiral, shape, world_map.
std::optional<SyntheticKind> parse_synthetic_kind(std::string_view name);

/**
 * Seeded 2D benchmark generators.
 *
 * | kind          | rows | classes |
 * |---------------|------|---------|
 * | elliptic_ring | 1100 | 3       |
 * | olympic       | 2500 | 5       |
 * | spiral        | 312  | 3       |
 * | shape         | 2000 | 5       |
 * | world_map     | 2843 | 5       |
 *
 * Geometry for olympic, shape and world_map comes from the JSON templates
 * under data/templates, compiled into the library.
 */
Dataset gen_synthetic(SyntheticKind kind, Rng& rng);

/// Template ring centers for the olympic generator, in class order.
std::vector<std::pair<double, double>> olympic_centers();

/// Lifts 2D points to (x+y, x-y, xy, x^2, y^2, x^2 y, x y^2, x^3, y^3).
Dataset lift9(const Dataset& ds);

/// Label column chosen by header name or zero-based position.
using LabelColumn = std::variant<std::string, std::size_t>;

Dataset load_csv(const std::filesystem::path& path, std::optional<LabelColumn> label_column, bool has_header);
/// Writes a header row, then values with 17 significant digits; labels go last as "label".
void save_csv(const Dataset& ds, const std::filesystem::path& path);

/// Per-column affine map onto [0, 1]; constant columns become 0.
Dataset minmax_scale(const Dataset& ds);

/// Centers the data and divides by the RMS distance to the centroid (rank-preserving).
Dataset isotropic_standardize(const Dataset& ds);

}  // namespace neurodavis

#endif
