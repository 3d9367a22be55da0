#ifndef NEURODAVIS_PLOT_HPP
#define NEURODAVIS_PLOT_HPP

#include "neurodavis/matrix.hpp"

#include <array>
#include <optional>
#include <span>
#include <string>
#include <string_view>

namespace neurodavis {

struct PlotOptions {
    int width = 640;
    int height = 480;
    double point_radius = 2.5;
    bool color_by_label = true;
    std::string title;
};

/// Fixed ten-colour palette; class c uses entry c % 10.
inline constexpr std::array<std::string_view, 10> kPalette = {
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
};

/**
 * Scatter plot of a 2D embedding as SVG text: one <circle> per row, axes
 * scaled to the data with a 5% margin on each side. Output bytes depend only
 * on the inputs. Throws `InvalidInput` for an empty or non-2D embedding.
 */
std::string render_scatter_svg(const Matrix& embedding, std::optional<std::span<const int>> labels,
                               const PlotOptions& options = {});

}  // namespace neurodavis

#endif
