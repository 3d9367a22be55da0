#include "neurodavis/plot.hpp"

#include "neurodavis/error.hpp"

#include <algorithm>
#include <cstdio>
#include <string>

namespace neurodavis {

namespace {

std::string fixed(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3f", v);
    return buf;
}

std::string escape(const std::string& text) {
    std::string out;
    for (char c : text) {
        switch (c) {
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '&': out += "&amp;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

}  // namespace

std::string render_scatter_svg(const Matrix& embedding, std::optional<std::span<const int>> labels,
                               const PlotOptions& options) {
    if (embedding.rows() == 0) {
        throw InvalidInput("cannot plot an empty embedding");
    }
    if (embedding.cols() != 2) {
        throw InvalidInput("scatter plots need a 2D embedding, got " + std::to_string(embedding.cols()) + " columns");
    }
    if (labels && labels->size() != embedding.rows()) {
        throw InvalidInput("label count does not match embedding rows");
    }
    if (options.width <= 0 || options.height <= 0 || !(options.point_radius > 0.0)) {
        throw InvalidInput("plot size and point radius must be positive");
    }

    double min_x = embedding(0, 0), max_x = min_x, min_y = embedding(0, 1), max_y = min_y;
    for (std::size_t i = 0; i < embedding.rows(); ++i) {
        min_x = std::min(min_x, embedding(i, 0));
        max_x = std::max(max_x, embedding(i, 0));
        min_y = std::min(min_y, embedding(i, 1));
        max_y = std::max(max_y, embedding(i, 1));
    }
    // degenerate spans get a unit window around the data
    double span_x = max_x - min_x;
    double span_y = max_y - min_y;
    if (!(span_x > 0.0)) {
        min_x -= 0.5;
        span_x = 1.0;
    }
    if (!(span_y > 0.0)) {
        min_y -= 0.5;
        span_y = 1.0;
    }
    min_x -= 0.05 * span_x;
    min_y -= 0.05 * span_y;
    span_x *= 1.1;
    span_y *= 1.1;

    const double w = options.width;
    const double h = options.height;
    std::string svg;
    svg += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(options.width) + "\" height=\"" +
           std::to_string(options.height) + "\" viewBox=\"0 0 " + std::to_string(options.width) + " " +
           std::to_string(options.height) + "\">\n";
    svg += "<rect x=\"0\" y=\"0\" width=\"" + std::to_string(options.width) + "\" height=\"" +
           std::to_string(options.height) + "\" fill=\"white\" stroke=\"black\"/>\n";
    if (!options.title.empty()) {
        svg += "<title>" + escape(options.title) + "</title>\n";
    }
    svg += "<g stroke=\"none\" fill-opacity=\"0.8\">\n";
    const std::string radius = fixed(options.point_radius);
    for (std::size_t i = 0; i < embedding.rows(); ++i) {
        const double px = (embedding(i, 0) - min_x) / span_x * w;
        const double py = h - (embedding(i, 1) - min_y) / span_y * h;
        std::string_view color = kPalette[0];
        if (options.color_by_label && labels) {
            const int c = (*labels)[i];
            color = kPalette[static_cast<std::size_t>(c < 0 ? 0 : c) % kPalette.size()];
        }
        svg += "<circle cx=\"" + fixed(px) + "\" cy=\"" + fixed(py) + "\" r=\"" + radius + "\" fill=\"";
        svg += color;
        svg += "\"/>\n";
    }
    svg += "</g>\n</svg>\n";
    return svg;
}

}  // namespace neurodavis
