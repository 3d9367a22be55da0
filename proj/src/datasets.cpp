#include "neurodavis/datasets.hpp"

#include "neurodavis/error.hpp"
#include "templates_data.hpp"

#include "json.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numbers>
#include <numeric>
#include <sstream>

namespace neurodavis {

namespace {

using Point = std::pair<double, double>;
using Polyline = std::vector<Point>;

struct Builder {
    std::vector<double> values;
    std::vector<int> labels;

    void add(double px, double py, int label) {
        values.push_back(px);
        values.push_back(py);
        labels.push_back(label);
    }

    Dataset finish(std::string name, std::vector<std::string> classes) {
        Dataset ds;
        const std::size_t n = labels.size();
        ds.x = Matrix(n, 2, std::move(values));
        ds.labels = std::move(labels);
        ds.class_names = std::move(classes);
        ds.feature_names = {"x", "y"};
        ds.name = std::move(name);
        return ds;
    }
};

Polyline to_polyline(const nlohmann::json& arr) {
    Polyline out;
    for (const auto& p : arr) {
        out.emplace_back(p.at(0).get<double>(), p.at(1).get<double>());
    }
    return out;
}

Dataset elliptic_ring(Rng& rng) {
    // outer ring 600 points, two inner balls of 250
    constexpr double semi_major = 4.0;
    constexpr double semi_minor = 2.5;
    constexpr double ring_noise = 0.02 * 2.0 * semi_major;
    constexpr double ball_sd = 0.35;
    Builder b;
    for (int i = 0; i < 600; ++i) {
        const double t = rng.uniform(0.0, 2.0 * std::numbers::pi);
        b.add(semi_major * std::cos(t) + rng.normal(0.0, ring_noise),
              semi_minor * std::sin(t) + rng.normal(0.0, ring_noise), 0);
    }
    for (int ball = 0; ball < 2; ++ball) {
        const double cx = ball == 0 ? -1.5 : 1.5;
        for (int i = 0; i < 250; ++i) {
            b.add(rng.normal(cx, ball_sd), rng.normal(0.0, ball_sd), ball + 1);
        }
    }
    return b.finish("elliptic_ring", {"ring", "left_ball", "right_ball"});
}

Dataset spiral(Rng& rng) {
    constexpr int per_arm = 104;
    constexpr double turns = 1.75;
    constexpr double r0 = 0.5;
    constexpr double r1 = 3.5;
    constexpr double noise = 0.02 * 2.0 * r1;
    Builder b;
    for (int arm = 0; arm < 3; ++arm) {
        const double phase = 2.0 * std::numbers::pi * arm / 3.0;
        for (int i = 0; i < per_arm; ++i) {
            const double t = static_cast<double>(i) / (per_arm - 1);
            const double radius = r0 + (r1 - r0) * t;
            const double angle = phase + 2.0 * std::numbers::pi * turns * t;
            b.add(radius * std::cos(angle) + rng.normal(0.0, noise), radius * std::sin(angle) + rng.normal(0.0, noise),
                  arm);
        }
    }
    return b.finish("spiral", {"arm0", "arm1", "arm2"});
}

Dataset olympic(Rng& rng) {
    const auto tpl = nlohmann::json::parse(templates::kOlympic);
    const double radius = tpl.at("radius").get<double>();
    const int per_ring = tpl.at("points_per_ring").get<int>();
    const double noise = tpl.at("noise_fraction_of_ring_diameter").get<double>() * 2.0 * radius;
    Builder b;
    int label = 0;
    std::vector<std::string> names;
    for (const auto& c : tpl.at("centers")) {
        const double cx = c.at(0).get<double>();
        const double cy = c.at(1).get<double>();
        for (int i = 0; i < per_ring; ++i) {
            const double t = rng.uniform(0.0, 2.0 * std::numbers::pi);
            b.add(cx + radius * std::cos(t) + rng.normal(0.0, noise), cy + radius * std::sin(t) + rng.normal(0.0, noise),
                  label);
        }
        names.push_back("ring" + std::to_string(label));
        ++label;
    }
    return b.finish("olympic", std::move(names));
}

double polyline_length(const Polyline& line) {
    double total = 0.0;
    for (std::size_t i = 1; i < line.size(); ++i) {
        total += std::hypot(line[i].first - line[i - 1].first, line[i].second - line[i - 1].second);
    }
    return total;
}

Dataset shape(Rng& rng) {
    const auto tpl = nlohmann::json::parse(templates::kShape);
    const int per_glyph = tpl.at("points_per_glyph").get<int>();
    const double advance = tpl.at("glyph_advance").get<double>();
    const double noise_fraction = tpl.at("noise_fraction_of_glyph_diameter").get<double>();
    Builder b;
    std::vector<std::string> names;
    int label = 0;
    for (const auto& glyph : tpl.at("glyphs")) {
        std::vector<Polyline> strokes;
        double total = 0.0;
        double min_x = 1e300, max_x = -1e300, min_y = 1e300, max_y = -1e300;
        for (const auto& s : glyph.at("strokes")) {
            strokes.push_back(to_polyline(s));
            total += polyline_length(strokes.back());
            for (const auto& [px, py] : strokes.back()) {
                min_x = std::min(min_x, px);
                max_x = std::max(max_x, px);
                min_y = std::min(min_y, py);
                max_y = std::max(max_y, py);
            }
        }
        const double noise = noise_fraction * std::hypot(max_x - min_x, max_y - min_y);
        const double offset = advance * label;
        for (int i = 0; i < per_glyph; ++i) {
            double s = rng.uniform(0.0, total);
            Point p{};
            for (const auto& line : strokes) {
                bool placed = false;
                for (std::size_t k = 1; k < line.size(); ++k) {
                    const double seg = std::hypot(line[k].first - line[k - 1].first, line[k].second - line[k - 1].second);
                    if (s <= seg) {
                        const double f = seg > 0.0 ? s / seg : 0.0;
                        p = {line[k - 1].first + f * (line[k].first - line[k - 1].first),
                             line[k - 1].second + f * (line[k].second - line[k - 1].second)};
                        placed = true;
                        break;
                    }
                    s -= seg;
                }
                if (placed) {
                    break;
                }
                p = line.back();
            }
            b.add(offset + p.first + rng.normal(0.0, noise), p.second + rng.normal(0.0, noise), label);
        }
        names.push_back(glyph.at("name").get<std::string>());
        ++label;
    }
    return b.finish("shape", std::move(names));
}

double polygon_area(const Polyline& poly) {
    double twice = 0.0;
    for (std::size_t i = 0; i < poly.size(); ++i) {
        const auto& [x0, y0] = poly[i];
        const auto& [x1, y1] = poly[(i + 1) % poly.size()];
        twice += x0 * y1 - x1 * y0;
    }
    return std::abs(twice) / 2.0;
}

bool inside(const Polyline& poly, double px, double py) {
    bool in = false;
    for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
        const auto& [xi, yi] = poly[i];
        const auto& [xj, yj] = poly[j];
        if ((yi > py) != (yj > py) && px < (xj - xi) * (py - yi) / (yj - yi) + xi) {
            in = !in;
        }
    }
    return in;
}

Dataset world_map(Rng& rng) {
    const auto tpl = nlohmann::json::parse(templates::kWorldMap);
    const int total = tpl.at("total_points").get<int>();
    std::vector<Polyline> polys;
    std::vector<std::string> names;
    for (const auto& c : tpl.at("continents")) {
        polys.push_back(to_polyline(c.at("polygon")));
        names.push_back(c.at("name").get<std::string>());
    }

    // largest-remainder apportionment by area
    std::vector<double> areas;
    for (const auto& p : polys) {
        areas.push_back(polygon_area(p));
    }
    const double area_sum = std::accumulate(areas.begin(), areas.end(), 0.0);
    std::vector<int> counts(polys.size());
    std::vector<std::pair<double, std::size_t>> remainders;
    int assigned = 0;
    for (std::size_t c = 0; c < polys.size(); ++c) {
        const double quota = total * areas[c] / area_sum;
        counts[c] = static_cast<int>(std::floor(quota));
        assigned += counts[c];
        remainders.emplace_back(quota - counts[c], c);
    }
    std::stable_sort(remainders.begin(), remainders.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (int r = 0; assigned < total; ++r, ++assigned) {
        ++counts[remainders[static_cast<std::size_t>(r)].second];
    }

    Builder b;
    for (std::size_t c = 0; c < polys.size(); ++c) {
        double min_x = 1e300, max_x = -1e300, min_y = 1e300, max_y = -1e300;
        for (const auto& [px, py] : polys[c]) {
            min_x = std::min(min_x, px);
            max_x = std::max(max_x, px);
            min_y = std::min(min_y, py);
            max_y = std::max(max_y, py);
        }
        for (int i = 0; i < counts[c];) {
            const double px = rng.uniform(min_x, max_x);
            const double py = rng.uniform(min_y, max_y);
            if (inside(polys[c], px, py)) {
                b.add(px, py, static_cast<int>(c));
                ++i;
            }
        }
    }
    Dataset ds = b.finish("world_map", std::move(names));
    ds.feature_names = {"longitude", "latitude"};
    return ds;
}

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r");
    return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        out.push_back(trim(std::string_view(line).substr(start, comma == std::string::npos ? std::string::npos
                                                                                             : comma - start)));
        if (comma == std::string::npos) {
            break;
        }
        start = comma + 1;
    }
    return out;
}

std::optional<double> parse_double(const std::string& cell) {
    double value = 0.0;
    const char* begin = cell.data();
    const char* end = begin + cell.size();
    if (!cell.empty() && *begin == '+') {
        ++begin;
    }
    const auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc() || ptr != end || cell.empty()) {
        return std::nullopt;
    }
    return value;
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

std::size_t Dataset::class_count() const {
    if (!labels || labels->empty()) {
        return 0;
    }
    return static_cast<std::size_t>(*std::max_element(labels->begin(), labels->end())) + 1;
}

std::string_view to_string(SyntheticKind kind) {
    switch (kind) {
        case SyntheticKind::EllipticRing:
            return "elliptic_ring";
        case SyntheticKind::Olympic:
            return "olympic";
        case SyntheticKind::Spiral:
            return "spiral";
        case SyntheticKind::Shape:
            return "shape";
        case SyntheticKind::WorldMap:
            return "world_map";
    }
    return "unknown";
}

std::optional<SyntheticKind> parse_synthetic_kind(std::string_view name) {
    for (auto kind : {SyntheticKind::EllipticRing, SyntheticKind::Olympic, SyntheticKind::Spiral, SyntheticKind::Shape,
                      SyntheticKind::WorldMap}) {
        if (to_string(kind) == name) {
            return kind;
        }
    }
    return std::nullopt;
}

Dataset gen_synthetic(SyntheticKind kind, Rng& rng) {
    switch (kind) {
        case SyntheticKind::EllipticRing:
            return elliptic_ring(rng);
        case SyntheticKind::Olympic:
            return olympic(rng);
        case SyntheticKind::Spiral:
            return spiral(rng);
        case SyntheticKind::Shape:
            return shape(rng);
        case SyntheticKind::WorldMap:
            return world_map(rng);
    }
    throw InvalidInput("unknown synthetic dataset kind");
}

std::vector<std::pair<double, double>> olympic_centers() {
    const auto tpl = nlohmann::json::parse(templates::kOlympic);
    std::vector<std::pair<double, double>> out;
    for (const auto& c : tpl.at("centers")) {
        out.emplace_back(c.at(0).get<double>(), c.at(1).get<double>());
    }
    return out;
}

Dataset lift9(const Dataset& ds) {
    if (ds.features() != 2) {
        throw InvalidInput("lift9 needs 2D data, got " + std::to_string(ds.features()) + " columns");
    }
    Dataset out;
    out.x = Matrix(ds.samples(), 9);
    for (std::size_t i = 0; i < ds.samples(); ++i) {
        const double x = ds.x(i, 0);
        const double y = ds.x(i, 1);
        const double lifted[9] = {x + y, x - y, x * y, x * x, y * y, x * x * y, x * y * y, x * x * x, y * y * y};
        std::copy(std::begin(lifted), std::end(lifted), out.x.row(i).begin());
    }
    out.labels = ds.labels;
    out.class_names = ds.class_names;
    out.feature_names = {"x+y", "x-y", "xy", "x^2", "y^2", "x^2y", "xy^2", "x^3", "y^3"};
    out.name = ds.name + "_lift9";
    return out;
}

Dataset load_csv(const std::filesystem::path& path, std::optional<LabelColumn> label_column, bool has_header) {
    std::ifstream in(path);
    if (!in) {
        throw InvalidInput("cannot open " + path.string());
    }
    std::vector<std::vector<std::string>> rows;
    std::vector<std::size_t> line_numbers;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line_no == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) {
            line.erase(0, 3);
        }
        if (trim(line).empty()) {
            continue;
        }
        rows.push_back(split_fields(line));
        line_numbers.push_back(line_no);
    }
    if (rows.empty()) {
        throw ParseError("empty CSV file " + path.string(), 0, 0);
    }

    std::vector<std::string> header;
    std::size_t first_data = 0;
    if (has_header) {
        header = rows.front();
        first_data = 1;
    }
    const std::size_t width = rows.front().size();
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != width) {
            throw ParseError("ragged row: expected " + std::to_string(width) + " fields, found " +
                                 std::to_string(rows[r].size()),
                             line_numbers[r], rows[r].size());
        }
    }

    std::optional<std::size_t> label_index;
    if (label_column) {
        if (const auto* name = std::get_if<std::string>(&*label_column)) {
            const auto it = std::find(header.begin(), header.end(), *name);
            if (it == header.end()) {
                throw InvalidInput("label column '" + *name + "' not found in header");
            }
            label_index = static_cast<std::size_t>(it - header.begin());
        } else {
            label_index = std::get<std::size_t>(*label_column);
            if (*label_index >= width) {
                throw InvalidInput("label column index " + std::to_string(*label_index) + " out of range");
            }
        }
    }

    const std::size_t n = rows.size() - first_data;
    const std::size_t d = width - (label_index ? 1 : 0);
    Dataset ds;
    ds.x = Matrix(n, d);
    std::vector<std::string> raw_labels;
    for (std::size_t r = 0; r < n; ++r) {
        const auto& fields = rows[r + first_data];
        std::size_t c_out = 0;
        for (std::size_t c = 0; c < width; ++c) {
            if (label_index && c == *label_index) {
                raw_labels.push_back(fields[c]);
                continue;
            }
            const auto value = parse_double(fields[c]);
            if (!value) {
                throw ParseError("non-numeric cell '" + fields[c] + "'", line_numbers[r + first_data], c + 1);
            }
            ds.x(r, c_out++) = *value;
        }
    }
    if (has_header) {
        for (std::size_t c = 0; c < width; ++c) {
            if (!label_index || c != *label_index) {
                ds.feature_names.push_back(header[c]);
            }
        }
    }

    if (label_index) {
        // numeric labels are ordered numerically, anything else lexicographically
        bool numeric = true;
        for (const auto& l : raw_labels) {
            numeric = numeric && parse_double(l).has_value();
        }
        std::vector<std::string> classes = raw_labels;
        if (numeric) {
            std::sort(classes.begin(), classes.end(),
                      [](const std::string& a, const std::string& b) { return *parse_double(a) < *parse_double(b); });
            classes.erase(std::unique(classes.begin(), classes.end(),
                                      [](const std::string& a, const std::string& b) {
                                          return *parse_double(a) == *parse_double(b);
                                      }),
                          classes.end());
        } else {
            std::sort(classes.begin(), classes.end());
            classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
        }
        std::vector<int> labels;
        labels.reserve(raw_labels.size());
        for (const auto& l : raw_labels) {
            const auto it = numeric ? std::find_if(classes.begin(), classes.end(),
                                                   [&](const std::string& c) {
                                                       return *parse_double(c) == *parse_double(l);
                                                   })
                                    : std::lower_bound(classes.begin(), classes.end(), l);
            labels.push_back(static_cast<int>(it - classes.begin()));
        }
        ds.labels = std::move(labels);
        ds.class_names = std::move(classes);
    }
    ds.name = path.stem().string();
    return ds;
}

void save_csv(const Dataset& ds, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw InvalidInput("cannot write " + path.string());
    }
    std::ostringstream buf;
    for (std::size_t c = 0; c < ds.features(); ++c) {
        if (c > 0) {
            buf << ',';
        }
        buf << (ds.feature_names.size() == ds.features() ? ds.feature_names[c] : "x" + std::to_string(c));
    }
    if (ds.labels) {
        buf << (ds.features() > 0 ? "," : "") << "label";
    }
    buf << '\n';
    for (std::size_t r = 0; r < ds.samples(); ++r) {
        for (std::size_t c = 0; c < ds.features(); ++c) {
            if (c > 0) {
                buf << ',';
            }
            buf << format_double(ds.x(r, c));
        }
        if (ds.labels) {
            buf << (ds.features() > 0 ? "," : "") << (*ds.labels)[r];
        }
        buf << '\n';
    }
    out << buf.str();
    if (!out) {
        throw InvalidInput("failed writing " + path.string());
    }
}

Dataset minmax_scale(const Dataset& ds) {
    Dataset out = ds;
    for (std::size_t c = 0; c < ds.features(); ++c) {
        double lo = 1e300;
        double hi = -1e300;
        for (std::size_t r = 0; r < ds.samples(); ++r) {
            lo = std::min(lo, ds.x(r, c));
            hi = std::max(hi, ds.x(r, c));
        }
        const double range = hi - lo;
        for (std::size_t r = 0; r < ds.samples(); ++r) {
            out.x(r, c) = range > 0.0 ? (ds.x(r, c) - lo) / range : 0.0;
        }
    }
    return out;
}

Dataset isotropic_standardize(const Dataset& ds) {
    Dataset out = ds;
    const auto means = column_means(ds.x);
    double sq = 0.0;
    for (std::size_t r = 0; r < ds.samples(); ++r) {
        for (std::size_t c = 0; c < ds.features(); ++c) {
            const double v = ds.x(r, c) - means[c];
            out.x(r, c) = v;
            sq += v * v;
        }
    }
    const double rms = ds.samples() > 0 ? std::sqrt(sq / static_cast<double>(ds.samples())) : 0.0;
    if (rms > 0.0) {
        for (double& v : out.x.values()) {
            v /= rms;
        }
    }
    return out;
}

}  // namespace neurodavis
