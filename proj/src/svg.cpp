#include "holescope/svg.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace holescope {
namespace {

std::string hue_color(double hue_deg) {
    // Fixed saturation/value HSV wheel.
    const double h = std::fmod(std::fmod(hue_deg, 360.0) + 360.0, 360.0) / 60.0;
    const int sector = static_cast<int>(h) % 6;
    const double f = h - std::floor(h);
    const double v = 0.85, s = 0.85;
    const double p = v * (1.0 - s);
    const double q = v * (1.0 - s * f);
    const double t = v * (1.0 - s * (1.0 - f));
    double r = 0.0, g = 0.0, b = 0.0;
    switch (sector) {
        case 0: r = v; g = t; b = p; break;
        case 1: r = q; g = v; b = p; break;
        case 2: r = p; g = v; b = t; break;
        case 3: r = p; g = q; b = v; break;
        case 4: r = t; g = p; b = v; break;
        default: r = v; g = p; b = q; break;
    }
    char buf[8];
    std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", static_cast<int>(r * 255.0),
                  static_cast<int>(g * 255.0), static_cast<int>(b * 255.0));
    return buf;
}

std::string label_color(int label, int palette_span) {
    if (label == kBoundaryLabel) return "#000000";
    if (label < 0) return "#9c9c9c";
    return hue_color(300.0 * static_cast<double>(label) / std::max(1, palette_span));
}

}  // namespace

std::string render_svg(const Embedding& emb, const std::vector<int>& labels,
                       const RenderConfig& cfg) {
    if (emb.dim() != 2) throw std::domain_error("render_svg: embedding must be 2D");
    if (!labels.empty() && static_cast<int>(labels.size()) != emb.num_rows())
        throw std::domain_error("render_svg: label count disagrees with the embedding");

    const Eigen::Index m = emb.coords.rows();
    double x_min = 0.0, x_max = 1.0, y_min = 0.0, y_max = 1.0;
    if (m > 0) {
        x_min = emb.coords.col(0).minCoeff();
        x_max = emb.coords.col(0).maxCoeff();
        y_min = emb.coords.col(1).minCoeff();
        y_max = emb.coords.col(1).maxCoeff();
    }
    const double span_x = (x_max > x_min) ? x_max - x_min : 1.0;
    const double span_y = (y_max > y_min) ? y_max - y_min : 1.0;
    const double pad = 3.0 * cfg.point_radius;

    const auto map_x = [&](double x) {
        return pad + (x - x_min) / span_x * (cfg.width - 2.0 * pad);
    };
    const auto map_y = [&](double y) {
        // SVG y grows downward; flip so the layout reads naturally.
        return cfg.height - pad - (y - y_min) / span_y * (cfg.height - 2.0 * pad);
    };

    std::string svg;
    svg.reserve(static_cast<std::size_t>(m) * 64 + 512);
    char line[192];
    svg += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    std::snprintf(line, sizeof(line),
                  "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%.0f\" height=\"%.0f\" "
                  "viewBox=\"0 0 %.0f %.0f\">\n",
                  cfg.width, cfg.height, cfg.width, cfg.height);
    svg += line;
    std::snprintf(line, sizeof(line),
                  "<rect width=\"%.0f\" height=\"%.0f\" fill=\"#ffffff\"/>\n", cfg.width,
                  cfg.height);
    svg += line;

    // Draw colored points first, boundary points last so they stay visible.
    for (int pass = 0; pass < 2; ++pass) {
        for (Eigen::Index i = 0; i < m; ++i) {
            const int label = labels.empty() ? kDefaultLabel
                                             : labels[static_cast<std::size_t>(i)];
            const bool boundary = label == kBoundaryLabel;
            if ((pass == 1) != boundary) continue;
            std::snprintf(line, sizeof(line),
                          "<circle cx=\"%.2f\" cy=\"%.2f\" r=\"%.2f\" fill=\"%s\"/>\n",
                          map_x(emb.coords(i, 0)), map_y(emb.coords(i, 1)), cfg.point_radius,
                          label_color(label, cfg.palette_span).c_str());
            svg += line;
        }
    }
    svg += "</svg>\n";
    return svg;
}

}  // namespace holescope
