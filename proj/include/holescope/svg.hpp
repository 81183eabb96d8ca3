#pragma once

#include "holescope/embed.hpp"

#include <string>
#include <vector>

namespace holescope {

/// Point classes for scatter rendering: kBoundaryLabel renders black,
/// kDefaultLabel gray, values >= 0 map onto a cyclic hue palette.
inline constexpr int kBoundaryLabel = -2;
inline constexpr int kDefaultLabel = -1;

struct RenderConfig {
    double width = 900.0;
    double height = 900.0;
    double point_radius = 2.5;
    int palette_span = 360;  // label value mapped to hue as label/span
};

/// Standalone SVG scatter of a 2D embedding, one circle per sample, no axes.
/// labels may be empty (all points default-colored) or one entry per row.
/// Throws std::domain_error for dim != 2 or a label-length mismatch.
std::string render_svg(const Embedding& emb, const std::vector<int>& labels,
                       const RenderConfig& cfg = {});

}  // namespace holescope
