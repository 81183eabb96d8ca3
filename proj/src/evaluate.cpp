#include "holescope/evaluate.hpp"

#include "holescope/threading.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <set>
#include <stdexcept>

namespace holescope {
namespace {

using Mask = std::vector<std::uint8_t>;  // grid_size * grid_size, row-major

struct Raster {
    int g = 0;
    double x0 = 0.0, y0 = 0.0;   // lower-left corner of the framed box
    double wx = 0.0, wy = 0.0;   // framed box extent

    int cell_x(double x) const {
        return std::clamp(static_cast<int>((x - x0) / wx * g), 0, g - 1);
    }
    int cell_y(double y) const {
        return std::clamp(static_cast<int>((y - y0) / wy * g), 0, g - 1);
    }
    double center_x(int cx) const { return x0 + (cx + 0.5) * wx / g; }
    double center_y(int cy) const { return y0 + (cy + 0.5) * wy / g; }
};

Mask dilate(const Mask& in, int g, int radius) {
    if (radius <= 0) return in;
    // Separable Chebyshev (box) dilation.
    Mask tmp(in.size(), 0);
    for (int y = 0; y < g; ++y) {
        for (int x = 0; x < g; ++x) {
            bool hit = false;
            for (int dx = -radius; dx <= radius && !hit; ++dx) {
                const int nx = x + dx;
                if (nx >= 0 && nx < g && in[static_cast<std::size_t>(y * g + nx)]) hit = true;
            }
            tmp[static_cast<std::size_t>(y * g + x)] = hit ? 1 : 0;
        }
    }
    Mask out(in.size(), 0);
    for (int y = 0; y < g; ++y) {
        for (int x = 0; x < g; ++x) {
            bool hit = false;
            for (int dy = -radius; dy <= radius && !hit; ++dy) {
                const int ny = y + dy;
                if (ny >= 0 && ny < g && tmp[static_cast<std::size_t>(ny * g + x)]) hit = true;
            }
            out[static_cast<std::size_t>(y * g + x)] = hit ? 1 : 0;
        }
    }
    return out;
}

/// Morphological closing on a grid padded by the radius, so dilation never
/// clips at the raster border (clipping would square the shape off and
/// manufacture phantom pockets at the corners).
Mask padded_closing(const Mask& in, int g, int radius) {
    if (radius <= 0) return in;
    const int gp = g + 2 * radius;
    Mask padded(static_cast<std::size_t>(gp) * gp, 0);
    for (int y = 0; y < g; ++y)
        for (int x = 0; x < g; ++x)
            padded[static_cast<std::size_t>((y + radius) * gp + (x + radius))] =
                in[static_cast<std::size_t>(y * g + x)];

    Mask grown = dilate(padded, gp, radius);
    // Erode via the complement: out-of-grid counts as empty.
    Mask inverted(grown.size());
    for (std::size_t i = 0; i < grown.size(); ++i) inverted[i] = grown[i] ? 0 : 1;
    const Mask shrunk = dilate(inverted, gp, radius);

    Mask out(in.size(), 0);
    for (int y = 0; y < g; ++y)
        for (int x = 0; x < g; ++x)
            out[static_cast<std::size_t>(y * g + x)] =
                shrunk[static_cast<std::size_t>((y + radius) * gp + (x + radius))] ? 0 : 1;
    return out;
}

/// 4-connected flood fill of zero cells starting from the grid border.
Mask outside_region(const Mask& occupied, int g) {
    Mask outside(occupied.size(), 0);
    std::deque<std::pair<int, int>> queue;
    const auto push = [&](int x, int y) {
        const std::size_t idx = static_cast<std::size_t>(y * g + x);
        if (occupied[idx] || outside[idx]) return;
        outside[idx] = 1;
        queue.emplace_back(x, y);
    };
    for (int x = 0; x < g; ++x) {
        push(x, 0);
        push(x, g - 1);
    }
    for (int y = 0; y < g; ++y) {
        push(0, y);
        push(g - 1, y);
    }
    while (!queue.empty()) {
        const auto [x, y] = queue.front();
        queue.pop_front();
        if (x > 0) push(x - 1, y);
        if (x + 1 < g) push(x + 1, y);
        if (y > 0) push(x, y - 1);
        if (y + 1 < g) push(x, y + 1);
    }
    return outside;
}

/// 4-connected components of the candidate mask, each as a cell list.
std::vector<std::vector<int>> components_of(const Mask& candidate, int g) {
    std::vector<std::vector<int>> components;
    Mask seen(candidate.size(), 0);
    for (int start = 0; start < g * g; ++start) {
        if (!candidate[static_cast<std::size_t>(start)] || seen[static_cast<std::size_t>(start)])
            continue;
        std::vector<int> cells;
        std::deque<int> queue{start};
        seen[static_cast<std::size_t>(start)] = 1;
        while (!queue.empty()) {
            const int cell = queue.front();
            queue.pop_front();
            cells.push_back(cell);
            const int x = cell % g;
            const int y = cell / g;
            const auto visit = [&](int nx, int ny) {
                const int idx = ny * g + nx;
                if (!candidate[static_cast<std::size_t>(idx)] ||
                    seen[static_cast<std::size_t>(idx)])
                    return;
                seen[static_cast<std::size_t>(idx)] = 1;
                queue.push_back(idx);
            };
            if (x > 0) visit(x - 1, y);
            if (x + 1 < g) visit(x + 1, y);
            if (y > 0) visit(x, y - 1);
            if (y + 1 < g) visit(x, y + 1);
        }
        components.push_back(std::move(cells));
    }
    return components;
}

}  // namespace

void RasterConfig::validate() const {
    if (grid_size < 8) throw std::domain_error("RasterConfig: grid_size must be >= 8");
    if (closing_radius < 0) throw std::domain_error("RasterConfig: closing_radius must be >= 0");
    if (min_hole_area < 0.0) throw std::domain_error("RasterConfig: min_hole_area must be >= 0");
}

RankTable input_rank_table(const Eigen::MatrixXd& points, int threads) {
    const Eigen::Index m = points.rows();
    RankTable table;
    table.rank.resize(m, m);

    const Eigen::VectorXd sq_norms = points.rowwise().squaredNorm();
    constexpr Eigen::Index kBlock = 64;
    const std::size_t num_blocks = static_cast<std::size_t>((m + kBlock - 1) / kBlock);

    parallel_for(num_blocks, threads, [&](std::size_t begin, std::size_t end) {
        std::vector<std::pair<double, int>> order(static_cast<std::size_t>(m));
        Eigen::MatrixXd dots;
        for (std::size_t block = begin; block < end; ++block) {
            const Eigen::Index b0 = static_cast<Eigen::Index>(block) * kBlock;
            const Eigen::Index nb = std::min<Eigen::Index>(kBlock, m - b0);
            dots.noalias() = points * points.middleRows(b0, nb).transpose();
            for (Eigen::Index r = 0; r < nb; ++r) {
                const Eigen::Index i = b0 + r;
                std::size_t slot = 0;
                for (Eigen::Index j = 0; j < m; ++j) {
                    if (j == i) continue;
                    const double sq =
                        std::max(0.0, sq_norms(i) + sq_norms(j) - 2.0 * dots(j, r));
                    order[slot++] = {sq, static_cast<int>(j)};
                }
                std::sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(slot));
                table.rank(i, i) = 0;
                for (std::size_t t = 0; t < slot; ++t)
                    table.rank(i, order[t].second) = static_cast<std::int32_t>(t + 1);
            }
        }
    });
    return table;
}

TrustworthinessReport trustworthiness(const RankTable& ranks, const Embedding& emb, int k,
                                      int threads) {
    const Eigen::Index m = emb.coords.rows();
    if (ranks.rank.rows() != m)
        throw std::domain_error("trustworthiness: rank table size disagrees with embedding");
    if (k < 1) throw std::domain_error("trustworthiness: k must be >= 1");
    if (2 * k >= m)
        throw std::domain_error("trustworthiness: k must be below half the sample count");

    TrustworthinessReport report;
    report.k = k;
    report.per_point.resize(m);
    const double normalizer =
        2.0 / (static_cast<double>(k) * (2.0 * static_cast<double>(m) - 3.0 * k - 1.0));

    parallel_for(static_cast<std::size_t>(m), threads, [&](std::size_t begin, std::size_t end) {
        std::vector<std::pair<double, int>> order(static_cast<std::size_t>(m - 1));
        for (std::size_t row = begin; row < end; ++row) {
            const Eigen::Index i = static_cast<Eigen::Index>(row);
            std::size_t slot = 0;
            for (Eigen::Index j = 0; j < m; ++j) {
                if (j == i) continue;
                order[slot++] = {(emb.coords.row(i) - emb.coords.row(j)).squaredNorm(),
                                 static_cast<int>(j)};
            }
            std::partial_sort(order.begin(), order.begin() + k, order.end());
            double penalty = 0.0;
            for (int t = 0; t < k; ++t) {
                const std::int32_t input_rank = ranks.rank(i, order[static_cast<std::size_t>(t)].second);
                if (input_rank > k) penalty += static_cast<double>(input_rank - k);
            }
            report.per_point(i) = std::clamp(1.0 - normalizer * penalty, 0.0, 1.0);
        }
    });

    report.t_min = report.per_point.minCoeff();
    return report;
}

TrustworthinessReport trustworthiness(const FeatureMatrix& features, const Embedding& emb,
                                      int k, int threads) {
    if (features.values.rows() != emb.coords.rows())
        throw std::domain_error("trustworthiness: feature/embedding row mismatch");
    return trustworthiness(input_rank_table(features.values, threads), emb, k, threads);
}

HoleReport detect_holes(const Embedding& emb, const RasterConfig& rcfg) {
    rcfg.validate();
    if (emb.dim() != 2) throw std::domain_error("detect_holes: embedding must be 2D");
    const Eigen::Index m = emb.coords.rows();
    if (m < 3) throw std::domain_error("detect_holes: need at least 3 points");

    const int g = rcfg.grid_size;
    Raster raster;
    raster.g = g;
    const double x_min = emb.coords.col(0).minCoeff();
    const double x_max = emb.coords.col(0).maxCoeff();
    const double y_min = emb.coords.col(1).minCoeff();
    const double y_max = emb.coords.col(1).maxCoeff();
    const double span_x = (x_max > x_min) ? x_max - x_min : 1.0;
    const double span_y = (y_max > y_min) ? y_max - y_min : 1.0;
    raster.x0 = x_min - 0.05 * span_x;
    raster.y0 = y_min - 0.05 * span_y;
    raster.wx = span_x * 1.10;
    raster.wy = span_y * 1.10;

    Mask occupied(static_cast<std::size_t>(g) * g, 0);
    std::vector<std::vector<int>> cell_samples(static_cast<std::size_t>(g) * g);
    for (Eigen::Index i = 0; i < m; ++i) {
        const int cx = raster.cell_x(emb.coords(i, 0));
        const int cy = raster.cell_y(emb.coords(i, 1));
        const std::size_t idx = static_cast<std::size_t>(cy * g + cx);
        occupied[idx] = 1;
        cell_samples[idx].push_back(emb.index_map[static_cast<std::size_t>(i)]);
    }

    const Mask closed = dilate(occupied, g, rcfg.closing_radius);
    const Mask outside = outside_region(closed, g);

    // Area threshold relative to the occupied bounding box.
    int bx_min = g, bx_max = -1, by_min = g, by_max = -1;
    for (int y = 0; y < g; ++y) {
        for (int x = 0; x < g; ++x) {
            if (!closed[static_cast<std::size_t>(y * g + x)]) continue;
            bx_min = std::min(bx_min, x);
            bx_max = std::max(bx_max, x);
            by_min = std::min(by_min, y);
            by_max = std::max(by_max, y);
        }
    }
    const double box_cells =
        static_cast<double>(bx_max - bx_min + 1) * static_cast<double>(by_max - by_min + 1);
    const double min_area = rcfg.min_hole_area * box_cells;

    const auto make_hole = [&](const std::vector<int>& cells) {
        DetectedHole hole;
        hole.area_cells = static_cast<int>(cells.size());
        double cx_acc = 0.0, cy_acc = 0.0;
        Mask hole_mask(static_cast<std::size_t>(g) * g, 0);
        for (int cell : cells) {
            hole_mask[static_cast<std::size_t>(cell)] = 1;
            cx_acc += raster.center_x(cell % g);
            cy_acc += raster.center_y(cell / g);
        }
        hole.centroid = {cx_acc / cells.size(), cy_acc / cells.size()};

        // Ring of source samples: occupied cells within closing_radius + 1
        // Chebyshev cells of the void (8-adjacency once the closing is undone).
        const Mask ring = dilate(hole_mask, g, rcfg.closing_radius + 1);
        std::set<int> ids;
        for (int cell = 0; cell < g * g; ++cell) {
            if (!ring[static_cast<std::size_t>(cell)]) continue;
            for (int id : cell_samples[static_cast<std::size_t>(cell)]) ids.insert(id);
        }
        hole.boundary_sample_ids.assign(ids.begin(), ids.end());
        return hole;
    };

    HoleReport report;

    // Enclosed voids: empty, not reachable from the border.
    Mask enclosed(static_cast<std::size_t>(g) * g, 0);
    for (std::size_t idx = 0; idx < enclosed.size(); ++idx)
        enclosed[idx] = (!closed[idx] && !outside[idx]) ? 1 : 0;
    for (const auto& cells : components_of(enclosed, g)) {
        if (static_cast<double>(cells.size()) >= min_area) report.holes.push_back(make_hole(cells));
    }

    // Open anomalies: pockets of the outside region that a generous
    // morphological closing of the cloud would swallow (notches and tails).
    // Raggedness along a convex rim also survives the closing, so a pocket
    // must additionally reach deep: its farthest cell sits several steps away
    // from the unenclosed sky.
    const int pocket_radius = std::max(2 * rcfg.closing_radius, g / 8);
    const Mask pocket_closure = padded_closing(closed, g, pocket_radius);
    Mask pockets(static_cast<std::size_t>(g) * g, 0);
    for (std::size_t idx = 0; idx < pockets.size(); ++idx)
        pockets[idx] = (pocket_closure[idx] && outside[idx]) ? 1 : 0;

    // Multi-source BFS over the outside region, seeded at open-sky cells.
    std::vector<int> sky_depth(static_cast<std::size_t>(g) * g, -1);
    {
        std::deque<int> queue;
        for (int cell = 0; cell < g * g; ++cell) {
            if (outside[static_cast<std::size_t>(cell)] &&
                !pocket_closure[static_cast<std::size_t>(cell)]) {
                sky_depth[static_cast<std::size_t>(cell)] = 0;
                queue.push_back(cell);
            }
        }
        while (!queue.empty()) {
            const int cell = queue.front();
            queue.pop_front();
            const int x = cell % g;
            const int y = cell / g;
            const auto visit = [&](int nx, int ny) {
                const int idx = ny * g + nx;
                if (!outside[static_cast<std::size_t>(idx)] ||
                    sky_depth[static_cast<std::size_t>(idx)] >= 0)
                    return;
                sky_depth[static_cast<std::size_t>(idx)] =
                    sky_depth[static_cast<std::size_t>(cell)] + 1;
                queue.push_back(idx);
            };
            if (x > 0) visit(x - 1, y);
            if (x + 1 < g) visit(x + 1, y);
            if (y > 0) visit(x, y - 1);
            if (y + 1 < g) visit(x, y + 1);
        }
    }
    const int min_depth = std::max(3, pocket_radius / 2);
    for (const auto& cells : components_of(pockets, g)) {
        if (static_cast<double>(cells.size()) < min_area) continue;
        int depth = 0;
        for (int cell : cells) depth = std::max(depth, sky_depth[static_cast<std::size_t>(cell)]);
        if (depth >= min_depth) report.open_anomalies.push_back(make_hole(cells));
    }

    const auto order_holes = [](std::vector<DetectedHole>& holes) {
        std::sort(holes.begin(), holes.end(), [](const DetectedHole& a, const DetectedHole& b) {
            if (a.area_cells != b.area_cells) return a.area_cells > b.area_cells;
            if (a.centroid[0] != b.centroid[0]) return a.centroid[0] < b.centroid[0];
            return a.centroid[1] < b.centroid[1];
        });
    };
    order_holes(report.holes);
    order_holes(report.open_anomalies);
    return report;
}

double boundary_overlap(const HoleReport& report, const HoleGroundTruth& truth,
                        const GridSpec& grid) {
    if (truth.boundary_indices.empty())
        throw std::invalid_argument("boundary_overlap: ground truth has no boundary");

    std::set<int> detected;
    for (const DetectedHole& hole : report.holes)
        detected.insert(hole.boundary_sample_ids.begin(), hole.boundary_sample_ids.end());
    if (detected.empty()) return 0.0;

    const int cols = grid.cols;
    int hits = 0;
    for (int id : detected) {
        const int r = id / cols;
        const int c = id % cols;
        bool close = false;
        for (int truth_id : truth.boundary_indices) {
            const int tr = truth_id / cols;
            const int tc = truth_id % cols;
            if (std::max(std::abs(r - tr), std::abs(c - tc)) <= 2) {
                close = true;
                break;
            }
        }
        if (close) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(detected.size());
}

std::string hole_report_json(const HoleReport& report) {
    nlohmann::ordered_json doc;
    doc["num_holes"] = report.num_holes();
    const auto emit = [](const DetectedHole& hole) {
        nlohmann::ordered_json j;
        j["area_cells"] = hole.area_cells;
        j["centroid"] = {hole.centroid[0], hole.centroid[1]};
        j["boundary_sample_ids"] = hole.boundary_sample_ids;
        return j;
    };
    doc["holes"] = nlohmann::ordered_json::array();
    for (const DetectedHole& hole : report.holes) doc["holes"].push_back(emit(hole));
    doc["open_anomalies"] = nlohmann::ordered_json::array();
    for (const DetectedHole& hole : report.open_anomalies)
        doc["open_anomalies"].push_back(emit(hole));
    return doc.dump(2) + "\n";
}

std::string trustworthiness_json(const TrustworthinessReport& report) {
    nlohmann::ordered_json doc;
    doc["k"] = report.k;
    doc["t_min"] = report.t_min;
    doc["t_mean"] = report.mean();
    doc["per_point"] = std::vector<double>(report.per_point.data(),
                                           report.per_point.data() + report.per_point.size());
    return doc.dump(2) + "\n";
}

}  // namespace holescope
