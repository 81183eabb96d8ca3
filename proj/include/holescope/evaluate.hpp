#pragma once

#include "holescope/embed.hpp"
#include "holescope/features.hpp"
#include "holescope/scenario.hpp"

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace holescope {

/// Per-point trustworthiness TW(i, k) in [0, 1] and its minimum. The mean of
/// the per-point values recovers the classical global score.
struct TrustworthinessReport {
    Eigen::VectorXd per_point;
    double t_min = 0.0;
    int k = 0;

    double mean() const { return per_point.size() ? per_point.mean() : 0.0; }
};

/// Input-space neighbor ranks: rank(i, j) is the position of j in the
/// distance ordering from i (1 = nearest, ties by index, diagonal 0).
/// Shared across embeddings so repeated scoring avoids re-ranking.
struct RankTable {
    Eigen::Matrix<std::int32_t, Eigen::Dynamic, Eigen::Dynamic> rank;
};

RankTable input_rank_table(const Eigen::MatrixXd& points, int threads = 1);

/// TW(i,k) = 1 - 2/(k(2M'-3k-1)) * sum over output-space k-neighbors of i
/// that are not input-space k-neighbors of (input rank - k), clamped to
/// [0, 1]. Requires k < M'/2 (normalizer positivity).
TrustworthinessReport trustworthiness(const RankTable& ranks, const Embedding& emb, int k,
                                      int threads = 1);
TrustworthinessReport trustworthiness(const FeatureMatrix& features, const Embedding& emb,
                                      int k, int threads = 1);

/// Occupancy-raster hole detection settings. min_hole_area is a fraction of
/// the occupied bounding-box cell count.
struct RasterConfig {
    int grid_size = 128;
    int closing_radius = 1;
    double min_hole_area = 0.002;

    void validate() const;
};

struct DetectedHole {
    int area_cells = 0;
    std::array<double, 2> centroid{0.0, 0.0};
    std::vector<int> boundary_sample_ids;  // sorted ascending
};

/// Enclosed voids plus border-connected inlets ("open anomalies": deep
/// pockets of the outside region reaching into the point cloud, reported
/// separately and never counted as holes).
struct HoleReport {
    std::vector<DetectedHole> holes;
    std::vector<DetectedHole> open_anomalies;

    int num_holes() const { return static_cast<int>(holes.size()); }
};

/// Rasterizes a 2D embedding onto a grid_size^2 occupancy grid over the
/// bounding box (5% margin), dilates by closing_radius, flood-fills the
/// outside from the border, and reports every remaining empty 4-connected
/// component above the area threshold. Boundary samples are the occupied
/// points ringing each hole. Throws std::domain_error for dim != 2 or fewer
/// than 3 points.
HoleReport detect_holes(const Embedding& emb, const RasterConfig& rcfg);

/// Fraction of detected boundary samples whose grid cell lies within 2 cells
/// (Chebyshev) of any true boundary sample. Throws std::invalid_argument when
/// the ground truth has no boundary.
double boundary_overlap(const HoleReport& report, const HoleGroundTruth& truth,
                        const GridSpec& grid);

std::string hole_report_json(const HoleReport& report);
std::string trustworthiness_json(const TrustworthinessReport& report);

}  // namespace holescope
