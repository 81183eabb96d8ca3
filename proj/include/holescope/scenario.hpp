#pragma once

#include "holescope/channel.hpp"

#include <complex>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

namespace holescope {

struct Location {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;
};

/// Uniform x-y service-area grid; samples are listed row-major
/// (sample_id = row * cols + col).
struct GridSpec {
    int rows = 1;
    int cols = 1;
    double spacing = 0.2;
    Location origin{};
    double ue_height = 1.5;

    int num_samples() const { return rows * cols; }
    void validate() const;
};

/// Axis-aligned rectangle in the x-y plane.
struct Rect {
    double x_min = 0.0;
    double x_max = 0.0;
    double y_min = 0.0;
    double y_max = 0.0;

    bool contains(double x, double y) const {
        return x >= x_min && x <= x_max && y >= y_min && y <= y_max;
    }
};

/// Reflecting wall segment with complex reflection gain, |gamma| <= 1.
struct Reflector {
    double x1 = 0.0, y1 = 0.0;
    double x2 = 0.0, y2 = 0.0;
    std::complex<double> gamma{-0.7, 0.0};
};

/// Propagation geometry. Blockers absorb; reflectors produce one first-order
/// image-method path each. All propagation is in the x-y plane (constant
/// heights); the ULA axis is the +x direction, so paths arriving from y > bs.y
/// have an angle of arrival in (0, pi).
struct Geometry {
    Location bs_location{};
    std::vector<Rect> blockers;
    std::vector<Reflector> reflectors;
};

/// Ordered channel collection with optional evaluation-only side information.
/// The hidden locations, labels, and path lists never feed the embedding; they
/// exist so that detection quality can be scored after the fact.
struct Dataset {
    ArrayConfig array{};
    GridSpec grid{};
    std::vector<ChannelSample> samples;
    std::optional<std::vector<Location>> hidden_locations;
    std::optional<std::vector<std::uint8_t>> ch_labels;  // 1 = inside a coverage hole
    std::optional<std::vector<std::vector<MultipathComponent>>> mpcs;

    int num_samples() const { return static_cast<int>(samples.size()); }
};

/// Ground-truth hole description: carved/below-threshold sample ids plus the
/// surrounding 4-neighbor grid ring (always disjoint from ch_indices).
struct HoleGroundTruth {
    std::vector<int> ch_indices;        // sorted ascending
    std::vector<int> boundary_indices;  // sorted ascending
};

/// Row-major grid locations at ue_height.
std::vector<Location> build_grid(const GridSpec& spec);

/// Image-method multipath for one UE position: a line-of-sight component when
/// the BS-UE segment clears every blocker (|amp| = lambda/(4*pi*d), phase
/// -2*pi*d/lambda, delay d/c), plus one first-order reflection per reflector
/// whose unfolded path is unblocked. Deterministic; throws std::domain_error
/// when ue coincides with the BS.
std::vector<MultipathComponent> trace_paths(const Location& ue, const Geometry& geo,
                                            const ArrayConfig& cfg);

/// Full synthetic dataset over the grid: trace + synthesize per location,
/// keeping locations and path lists as hidden side info. snr_db < +inf adds
/// measurement noise per sample (sample id mixed into the seed).
Dataset synth_dataset(const GridSpec& grid, const Geometry& geo, const ArrayConfig& cfg,
                      double snr_db = std::numeric_limits<double>::infinity(),
                      std::uint64_t seed = 0, int threads = 1);

/// Zeroes the channel of every sample whose hidden location falls inside any
/// region (grid indexing stays intact) and records the carved ground truth.
std::pair<Dataset, HoleGroundTruth> carve_holes(Dataset ds, const std::vector<Rect>& regions);

/// Threshold classification: ch_indices = { m : rss_db(paths_m) < rss0_db },
/// with the 4-neighbor boundary ring. Requires per-sample path lists.
HoleGroundTruth classify_coverage(const Dataset& ds, double rss0_db);

}  // namespace holescope
