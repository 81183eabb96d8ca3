#include "holescope/scenario.hpp"

#include "holescope/threading.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>
#include <string>

namespace holescope {
namespace {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

Vec2 operator-(const Vec2& a, const Vec2& b) { return {a.x - b.x, a.y - b.y}; }
Vec2 operator+(const Vec2& a, const Vec2& b) { return {a.x + b.x, a.y + b.y}; }
Vec2 operator*(double s, const Vec2& v) { return {s * v.x, s * v.y}; }
double dot(const Vec2& a, const Vec2& b) { return a.x * b.x + a.y * b.y; }
double norm(const Vec2& v) { return std::hypot(v.x, v.y); }

/// Liang-Barsky overlap test between segment a->b and a closed rectangle.
bool segment_hits_rect(const Vec2& a, const Vec2& b, const Rect& r) {
    const double dx = b.x - a.x;
    const double dy = b.y - a.y;
    double t_lo = 0.0;
    double t_hi = 1.0;

    const auto clip = [&](double delta, double dist) {
        if (delta == 0.0) return dist >= 0.0;  // parallel: inside slab or not
        const double t = dist / delta;
        if (delta > 0.0) {
            t_hi = std::min(t_hi, t);
        } else {
            t_lo = std::max(t_lo, t);
        }
        return t_lo <= t_hi;
    };

    return clip(-dx, a.x - r.x_min) && clip(dx, r.x_max - a.x) &&
           clip(-dy, a.y - r.y_min) && clip(dy, r.y_max - a.y);
}

bool segment_blocked(const Vec2& a, const Vec2& b, const std::vector<Rect>& blockers) {
    for (const Rect& r : blockers) {
        if (segment_hits_rect(a, b, r)) return true;
    }
    return false;
}

MultipathComponent make_component(double path_length, double aoa, double wavelength,
                                  std::complex<double> extra_gain) {
    MultipathComponent mpc;
    const double magnitude = wavelength / (4.0 * M_PI * path_length);
    mpc.amplitude = extra_gain * std::polar(magnitude, -2.0 * M_PI * path_length / wavelength);
    mpc.aoa_rad = aoa;
    mpc.delay_s = path_length / kSpeedOfLight;
    return mpc;
}

std::vector<int> boundary_ring(const std::vector<std::uint8_t>& in_hole, const GridSpec& grid) {
    std::vector<int> ring;
    const int rows = grid.rows;
    const int cols = grid.cols;
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            const int id = r * cols + c;
            if (in_hole[id]) continue;
            const bool adjacent =
                (r > 0 && in_hole[id - cols]) || (r + 1 < rows && in_hole[id + cols]) ||
                (c > 0 && in_hole[id - 1]) || (c + 1 < cols && in_hole[id + 1]);
            if (adjacent) ring.push_back(id);
        }
    }
    return ring;
}

HoleGroundTruth truth_from_mask(const std::vector<std::uint8_t>& in_hole, const GridSpec& grid) {
    HoleGroundTruth truth;
    for (int id = 0; id < static_cast<int>(in_hole.size()); ++id) {
        if (in_hole[id]) truth.ch_indices.push_back(id);
    }
    truth.boundary_indices = boundary_ring(in_hole, grid);
    return truth;
}

}  // namespace

void GridSpec::validate() const {
    if (rows < 1 || cols < 1) throw std::domain_error("GridSpec: rows and cols must be >= 1");
    if (!(spacing > 0.0)) throw std::domain_error("GridSpec: spacing must be > 0");
}

std::vector<Location> build_grid(const GridSpec& spec) {
    spec.validate();
    std::vector<Location> locations;
    locations.reserve(static_cast<std::size_t>(spec.num_samples()));
    for (int r = 0; r < spec.rows; ++r) {
        for (int c = 0; c < spec.cols; ++c) {
            locations.push_back({spec.origin.x + spec.spacing * static_cast<double>(c),
                                 spec.origin.y + spec.spacing * static_cast<double>(r),
                                 spec.ue_height});
        }
    }
    return locations;
}

std::vector<MultipathComponent> trace_paths(const Location& ue, const Geometry& geo,
                                            const ArrayConfig& cfg) {
    const Vec2 bs{geo.bs_location.x, geo.bs_location.y};
    const Vec2 rx{ue.x, ue.y};
    const double direct = norm(rx - bs);
    if (direct == 0.0) throw std::domain_error("trace_paths: UE coincides with the BS");

    const double wavelength = cfg.wavelength_m();
    std::vector<MultipathComponent> mpcs;

    if (!segment_blocked(bs, rx, geo.blockers)) {
        const double aoa = std::atan2(rx.y - bs.y, rx.x - bs.x);
        mpcs.push_back(make_component(direct, aoa, wavelength, {1.0, 0.0}));
    }

    for (const Reflector& wall : geo.reflectors) {
        if (std::abs(wall.gamma) > 1.0 + 1e-12)
            throw std::domain_error("trace_paths: reflector gain magnitude exceeds 1");
        const Vec2 p1{wall.x1, wall.y1};
        const Vec2 p2{wall.x2, wall.y2};
        const Vec2 axis = p2 - p1;
        const double axis_len2 = dot(axis, axis);
        if (axis_len2 == 0.0) continue;  // degenerate wall

        // Mirror the BS across the wall line.
        const Vec2 rel = bs - p1;
        const double along = dot(rel, axis) / axis_len2;
        const Vec2 foot = p1 + along * axis;
        const Vec2 image = foot + (foot - bs);
        const Vec2 to_ue = rx - image;
        const double unfolded = norm(to_ue);
        if (unfolded == 0.0) continue;  // BS on the wall line, or UE at the image

        // Reflection point: intersection of image->UE with the wall segment.
        const double denom = to_ue.x * (-axis.y) + to_ue.y * axis.x;
        if (denom == 0.0) continue;  // parallel, no single bounce
        const Vec2 gap = p1 - image;
        const double s = (gap.x * (-axis.y) + gap.y * axis.x) / denom;
        const double u = (to_ue.x * gap.y - to_ue.y * gap.x) / denom;
        if (s < 0.0 || s > 1.0 || u < 0.0 || u > 1.0) continue;

        const Vec2 bounce = image + s * to_ue;
        if (norm(bounce - bs) == 0.0) continue;
        if (segment_blocked(bs, bounce, geo.blockers) ||
            segment_blocked(bounce, rx, geo.blockers))
            continue;

        const double aoa = std::atan2(bounce.y - bs.y, bounce.x - bs.x);
        mpcs.push_back(make_component(unfolded, aoa, wavelength, wall.gamma));
    }

    return mpcs;
}

Dataset synth_dataset(const GridSpec& grid, const Geometry& geo, const ArrayConfig& cfg,
                      double snr_db, std::uint64_t seed, int threads) {
    grid.validate();
    cfg.validate();
    for (const Rect& r : geo.blockers) {
        if (!(r.x_max > r.x_min) || !(r.y_max > r.y_min))
            throw std::domain_error("synth_dataset: degenerate blocker rectangle");
    }

    const std::vector<Location> locations = build_grid(grid);
    const int m = grid.num_samples();

    Dataset ds;
    ds.array = cfg;
    ds.grid = grid;
    ds.samples.resize(static_cast<std::size_t>(m));
    ds.mpcs.emplace(static_cast<std::size_t>(m));

    const bool noisy = !(std::isinf(snr_db) && snr_db > 0.0);
    parallel_for(static_cast<std::size_t>(m), threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            const int id = static_cast<int>(i);
            auto paths = trace_paths(locations[i], geo, cfg);
            ChannelSample sample = synth_channel(paths, cfg, id);
            if (noisy && sample.H.squaredNorm() > 0.0) {
                const std::uint64_t mixed =
                    seed ^ (0x9E3779B97F4A7C15ULL * (static_cast<std::uint64_t>(id) + 1));
                sample = add_noise(sample, snr_db, mixed);
            }
            // Quantize to the file payload precision so persistence round
            // trips are bit-exact.
            sample.H = sample.H.cast<std::complex<float>>().cast<std::complex<double>>();
            ds.samples[i] = std::move(sample);
            (*ds.mpcs)[i] = std::move(paths);
        }
    });

    ds.hidden_locations = std::move(locations);
    return ds;
}

std::pair<Dataset, HoleGroundTruth> carve_holes(Dataset ds, const std::vector<Rect>& regions) {
    if (!ds.hidden_locations)
        throw std::invalid_argument("carve_holes: dataset lacks hidden locations");
    const int m = ds.num_samples();
    std::vector<std::uint8_t> carved(static_cast<std::size_t>(m), 0);

    for (int id = 0; id < m; ++id) {
        const Location& loc = (*ds.hidden_locations)[static_cast<std::size_t>(id)];
        for (const Rect& region : regions) {
            if (region.contains(loc.x, loc.y)) {
                carved[static_cast<std::size_t>(id)] = 1;
                break;
            }
        }
    }

    for (int id = 0; id < m; ++id) {
        if (!carved[static_cast<std::size_t>(id)]) continue;
        ChannelSample& sample = ds.samples[static_cast<std::size_t>(id)];
        sample.H.setZero();
        if (ds.mpcs) (*ds.mpcs)[static_cast<std::size_t>(id)].clear();
    }

    HoleGroundTruth truth = truth_from_mask(carved, ds.grid);
    ds.ch_labels = std::move(carved);
    return {std::move(ds), std::move(truth)};
}

HoleGroundTruth classify_coverage(const Dataset& ds, double rss0_db) {
    if (!ds.mpcs)
        throw std::invalid_argument("classify_coverage: dataset lacks per-sample path lists");
    const int m = ds.num_samples();
    std::vector<std::uint8_t> below(static_cast<std::size_t>(m), 0);
    for (int id = 0; id < m; ++id) {
        if (rss_db((*ds.mpcs)[static_cast<std::size_t>(id)]) < rss0_db)
            below[static_cast<std::size_t>(id)] = 1;
    }
    return truth_from_mask(below, ds.grid);
}

}  // namespace holescope
