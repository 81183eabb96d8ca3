#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace holescope {

/// Deterministic random source with self-contained distributions.
///
/// The mt19937_64 engine output is fully specified by the standard, and the
/// distributions below avoid the implementation-defined std::*_distribution
/// adapters, so identical seeds produce identical streams on every platform.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform double in [0, 1) with 53 bits of precision.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform double in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform index in [0, n). Modulo bias is negligible for n << 2^64.
    std::size_t uniform_index(std::size_t n) { return static_cast<std::size_t>(next_u64() % n); }

    /// Standard normal via Box-Muller.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        double u2 = uniform();
        // u1 = 0 would send log to -inf
        while (u1 <= 0.0) u1 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double t = 2.0 * M_PI * u2;
        spare_ = r * std::sin(t);
        has_spare_ = true;
        return r * std::cos(t);
    }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace holescope
