#pragma once

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <limits>
#include <vector>

namespace holescope {

inline constexpr double kSpeedOfLight = 299792458.0;  // m/s

/// Sentinel for "no received power" in dB quantities.
inline constexpr double kNegInfDb = -std::numeric_limits<double>::infinity();

/// Uniform linear array and wideband sampling configuration.
struct ArrayConfig {
    int num_antennas = 32;
    double carrier_frequency_hz = 60e9;
    double bandwidth_hz = 500e6;
    int num_subcarriers = 64;

    double wavelength_m() const { return kSpeedOfLight / carrier_frequency_hz; }

    /// Throws std::domain_error on invalid dimensions.
    void validate() const;
};

/// One propagation path: complex gain, azimuth angle of arrival at the array
/// (physical paths lie in (0, pi)), and absolute delay.
struct MultipathComponent {
    std::complex<double> amplitude{0.0, 0.0};
    double aoa_rad = 0.0;
    double delay_s = 0.0;
};

/// Complex channel matrix, antennas x subcarriers. Dataset builders quantize
/// entries to float32 precision so persistence round trips are bit-exact; the
/// synthesis math itself runs in double.
struct ChannelSample {
    Eigen::MatrixXcd H;
    int sample_id = 0;
};

/// Half-wavelength ULA steering vector: entry p is exp(j*pi*p*cos(aoa))/sqrt(N).
/// Unit Euclidean norm by construction. Throws std::domain_error for
/// aoa outside (0, pi) or N < 1.
Eigen::VectorXcd array_response(double aoa_rad, int num_antennas);

/// Baseband subcarrier offsets: f_q = -W/2 + q*W/(F-1) for F >= 2, {0} for F = 1.
std::vector<double> subcarrier_grid(const ArrayConfig& cfg);

/// Channel synthesis: H[:, q] = sum_k amp_k * a(aoa_k) * exp(-j*2*pi*delay_k*f_q).
/// An empty component list yields the all-zero matrix.
ChannelSample synth_channel(const std::vector<MultipathComponent>& mpcs,
                            const ArrayConfig& cfg, int sample_id = 0);

/// Received signal strength: 10*log10(sum_k |amp_k|^2). Empty list -> kNegInfDb.
double rss_db(const std::vector<MultipathComponent>& mpcs);

/// Adds circularly symmetric complex Gaussian noise with per-entry variance
/// ||H||_F^2 / (N*F*10^(snr_db/10)). Pure function of (sample, snr_db, seed);
/// snr_db = +inf returns the input unchanged. Throws std::domain_error for a
/// zero-norm input with finite snr_db.
ChannelSample add_noise(const ChannelSample& sample, double snr_db, std::uint64_t seed);

}  // namespace holescope
