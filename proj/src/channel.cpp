#include "holescope/channel.hpp"

#include "holescope/rng.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace holescope {

void ArrayConfig::validate() const {
    if (num_antennas < 1) throw std::domain_error("ArrayConfig: num_antennas must be >= 1");
    if (!(bandwidth_hz > 0.0)) throw std::domain_error("ArrayConfig: bandwidth must be > 0");
    if (num_subcarriers < 1) throw std::domain_error("ArrayConfig: num_subcarriers must be >= 1");
    if (!(carrier_frequency_hz > 0.0))
        throw std::domain_error("ArrayConfig: carrier frequency must be > 0");
}

Eigen::VectorXcd array_response(double aoa_rad, int num_antennas) {
    if (num_antennas < 1) throw std::domain_error("array_response: N must be >= 1");
    if (!(aoa_rad > 0.0 && aoa_rad < M_PI))
        throw std::domain_error("array_response: aoa " + std::to_string(aoa_rad) +
                                " outside (0, pi)");
    const double scale = 1.0 / std::sqrt(static_cast<double>(num_antennas));
    const double phase_step = M_PI * std::cos(aoa_rad);
    Eigen::VectorXcd a(num_antennas);
    for (int p = 0; p < num_antennas; ++p) {
        a(p) = std::polar(scale, phase_step * static_cast<double>(p));
    }
    return a;
}

std::vector<double> subcarrier_grid(const ArrayConfig& cfg) {
    cfg.validate();
    const int f = cfg.num_subcarriers;
    if (f == 1) return {0.0};
    std::vector<double> grid(f);
    const double step = cfg.bandwidth_hz / static_cast<double>(f - 1);
    for (int q = 0; q < f; ++q) {
        grid[q] = -0.5 * cfg.bandwidth_hz + step * static_cast<double>(q);
    }
    return grid;
}

ChannelSample synth_channel(const std::vector<MultipathComponent>& mpcs,
                            const ArrayConfig& cfg, int sample_id) {
    cfg.validate();
    const int n = cfg.num_antennas;
    const int f = cfg.num_subcarriers;
    const std::vector<double> freqs = subcarrier_grid(cfg);

    Eigen::MatrixXcd acc = Eigen::MatrixXcd::Zero(n, f);
    for (const MultipathComponent& mpc : mpcs) {
        const Eigen::VectorXcd steer = array_response(mpc.aoa_rad, n);
        for (int q = 0; q < f; ++q) {
            const std::complex<double> phase =
                std::polar(1.0, -2.0 * M_PI * mpc.delay_s * freqs[q]);
            acc.col(q) += mpc.amplitude * phase * steer;
        }
    }

    ChannelSample out;
    out.sample_id = sample_id;
    out.H = std::move(acc);
    return out;
}

double rss_db(const std::vector<MultipathComponent>& mpcs) {
    double power = 0.0;
    for (const MultipathComponent& mpc : mpcs) power += std::norm(mpc.amplitude);
    if (power <= 0.0) return kNegInfDb;
    return 10.0 * std::log10(power);
}

ChannelSample add_noise(const ChannelSample& sample, double snr_db, std::uint64_t seed) {
    if (std::isinf(snr_db) && snr_db > 0.0) return sample;

    const double energy = sample.H.squaredNorm();
    if (energy <= 0.0)
        throw std::domain_error("add_noise: zero-norm channel with finite SNR");

    const double entries = static_cast<double>(sample.H.rows()) *
                           static_cast<double>(sample.H.cols());
    const double noise_var = energy / (entries * std::pow(10.0, snr_db / 10.0));
    const double component_std = std::sqrt(noise_var / 2.0);

    Rng rng(seed);
    ChannelSample out;
    out.sample_id = sample.sample_id;
    out.H = sample.H;
    for (Eigen::Index q = 0; q < out.H.cols(); ++q) {
        for (Eigen::Index p = 0; p < out.H.rows(); ++p) {
            out.H(p, q) += std::complex<double>(component_std * rng.normal(),
                                                component_std * rng.normal());
        }
    }
    return out;
}

}  // namespace holescope
