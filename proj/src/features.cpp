#include "holescope/features.hpp"

#include "holescope/threading.hpp"

#include <cmath>
#include <stdexcept>

namespace holescope {
namespace {

constexpr double kIntegerTol = 1e-9;

double component_value(std::complex<double> v, FeatureComponent c) {
    switch (c) {
        case FeatureComponent::kAbs:
            return std::abs(v);
        case FeatureComponent::kAngle:
            return std::arg(v);
        case FeatureComponent::kReal:
            return v.real();
        case FeatureComponent::kImag:
            return v.imag();
    }
    return 0.0;
}

}  // namespace

void VirtualGridConfig::validate() const {
    if (num_angle_bins < 1 || num_delay_bins < 1)
        throw std::domain_error("VirtualGridConfig: bin counts must be >= 1");
    if (!(bandwidth_hz > 0.0))
        throw std::domain_error("VirtualGridConfig: bandwidth must be > 0");
}

std::complex<double> dirichlet_kernel(double x, int n) {
    if (n < 1) throw std::domain_error("dirichlet_kernel: N must be >= 1");
    const double nearest = std::round(x);
    if (std::abs(x - nearest) < kIntegerTol) {
        // Analytic limit at integer m: exp(-j*2*pi*m) * (-1)^(m*(N-1)).
        const long long m = static_cast<long long>(nearest);
        const bool negative = (m * static_cast<long long>(n - 1)) % 2 != 0;
        return {negative ? -1.0 : 1.0, 0.0};
    }
    const double ratio = std::sin(M_PI * n * x) / (n * std::sin(M_PI * x));
    return ratio * std::polar(1.0, -2.0 * M_PI * x);
}

double sinc(double x) {
    if (std::abs(x) < kIntegerTol) return 1.0;
    return std::sin(M_PI * x) / (M_PI * x);
}

Eigen::MatrixXcd virtual_transform(const std::vector<MultipathComponent>& mpcs,
                                   const VirtualGridConfig& vcfg) {
    vcfg.validate();
    const int nd = vcfg.num_angle_bins;
    const int td = vcfg.num_delay_bins;
    const double w = vcfg.bandwidth_hz;

    Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(nd, td);
    Eigen::VectorXcd angle_gain(nd);
    Eigen::VectorXd delay_gain(td);

    for (const MultipathComponent& mpc : mpcs) {
        const double u_k = 0.5 * std::cos(mpc.aoa_rad);
        for (int p = 0; p < nd; ++p) {
            const double u_p = -0.5 + static_cast<double>(p) / nd;
            angle_gain(p) = dirichlet_kernel(u_p - u_k, nd);
        }
        for (int q = 0; q < td; ++q) {
            const double tau_q = static_cast<double>(q) / w;
            delay_gain(q) = sinc(w * (tau_q - mpc.delay_s));
        }
        out.noalias() += mpc.amplitude * angle_gain * delay_gain.transpose();
    }
    return out;
}

Eigen::MatrixXcd virtual_transform_dft(const ChannelSample& sample,
                                       const VirtualGridConfig& vcfg, DftScaling scaling) {
    vcfg.validate();
    const int n = static_cast<int>(sample.H.rows());
    const int f = static_cast<int>(sample.H.cols());
    const int nd = vcfg.num_angle_bins;
    const int td = vcfg.num_delay_bins;
    if (nd < n)
        throw std::domain_error("virtual_transform_dft: angle bins fewer than antennas");
    if (td > f)
        throw std::domain_error("virtual_transform_dft: delay bins exceed subcarriers");

    const Eigen::MatrixXcd& h = sample.H;

    // Angle stage: correlate the antenna axis with steering phases on the
    // u-grid. 1/sqrt(N) undoes the steering-vector normalization (kKernel);
    // 1/sqrt(N_D) makes the zero-padded transform norm-preserving (kUnitary).
    const double angle_scale =
        (scaling == DftScaling::kKernel) ? 1.0 / std::sqrt(static_cast<double>(n))
                                         : 1.0 / std::sqrt(static_cast<double>(nd));
    Eigen::MatrixXcd angle_basis(nd, n);
    for (int p_out = 0; p_out < nd; ++p_out) {
        const double u_p = -0.5 + static_cast<double>(p_out) / nd;
        for (int p = 0; p < n; ++p) {
            angle_basis(p_out, p) = angle_scale * std::polar(1.0, -2.0 * M_PI * u_p * p);
        }
    }
    const Eigen::MatrixXcd staged = angle_basis * h;  // nd x f

    Eigen::MatrixXcd out(nd, td);
    if (scaling == DftScaling::kKernel) {
        // Delay stage: correlate against the actual subcarrier phases on the
        // first F-1 subcarriers (the last one duplicates the first modulo the
        // 1/W delay grid period, so including it breaks on-grid orthogonality).
        const int span = std::max(1, f - 1);
        ArrayConfig axis;
        axis.num_antennas = 1;
        axis.bandwidth_hz = vcfg.bandwidth_hz;
        axis.num_subcarriers = f;
        const std::vector<double> freqs = subcarrier_grid(axis);
        Eigen::MatrixXcd delay_basis(f, td);
        delay_basis.setZero();
        for (int q = 0; q < span; ++q) {
            for (int q_out = 0; q_out < td; ++q_out) {
                const double tau_q = static_cast<double>(q_out) / vcfg.bandwidth_hz;
                delay_basis(q, q_out) =
                    std::polar(1.0 / span, 2.0 * M_PI * tau_q * freqs[static_cast<std::size_t>(q)]);
            }
        }
        out = staged * delay_basis;
    } else {
        // Unitary inverse DFT over the subcarrier axis, truncated to T_D bins.
        const double delay_scale = 1.0 / std::sqrt(static_cast<double>(f));
        Eigen::MatrixXcd delay_basis(f, td);
        for (int q = 0; q < f; ++q) {
            for (int q_out = 0; q_out < td; ++q_out) {
                delay_basis(q, q_out) =
                    std::polar(delay_scale, 2.0 * M_PI * q * q_out / static_cast<double>(f));
            }
        }
        out = staged * delay_basis;
    }
    return out;
}

FeatureMatrix assemble_features(const Dataset& ds, const FeatureSpec& spec,
                                const VirtualGridConfig& vcfg, int threads) {
    vcfg.validate();
    const int m = ds.num_samples();
    if (m == 0) throw std::runtime_error("assemble_features: empty dataset");

    const bool virtual_rep = spec.representation == Representation::kVirtual;
    const int dim = virtual_rep ? vcfg.num_angle_bins * vcfg.num_delay_bins
                                : ds.array.num_antennas * ds.array.num_subcarriers;
    const bool analytic = virtual_rep && ds.mpcs.has_value();

    Eigen::MatrixXd rows(m, dim);
    std::vector<std::uint8_t> keep(static_cast<std::size_t>(m), 0);

    parallel_for(static_cast<std::size_t>(m), threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            Eigen::MatrixXcd rep;
            if (virtual_rep) {
                rep = analytic ? virtual_transform((*ds.mpcs)[i], vcfg)
                               : virtual_transform_dft(ds.samples[i], vcfg);
            } else {
                rep = ds.samples[i].H;
            }

            // Row-major vectorization of the representation matrix.
            Eigen::Index col = 0;
            for (Eigen::Index r = 0; r < rep.rows(); ++r) {
                for (Eigen::Index c = 0; c < rep.cols(); ++c) {
                    rows(static_cast<Eigen::Index>(i), col++) =
                        component_value(rep(r, c), spec.component);
                }
            }

            const double norm = rows.row(static_cast<Eigen::Index>(i)).norm();
            if (norm > 0.0) {
                keep[i] = 1;
                if (spec.normalize) rows.row(static_cast<Eigen::Index>(i)) /= norm;
            }
        }
    });

    FeatureMatrix out;
    for (int i = 0; i < m; ++i) {
        if (keep[static_cast<std::size_t>(i)]) out.index_map.push_back(ds.samples[i].sample_id);
    }
    if (out.index_map.empty())
        throw std::runtime_error("assemble_features: every sample row has zero norm");

    out.values.resize(static_cast<Eigen::Index>(out.index_map.size()), dim);
    Eigen::Index r = 0;
    for (int i = 0; i < m; ++i) {
        if (keep[static_cast<std::size_t>(i)]) out.values.row(r++) = rows.row(i);
    }
    return out;
}

}  // namespace holescope
