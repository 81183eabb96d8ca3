#pragma once

#include "holescope/scenario.hpp"

#include <Eigen/Dense>

#include <complex>
#include <vector>

namespace holescope {

/// Discretization of the angle-delay plane. The angle axis is sampled in
/// normalized spatial frequency u = cos(aoa)/2 on u_p = -1/2 + p/N_D; the
/// delay axis on tau_q = q/W (the bandwidth resolution).
struct VirtualGridConfig {
    int num_angle_bins = 32;
    int num_delay_bins = 60;
    double bandwidth_hz = 500e6;

    void validate() const;
};

enum class Representation { kElement, kVirtual };
enum class FeatureComponent { kAbs, kAngle, kReal, kImag };

struct FeatureSpec {
    Representation representation = Representation::kVirtual;
    FeatureComponent component = FeatureComponent::kAbs;
    bool normalize = true;
};

/// Real-valued sample-by-feature matrix. Rows whose source channel was all
/// zero (carved holes) are dropped; index_map holds the surviving sample id
/// for each row.
struct FeatureMatrix {
    Eigen::MatrixXd values;
    std::vector<int> index_map;

    int num_rows() const { return static_cast<int>(values.rows()); }
    int dim() const { return static_cast<int>(values.cols()); }
};

/// Normalized Dirichlet kernel sin(pi*N*x)/(N*sin(pi*x)) * exp(-j*2*pi*x).
/// Integer arguments take the analytic limit, so f_N(0) = 1 and
/// f_N(m) = (-1)^(m*(N-1)) with no singular spike.
std::complex<double> dirichlet_kernel(double x, int n);

/// sin(pi*x)/(pi*x) with sinc(0) = 1.
double sinc(double x);

/// Angle-delay response on the virtual grid from path parameters:
/// entry (p, q) = sum_k amp_k * f_{N_D}(u_p - u(aoa_k)) * sinc(W*(tau_q - delay_k)).
Eigen::MatrixXcd virtual_transform(const std::vector<MultipathComponent>& mpcs,
                                   const VirtualGridConfig& vcfg);

/// Scaling for the Fourier fallback below. kKernel reproduces the analytic
/// transform exactly for on-grid paths; kUnitary preserves the Frobenius norm
/// when the output grid is square with the input (N_D = N, T_D = F).
enum class DftScaling { kKernel, kUnitary };

/// Fourier approximation of the virtual representation straight from the
/// channel matrix, for ingested datasets that carry no path parameters.
/// Requires N_D >= N and T_D <= F; throws std::domain_error otherwise.
Eigen::MatrixXcd virtual_transform_dft(const ChannelSample& sample,
                                       const VirtualGridConfig& vcfg,
                                       DftScaling scaling = DftScaling::kKernel);

/// Feature assembly: per sample, pick the representation (virtual prefers the
/// analytic path when the dataset carries path lists, else the Fourier
/// fallback), vectorize row-major, apply the component transform, and
/// unit-normalize. Zero-norm rows are dropped into index_map; throws
/// std::runtime_error when every row is zero.
FeatureMatrix assemble_features(const Dataset& ds, const FeatureSpec& spec,
                                const VirtualGridConfig& vcfg, int threads = 1);

}  // namespace holescope
