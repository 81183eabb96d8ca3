#pragma once

#include "holescope/neighbors.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <vector>

namespace holescope {

struct UmapConfig {
    int dim = 2;
    int n = 15;               // neighborhood size
    double d_min = 0.15;      // minimum output-space distance
    int epochs = 500;
    double learning_rate = 1.0;
    int neg_samples = 5;
    std::uint64_t seed = 1;
    bool random_init = false;  // spectral initialization otherwise
    int threads = 1;           // > 1 trades bitwise reproducibility for speed
};

/// Output-space similarity curve parameters: w(d) = (1 + a*d^(2b))^-1.
struct LayoutParams {
    double a = 1.0;
    double b = 1.0;
};

struct Embedding {
    Eigen::MatrixXd coords;     // M' x dim
    std::vector<int> index_map;

    int num_rows() const { return static_cast<int>(coords.rows()); }
    int dim() const { return static_cast<int>(coords.cols()); }
};

/// Fits (a, b) so that (1 + a*x^(2b))^-1 tracks the target curve that is 1 up
/// to d_min and exp(-(x - d_min)) beyond it, least squares over 300 uniform
/// samples of [0, 3]. Damped Gauss-Newton from (1, 1); throws
/// std::runtime_error with the final residual on non-convergence.
LayoutParams fit_ab(double d_min);

/// Classical PCA scores on the top-dim principal directions of the column-
/// centered data. Sign convention: the largest-magnitude loading of each
/// direction is positive. Throws std::domain_error when rank < dim.
Embedding pca(const FeatureMatrix& features, int dim);

/// Fuzzy cross-entropy between graph weights and output similarities,
/// evaluated over every graph edge plus a deterministic set of sampled
/// non-edges for the repulsive mass. Output similarities are clamped to
/// [1e-12, 1 - 1e-12].
double cross_entropy(const NeighborGraph& g, const Embedding& emb, const LayoutParams& p,
                     std::uint64_t pair_seed = 0x705A1Eu);

/// Analytic gradient of cross_entropy with respect to the coordinates, using
/// the identical edge/non-edge pair set for the same pair_seed.
Eigen::MatrixXd cross_entropy_grad(const NeighborGraph& g, const Embedding& emb,
                                   const LayoutParams& p, std::uint64_t pair_seed = 0x705A1Eu);

/// Stochastic layout optimization: edges fire with frequency proportional to
/// weight (epochs-per-sample schedule); each firing applies one attractive
/// move to both endpoints and neg_samples repulsive moves against uniformly
/// sampled vertices. Per-coordinate steps are clipped to [-4, 4] and the
/// learning rate decays linearly to zero. Single-threaded runs are pure
/// functions of (g, init, cfg).
Embedding optimize_layout(const NeighborGraph& g, const Embedding& init, const UmapConfig& cfg);

/// Full pipeline: kNN -> scales -> fuzzy weights -> symmetrize -> init ->
/// optimize. The returned embedding inherits the feature index_map.
Embedding umap_embed(const FeatureMatrix& features, const UmapConfig& cfg);

/// CSV export with header "sample_id,x,y[,...]", %.17g coordinates.
void write_embedding_csv(const Embedding& emb, const std::filesystem::path& path);
Embedding read_embedding_csv(const std::filesystem::path& path);

}  // namespace holescope
