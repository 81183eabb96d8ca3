#pragma once

#include "holescope/features.hpp"

#include <Eigen/Dense>

#include <filesystem>
#include <vector>

namespace holescope {

/// Exact nearest-neighbor table: row i lists the n closest other rows,
/// distances ascending, ties broken by lower row index.
struct KnnResult {
    Eigen::MatrixXi neighbor_ids;  // M' x n
    Eigen::MatrixXd distances;     // M' x n
};

/// Per-point neighborhood scales: rho is the nearest strictly positive
/// neighbor distance, sigma solves
/// sum_j exp(-max(0, d_ij - rho_i)/sigma_i) = log2(n) when a root exists.
struct FuzzyNeighborhood {
    Eigen::VectorXd rho;
    Eigen::VectorXd sigma;
};

struct GraphEdge {
    int i = 0;
    int j = 0;
    double weight = 0.0;
};

/// Weighted neighbor graph. Directed after fuzzy_weights; symmetric graphs
/// store each undirected edge once with i < j.
struct NeighborGraph {
    int num_vertices = 0;
    bool symmetric = false;
    std::vector<GraphEdge> edges;
};

/// Exact blocked all-pairs Euclidean kNN, self excluded, deterministic.
/// Throws std::domain_error when n >= number of rows.
KnnResult knn_exact(const Eigen::MatrixXd& points, int n, int threads = 1);
KnnResult knn_exact(const FeatureMatrix& features, int n, int threads = 1);

/// Scale fitting per row; sigma by bisection on [1e-6, 1e3], 64 iterations.
/// Rows whose surplus distances are all zero fall back to sigma = 1. Throws
/// std::domain_error (naming the row) when a row has no positive distance.
FuzzyNeighborhood local_scales(const KnnResult& knn, int n);

/// Directed exponential weights w_ij = exp(-max(0, d_ij - rho_i)/sigma_i);
/// every row's nearest neighbor gets weight exactly 1.
NeighborGraph fuzzy_weights(const KnnResult& knn, const FuzzyNeighborhood& fn);

/// Probabilistic t-conorm symmetrization w = w1 + w2 - w1*w2 with missing
/// directions treated as 0; drops nothing else, keeps weights in (0, 1].
NeighborGraph symmetrize(const NeighborGraph& g);

/// Debug dump as "i,j,weight" CSV rows.
void write_graph_csv(const NeighborGraph& g, const std::filesystem::path& path);

}  // namespace holescope
