#pragma once

#include "holescope/embed.hpp"
#include "holescope/neighbors.hpp"

#include <Eigen/Dense>

namespace holescope {

struct SpectralDecomposition {
    Eigen::VectorXd eigenvalues;   // ascending
    Eigen::MatrixXd eigenvectors;  // columns match eigenvalues
};

/// Smallest k eigenpairs of the symmetric normalized Laplacian
/// L = I - D^(-1/2) W D^(-1/2) of a symmetric graph. Dense solve for small
/// graphs, Lanczos with full reorthogonalization above that. Intended for
/// connected graphs; vertices of degree zero are rejected.
SpectralDecomposition laplacian_eigs(const NeighborGraph& g, int k);

/// Baseline embedding / UMAP initialization: Laplacian eigenvectors 2..dim+1
/// per connected component, each coordinate scaled to [-10, 10], components
/// offset side by side along the first axis.
Embedding spectral_layout(const NeighborGraph& g, int dim);

}  // namespace holescope
