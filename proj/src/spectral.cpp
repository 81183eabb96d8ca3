#include "holescope/spectral.hpp"

#include "holescope/rng.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace holescope {
namespace {

constexpr Eigen::Index kDenseLimit = 1024;
constexpr std::uint64_t kStartSeed = 0x5EEDCAFEF00DULL;

/// Compressed adjacency of a symmetric graph.
struct Csr {
    std::vector<int> offsets;
    std::vector<int> targets;
    std::vector<double> weights;
    Eigen::VectorXd degree;
};

Csr build_csr(const NeighborGraph& g) {
    Csr csr;
    const int nv = g.num_vertices;
    std::vector<int> counts(static_cast<std::size_t>(nv), 0);
    for (const GraphEdge& e : g.edges) {
        ++counts[static_cast<std::size_t>(e.i)];
        ++counts[static_cast<std::size_t>(e.j)];
    }
    csr.offsets.assign(static_cast<std::size_t>(nv) + 1, 0);
    for (int v = 0; v < nv; ++v) csr.offsets[static_cast<std::size_t>(v) + 1] =
        csr.offsets[static_cast<std::size_t>(v)] + counts[static_cast<std::size_t>(v)];
    csr.targets.resize(static_cast<std::size_t>(csr.offsets.back()));
    csr.weights.resize(csr.targets.size());
    std::vector<int> cursor(csr.offsets.begin(), csr.offsets.end() - 1);
    for (const GraphEdge& e : g.edges) {
        csr.targets[static_cast<std::size_t>(cursor[static_cast<std::size_t>(e.i)])] = e.j;
        csr.weights[static_cast<std::size_t>(cursor[static_cast<std::size_t>(e.i)]++)] = e.weight;
        csr.targets[static_cast<std::size_t>(cursor[static_cast<std::size_t>(e.j)])] = e.i;
        csr.weights[static_cast<std::size_t>(cursor[static_cast<std::size_t>(e.j)]++)] = e.weight;
    }
    csr.degree.resize(nv);
    for (int v = 0; v < nv; ++v) {
        double d = 0.0;
        for (int idx = csr.offsets[static_cast<std::size_t>(v)];
             idx < csr.offsets[static_cast<std::size_t>(v) + 1]; ++idx)
            d += csr.weights[static_cast<std::size_t>(idx)];
        csr.degree(v) = d;
    }
    return csr;
}

/// y = B x with B = I + D^(-1/2) W D^(-1/2); eigenvalues of the normalized
/// Laplacian are 2 minus the eigenvalues of B, so the smallest of L are the
/// largest of B (well suited to Lanczos).
void apply_shifted(const Csr& csr, const Eigen::VectorXd& inv_sqrt_deg,
                   const Eigen::VectorXd& x, Eigen::VectorXd& y) {
    const int nv = static_cast<int>(x.size());
    y = x;
    for (int v = 0; v < nv; ++v) {
        double acc = 0.0;
        for (int idx = csr.offsets[static_cast<std::size_t>(v)];
             idx < csr.offsets[static_cast<std::size_t>(v) + 1]; ++idx) {
            const int u = csr.targets[static_cast<std::size_t>(idx)];
            acc += csr.weights[static_cast<std::size_t>(idx)] * inv_sqrt_deg(u) * x(u);
        }
        y(v) += inv_sqrt_deg(v) * acc;
    }
}

SpectralDecomposition dense_eigs(const Csr& csr, const Eigen::VectorXd& inv_sqrt_deg, int k) {
    const int nv = static_cast<int>(csr.degree.size());
    Eigen::MatrixXd lap = Eigen::MatrixXd::Identity(nv, nv);
    for (int v = 0; v < nv; ++v) {
        for (int idx = csr.offsets[static_cast<std::size_t>(v)];
             idx < csr.offsets[static_cast<std::size_t>(v) + 1]; ++idx) {
            const int u = csr.targets[static_cast<std::size_t>(idx)];
            lap(v, u) -= csr.weights[static_cast<std::size_t>(idx)] * inv_sqrt_deg(v) *
                         inv_sqrt_deg(u);
        }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(lap);
    if (solver.info() != Eigen::Success)
        throw std::runtime_error("laplacian_eigs: dense eigensolver failed");
    SpectralDecomposition out;
    out.eigenvalues = solver.eigenvalues().head(k);
    out.eigenvectors = solver.eigenvectors().leftCols(k);
    return out;
}

struct LanczosRun {
    SpectralDecomposition pairs;
    double worst_residual = 0.0;
};

LanczosRun lanczos_pass(const Csr& csr, const Eigen::VectorXd& inv_sqrt_deg, int k, int steps) {
    const int nv = static_cast<int>(csr.degree.size());

    Rng rng(kStartSeed);
    Eigen::VectorXd v(nv);
    for (int i = 0; i < nv; ++i) v(i) = rng.normal();
    v.normalize();

    Eigen::MatrixXd basis(nv, steps);
    std::vector<double> alpha;
    std::vector<double> beta;
    Eigen::VectorXd w(nv);

    basis.col(0) = v;
    int built = 0;
    double final_beta = 0.0;
    for (int j = 0; j < steps; ++j) {
        built = j + 1;
        apply_shifted(csr, inv_sqrt_deg, basis.col(j), w);
        const double a = basis.col(j).dot(w);
        alpha.push_back(a);
        w -= a * basis.col(j);
        if (j > 0) w -= beta[static_cast<std::size_t>(j - 1)] * basis.col(j - 1);
        // Full reorthogonalization keeps the basis usable at this scale.
        for (int r = 0; r <= j; ++r) w -= basis.col(r).dot(w) * basis.col(r);
        const double b = w.norm();
        final_beta = b;
        if (j + 1 == steps) break;
        if (b < 1e-12) {
            final_beta = 0.0;  // invariant subspace found
            break;
        }
        beta.push_back(b);
        basis.col(j + 1) = w / b;
    }

    Eigen::MatrixXd tri = Eigen::MatrixXd::Zero(built, built);
    for (int i = 0; i < built; ++i) {
        tri(i, i) = alpha[static_cast<std::size_t>(i)];
        if (i + 1 < built) {
            tri(i, i + 1) = beta[static_cast<std::size_t>(i)];
            tri(i + 1, i) = beta[static_cast<std::size_t>(i)];
        }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(tri);
    if (solver.info() != Eigen::Success || built < k)
        throw std::runtime_error("laplacian_eigs: Lanczos extraction failed");

    // Largest Ritz values of B correspond to the smallest Laplacian values.
    // The Ritz residual for pair (theta, y) is |beta_m * s_m| with s_m the
    // last component of the tridiagonal eigenvector.
    LanczosRun run;
    run.pairs.eigenvalues.resize(k);
    run.pairs.eigenvectors.resize(nv, k);
    for (int idx = 0; idx < k; ++idx) {
        const int src = built - 1 - idx;
        run.pairs.eigenvalues(idx) = 2.0 - solver.eigenvalues()(src);
        run.pairs.eigenvectors.col(idx) =
            basis.leftCols(built) * solver.eigenvectors().col(src);
        run.pairs.eigenvectors.col(idx).normalize();
        run.worst_residual = std::max(
            run.worst_residual, std::abs(final_beta * solver.eigenvectors()(built - 1, src)));
    }
    return run;
}

SpectralDecomposition lanczos_eigs(const Csr& csr, const Eigen::VectorXd& inv_sqrt_deg, int k) {
    const int nv = static_cast<int>(csr.degree.size());
    int steps = std::min(nv - 1, std::max(12 * k, 256));
    LanczosRun run = lanczos_pass(csr, inv_sqrt_deg, k, steps);
    // Restart with a deeper Krylov space while the wanted pairs are unsettled.
    while (run.worst_residual > 1e-8 && steps < std::min(nv - 1, 1024)) {
        steps = std::min(nv - 1, steps * 2);
        run = lanczos_pass(csr, inv_sqrt_deg, k, steps);
    }
    return run.pairs;
}

std::vector<std::vector<int>> connected_components(const NeighborGraph& g) {
    const int nv = g.num_vertices;
    std::vector<int> parent(static_cast<std::size_t>(nv));
    std::iota(parent.begin(), parent.end(), 0);
    std::function<int(int)> find = [&](int x) {
        while (parent[static_cast<std::size_t>(x)] != x) {
            parent[static_cast<std::size_t>(x)] =
                parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
            x = parent[static_cast<std::size_t>(x)];
        }
        return x;
    };
    for (const GraphEdge& e : g.edges) {
        const int a = find(e.i);
        const int b = find(e.j);
        if (a != b) parent[static_cast<std::size_t>(std::max(a, b))] = std::min(a, b);
    }
    std::vector<std::vector<int>> components;
    std::vector<int> root_slot(static_cast<std::size_t>(nv), -1);
    for (int v = 0; v < nv; ++v) {
        const int r = find(v);
        if (root_slot[static_cast<std::size_t>(r)] < 0) {
            root_slot[static_cast<std::size_t>(r)] = static_cast<int>(components.size());
            components.emplace_back();
        }
        components[static_cast<std::size_t>(root_slot[static_cast<std::size_t>(r)])].push_back(v);
    }
    return components;
}

}  // namespace

SpectralDecomposition laplacian_eigs(const NeighborGraph& g, int k) {
    if (!g.symmetric) throw std::domain_error("laplacian_eigs: graph must be symmetric");
    if (k < 1 || k > g.num_vertices)
        throw std::domain_error("laplacian_eigs: k out of range");

    const Csr csr = build_csr(g);
    Eigen::VectorXd inv_sqrt_deg(g.num_vertices);
    for (int v = 0; v < g.num_vertices; ++v) {
        if (csr.degree(v) <= 0.0)
            throw std::domain_error("laplacian_eigs: vertex with zero degree");
        inv_sqrt_deg(v) = 1.0 / std::sqrt(csr.degree(v));
    }

    if (g.num_vertices <= kDenseLimit) return dense_eigs(csr, inv_sqrt_deg, k);
    return lanczos_eigs(csr, inv_sqrt_deg, k);
}

Embedding spectral_layout(const NeighborGraph& g, int dim) {
    if (!g.symmetric) throw std::domain_error("spectral_layout: graph must be symmetric");
    if (dim < 1) throw std::domain_error("spectral_layout: dim must be >= 1");
    if (g.num_vertices < 1) throw std::domain_error("spectral_layout: empty graph");

    Embedding emb;
    emb.coords = Eigen::MatrixXd::Zero(g.num_vertices, dim);
    emb.index_map.resize(static_cast<std::size_t>(g.num_vertices));
    std::iota(emb.index_map.begin(), emb.index_map.end(), 0);

    const auto layout_component = [&](const std::vector<int>& members) {
        const int size = static_cast<int>(members.size());
        Eigen::MatrixXd local = Eigen::MatrixXd::Zero(size, dim);
        if (size > dim + 1) {
            // Restrict the graph to this component.
            std::vector<int> local_id(static_cast<std::size_t>(g.num_vertices), -1);
            for (int s = 0; s < size; ++s)
                local_id[static_cast<std::size_t>(members[static_cast<std::size_t>(s)])] = s;
            NeighborGraph sub;
            sub.num_vertices = size;
            sub.symmetric = true;
            for (const GraphEdge& e : g.edges) {
                const int li = local_id[static_cast<std::size_t>(e.i)];
                const int lj = local_id[static_cast<std::size_t>(e.j)];
                if (li >= 0 && lj >= 0) sub.edges.push_back({li, lj, e.weight});
            }
            const SpectralDecomposition eig = laplacian_eigs(sub, dim + 1);
            local = eig.eigenvectors.rightCols(dim);  // skip the trivial eigenvector
        } else if (size > 1) {
            // Too small for a spectral solve: deterministic line placement.
            for (int s = 0; s < size; ++s) local(s, 0) = static_cast<double>(s);
        }
        // Per-coordinate rescale into [-10, 10].
        for (int d = 0; d < dim; ++d) {
            const double max_abs = local.col(d).cwiseAbs().maxCoeff();
            if (max_abs > 0.0) local.col(d) *= 10.0 / max_abs;
        }
        return local;
    };

    const auto components = connected_components(g);
    if (components.size() == 1) {
        const Eigen::MatrixXd local = layout_component(components.front());
        for (int s = 0; s < static_cast<int>(components.front().size()); ++s)
            emb.coords.row(components.front()[static_cast<std::size_t>(s)]) = local.row(s);
        return emb;
    }

    // Disconnected graph: lay components out side by side along the first axis.
    double x_offset = 0.0;
    for (const std::vector<int>& members : components) {
        Eigen::MatrixXd local = layout_component(members);
        const double x_min = local.col(0).minCoeff();
        const double x_max = local.col(0).maxCoeff();
        const double shift = x_offset - x_min;
        for (int s = 0; s < static_cast<int>(members.size()); ++s) {
            emb.coords.row(members[static_cast<std::size_t>(s)]) = local.row(s);
            emb.coords(members[static_cast<std::size_t>(s)], 0) += shift;
        }
        x_offset += (x_max - x_min) + 2.0;
    }
    return emb;
}

}  // namespace holescope
