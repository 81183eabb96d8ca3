#include "holescope/neighbors.hpp"

#include "holescope/threading.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>
#include <utility>

namespace holescope {

KnnResult knn_exact(const Eigen::MatrixXd& points, int n, int threads) {
    const Eigen::Index m = points.rows();
    if (n < 1) throw std::domain_error("knn_exact: n must be >= 1");
    if (n >= m) throw std::domain_error("knn_exact: n must be smaller than the row count");

    KnnResult result;
    result.neighbor_ids.resize(m, n);
    result.distances.resize(m, n);

    const Eigen::VectorXd sq_norms = points.rowwise().squaredNorm();

    // Query rows are processed in blocks so the all-pairs inner products run
    // as one GEMM per block instead of a memory-bound GEMV per row.
    constexpr Eigen::Index kBlock = 64;
    const std::size_t num_blocks = static_cast<std::size_t>((m + kBlock - 1) / kBlock);

    parallel_for(num_blocks, threads, [&](std::size_t begin, std::size_t end) {
        std::vector<std::pair<double, int>> order(static_cast<std::size_t>(m - 1));
        Eigen::MatrixXd dots;
        for (std::size_t block = begin; block < end; ++block) {
            const Eigen::Index b0 = static_cast<Eigen::Index>(block) * kBlock;
            const Eigen::Index nb = std::min<Eigen::Index>(kBlock, m - b0);
            dots.noalias() = points * points.middleRows(b0, nb).transpose();
            for (Eigen::Index r = 0; r < nb; ++r) {
                const Eigen::Index i = b0 + r;
                std::size_t slot = 0;
                for (Eigen::Index j = 0; j < m; ++j) {
                    if (j == i) continue;
                    const double sq =
                        std::max(0.0, sq_norms(i) + sq_norms(j) - 2.0 * dots(j, r));
                    order[slot++] = {sq, static_cast<int>(j)};
                }
                std::partial_sort(order.begin(), order.begin() + n, order.end());
                for (int k = 0; k < n; ++k) {
                    result.neighbor_ids(i, k) = order[static_cast<std::size_t>(k)].second;
                    result.distances(i, k) = std::sqrt(order[static_cast<std::size_t>(k)].first);
                }
            }
        }
    });

    return result;
}

KnnResult knn_exact(const FeatureMatrix& features, int n, int threads) {
    return knn_exact(features.values, n, threads);
}

FuzzyNeighborhood local_scales(const KnnResult& knn, int n) {
    const Eigen::Index m = knn.distances.rows();
    if (knn.distances.cols() != n)
        throw std::domain_error("local_scales: n disagrees with the kNN table width");

    FuzzyNeighborhood fn;
    fn.rho.resize(m);
    fn.sigma.resize(m);
    const double target = std::log2(static_cast<double>(n));

    for (Eigen::Index i = 0; i < m; ++i) {
        double rho = -1.0;
        for (int k = 0; k < n; ++k) {
            const double d = knn.distances(i, k);
            if (d > 0.0) {
                rho = d;  // distances ascend, first positive is the minimum
                break;
            }
        }
        if (rho < 0.0)
            throw std::domain_error("local_scales: sample " + std::to_string(i) +
                                    " has only zero-distance neighbors");
        fn.rho(i) = rho;

        double max_surplus = 0.0;
        for (int k = 0; k < n; ++k)
            max_surplus = std::max(max_surplus, knn.distances(i, k) - rho);
        if (max_surplus <= 0.0) {
            fn.sigma(i) = 1.0;  // constraint unsatisfiable, every weight is 1
            continue;
        }

        const auto weight_mass = [&](double sigma) {
            double sum = 0.0;
            for (int k = 0; k < n; ++k) {
                const double surplus = std::max(0.0, knn.distances(i, k) - rho);
                sum += std::exp(-surplus / sigma);
            }
            return sum;
        };

        double lo = 1e-6;
        double hi = 1e3;
        for (int iter = 0; iter < 64; ++iter) {
            const double mid = 0.5 * (lo + hi);
            if (weight_mass(mid) < target) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        fn.sigma(i) = 0.5 * (lo + hi);
    }
    return fn;
}

NeighborGraph fuzzy_weights(const KnnResult& knn, const FuzzyNeighborhood& fn) {
    const Eigen::Index m = knn.distances.rows();
    const Eigen::Index n = knn.distances.cols();

    NeighborGraph g;
    g.num_vertices = static_cast<int>(m);
    g.symmetric = false;
    g.edges.reserve(static_cast<std::size_t>(m * n));
    for (Eigen::Index i = 0; i < m; ++i) {
        for (Eigen::Index k = 0; k < n; ++k) {
            const double surplus = std::max(0.0, knn.distances(i, k) - fn.rho(i));
            g.edges.push_back({static_cast<int>(i), knn.neighbor_ids(i, k),
                               std::exp(-surplus / fn.sigma(i))});
        }
    }
    return g;
}

NeighborGraph symmetrize(const NeighborGraph& g) {
    struct Half {
        int i;
        int j;
        bool forward;
        double weight;
    };
    std::vector<Half> halves;
    halves.reserve(g.edges.size());
    for (const GraphEdge& e : g.edges) {
        if (e.i == e.j || e.weight <= 0.0) continue;
        if (e.i < e.j) {
            halves.push_back({e.i, e.j, true, e.weight});
        } else {
            halves.push_back({e.j, e.i, false, e.weight});
        }
    }
    std::sort(halves.begin(), halves.end(), [](const Half& a, const Half& b) {
        if (a.i != b.i) return a.i < b.i;
        return a.j < b.j;
    });

    NeighborGraph out;
    out.num_vertices = g.num_vertices;
    out.symmetric = true;
    std::size_t pos = 0;
    while (pos < halves.size()) {
        std::size_t stop = pos;
        double w_fwd = 0.0;
        double w_bwd = 0.0;
        while (stop < halves.size() && halves[stop].i == halves[pos].i &&
               halves[stop].j == halves[pos].j) {
            // Keep the max if the same direction appears twice.
            if (halves[stop].forward) {
                w_fwd = std::max(w_fwd, halves[stop].weight);
            } else {
                w_bwd = std::max(w_bwd, halves[stop].weight);
            }
            ++stop;
        }
        const double combined = w_fwd + w_bwd - w_fwd * w_bwd;
        if (combined > 0.0) out.edges.push_back({halves[pos].i, halves[pos].j, combined});
        pos = stop;
    }
    return out;
}

void write_graph_csv(const NeighborGraph& g, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("write_graph_csv: cannot open " + path.string());
    out << "i,j,weight\n";
    char buffer[64];
    for (const GraphEdge& e : g.edges) {
        std::snprintf(buffer, sizeof(buffer), "%d,%d,%.17g\n", e.i, e.j, e.weight);
        out << buffer;
    }
}

}  // namespace holescope
