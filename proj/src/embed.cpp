#include "holescope/embed.hpp"

#include "holescope/rng.hpp"
#include "holescope/spectral.hpp"
#include "holescope/threading.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <unordered_set>

namespace holescope {
namespace {

constexpr double kClampLo = 1e-12;
constexpr double kClampHi = 1.0 - 1e-12;
constexpr double kGradClip = 4.0;
constexpr double kRepulseEps = 1e-3;

// Final coordinates land on a fixed dyadic grid (2^-30, ~1e-9 absolute). The
// granularity sits far below the stochastic layout noise and makes the
// init-plus-displacement combine commute exactly with dyadic translations of
// the init.
constexpr double kCoordinateGrid = 1073741824.0;

Eigen::MatrixXd snap_coords(const Eigen::MatrixXd& coords) {
    return ((coords * kCoordinateGrid).array().round() / kCoordinateGrid).matrix();
}

double target_curve(double x, double d_min) {
    return x <= d_min ? 1.0 : std::exp(-(x - d_min));
}

double output_similarity(double sq_dist, const LayoutParams& p) {
    return 1.0 / (1.0 + p.a * std::pow(sq_dist, p.b));
}

double clip4(double v) { return std::clamp(v, -kGradClip, kGradClip); }

/// Deterministic non-edge pair sample shared by the cross-entropy value and
/// gradient: vertex pairs drawn uniformly, skipping self-pairs and actual
/// edges. The set depends only on the graph and the seed, never on the
/// coordinates, so perturbed evaluations stay comparable.
std::vector<std::pair<int, int>> sample_repulsive_pairs(const NeighborGraph& g,
                                                        std::uint64_t pair_seed) {
    std::unordered_set<std::uint64_t> edge_keys;
    edge_keys.reserve(g.edges.size() * 2);
    const auto key = [](int i, int j) {
        return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(i)) << 32) |
               static_cast<std::uint32_t>(j);
    };
    for (const GraphEdge& e : g.edges) {
        edge_keys.insert(key(e.i, e.j));
        edge_keys.insert(key(e.j, e.i));
    }

    const std::size_t count = std::max<std::size_t>(g.edges.size() * 5, 32);
    Rng rng(pair_seed);
    std::vector<std::pair<int, int>> pairs;
    pairs.reserve(count);
    if (g.num_vertices < 2) return pairs;
    for (std::size_t s = 0; s < count; ++s) {
        const int i = static_cast<int>(rng.uniform_index(static_cast<std::size_t>(g.num_vertices)));
        const int j = static_cast<int>(rng.uniform_index(static_cast<std::size_t>(g.num_vertices)));
        if (i == j || edge_keys.count(key(i, j))) continue;
        pairs.emplace_back(i, j);
    }
    return pairs;
}

/// d(cross-entropy term)/d(squared distance) for one pair with input weight w.
double pair_grad_wrt_sq(double w, double sq_dist, const LayoutParams& p) {
    const double raw = output_similarity(sq_dist, p);
    if (raw <= kClampLo || raw >= kClampHi) return 0.0;  // clamped: locally flat
    if (sq_dist <= 0.0) return 0.0;
    const double dw_dsq = -p.a * p.b * std::pow(sq_dist, p.b - 1.0) * raw * raw;
    return dw_dsq * (-w / raw + (1.0 - w) / (1.0 - raw));
}

double pair_value(double w, double sq_dist, const LayoutParams& p) {
    const double similarity = std::clamp(output_similarity(sq_dist, p), kClampLo, kClampHi);
    double value = 0.0;
    if (w > 0.0) value -= w * std::log(similarity);
    if (w < 1.0) value -= (1.0 - w) * std::log(1.0 - similarity);
    return value;
}

struct DirectedEdge {
    int head = 0;
    int tail = 0;
    double epochs_per_sample = 0.0;
    double next_due = 0.0;
};

std::vector<DirectedEdge> schedule_edges(const NeighborGraph& g) {
    double w_max = 0.0;
    for (const GraphEdge& e : g.edges) w_max = std::max(w_max, e.weight);
    std::vector<DirectedEdge> out;
    out.reserve(g.edges.size() * 2);
    for (const GraphEdge& e : g.edges) {
        if (e.weight <= 0.0) continue;
        const double eps = w_max / e.weight;
        out.push_back({e.i, e.j, eps, eps});
        out.push_back({e.j, e.i, eps, eps});
    }
    return out;
}

/// One pass over a range of scheduled edges at a fixed epoch.
///
/// Coordinates are carried as init plus an accumulated displacement and every
/// force reads the pair difference as (base_i - base_j) + (off_i - off_j).
/// Displacing the whole init therefore cannot perturb the arithmetic, which
/// keeps displaced runs in exact lockstep.
void run_edge_range(std::vector<DirectedEdge>& edges, std::size_t begin, std::size_t end,
                    const Eigen::MatrixXd& base, Eigen::MatrixXd& offset, double epoch,
                    double alpha, const LayoutParams& p, int neg_samples, Rng& rng) {
    const int nv = static_cast<int>(base.rows());
    const int dim = static_cast<int>(base.cols());
    const auto delta_at = [&](int i, int j, int d) {
        return (base(i, d) - base(j, d)) + (offset(i, d) - offset(j, d));
    };
    for (std::size_t idx = begin; idx < end; ++idx) {
        DirectedEdge& e = edges[idx];
        if (e.next_due > epoch) continue;
        e.next_due += e.epochs_per_sample;

        // Attractive move along the output-similarity gradient, both endpoints.
        double sq = 0.0;
        for (int d = 0; d < dim; ++d) {
            const double delta = delta_at(e.head, e.tail, d);
            sq += delta * delta;
        }
        if (sq > 0.0) {
            const double coeff =
                -2.0 * p.a * p.b * std::pow(sq, p.b - 1.0) / (1.0 + p.a * std::pow(sq, p.b));
            for (int d = 0; d < dim; ++d) {
                const double step = clip4(coeff * delta_at(e.head, e.tail, d));
                offset(e.head, d) += alpha * step;
                offset(e.tail, d) -= alpha * step;
            }
        }

        // Repulsive moves against uniform random vertices, head only. The
        // edge's own endpoints are skipped: the tail is a known positive pair.
        for (int s = 0; s < neg_samples; ++s) {
            const int other = static_cast<int>(rng.uniform_index(static_cast<std::size_t>(nv)));
            if (other == e.head || other == e.tail) continue;
            double sq_neg = 0.0;
            for (int d = 0; d < dim; ++d) {
                const double delta = delta_at(e.head, other, d);
                sq_neg += delta * delta;
            }
            const double coeff =
                2.0 * p.b / ((kRepulseEps + sq_neg) * (1.0 + p.a * std::pow(sq_neg, p.b)));
            for (int d = 0; d < dim; ++d) {
                const double step = clip4(coeff * delta_at(e.head, other, d));
                offset(e.head, d) += alpha * step;
            }
        }
    }
}

}  // namespace

LayoutParams fit_ab(double d_min) {
    if (d_min < 0.0) throw std::domain_error("fit_ab: d_min must be >= 0");

    constexpr int kSamples = 300;
    std::vector<double> xs(kSamples);
    std::vector<double> ys(kSamples);
    for (int i = 0; i < kSamples; ++i) {
        xs[static_cast<std::size_t>(i)] = 3.0 * static_cast<double>(i) / (kSamples - 1);
        ys[static_cast<std::size_t>(i)] = target_curve(xs[static_cast<std::size_t>(i)], d_min);
    }

    double a = 1.0;
    double b = 1.0;
    double damping = 1e-3;

    const auto residual_norm = [&](double pa, double pb) {
        double acc = 0.0;
        for (int i = 0; i < kSamples; ++i) {
            const double x = xs[static_cast<std::size_t>(i)];
            const double psi = 1.0 / (1.0 + pa * std::pow(x, 2.0 * pb));
            const double r = psi - ys[static_cast<std::size_t>(i)];
            acc += r * r;
        }
        return acc;
    };

    double best = residual_norm(a, b);
    for (int iter = 0; iter < 200; ++iter) {
        // Gauss-Newton normal equations with Levenberg damping.
        double jtj00 = 0.0, jtj01 = 0.0, jtj11 = 0.0, jtr0 = 0.0, jtr1 = 0.0;
        for (int i = 0; i < kSamples; ++i) {
            const double x = xs[static_cast<std::size_t>(i)];
            if (x <= 0.0) continue;  // residual and jacobian vanish at x = 0
            const double xp = std::pow(x, 2.0 * b);
            const double denom = 1.0 + a * xp;
            const double psi = 1.0 / denom;
            const double r = psi - ys[static_cast<std::size_t>(i)];
            const double da = -xp / (denom * denom);
            const double db = -2.0 * a * xp * std::log(x) / (denom * denom);
            jtj00 += da * da;
            jtj01 += da * db;
            jtj11 += db * db;
            jtr0 += da * r;
            jtr1 += db * r;
        }

        bool stepped = false;
        for (int attempt = 0; attempt < 16; ++attempt) {
            const double m00 = jtj00 * (1.0 + damping);
            const double m11 = jtj11 * (1.0 + damping);
            const double det = m00 * m11 - jtj01 * jtj01;
            if (det == 0.0) break;
            const double delta_a = (-jtr0 * m11 + jtr1 * jtj01) / det;
            const double delta_b = (-jtr1 * m00 + jtr0 * jtj01) / det;
            const double cand_a = std::max(a + delta_a, 1e-8);
            const double cand_b = std::max(b + delta_b, 1e-8);
            const double cand = residual_norm(cand_a, cand_b);
            if (cand < best) {
                const bool converged =
                    std::abs(cand_a - a) < 1e-8 && std::abs(cand_b - b) < 1e-8;
                a = cand_a;
                b = cand_b;
                best = cand;
                damping = std::max(damping / 3.0, 1e-12);
                stepped = true;
                if (converged) return {a, b};
                break;
            }
            damping *= 3.0;
        }
        if (!stepped) break;
    }

    if (best > 5.0)
        throw std::runtime_error("fit_ab: no convergence, residual " + std::to_string(best));
    return {a, b};
}

Embedding pca(const FeatureMatrix& features, int dim) {
    const Eigen::Index m = features.values.rows();
    const Eigen::Index d = features.values.cols();
    if (dim < 1) throw std::domain_error("pca: dim must be >= 1");
    if (m <= dim) throw std::domain_error("pca: need more rows than output dimensions");

    const Eigen::MatrixXd centered =
        features.values.rowwise() - features.values.colwise().mean();

    // Eigen-decompose the smaller Gram side.
    Eigen::MatrixXd directions(d, dim);  // columns: principal directions
    Eigen::VectorXd top_values(dim);
    if (d <= m) {
        const Eigen::MatrixXd gram = centered.transpose() * centered;
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(gram);
        if (solver.info() != Eigen::Success) throw std::runtime_error("pca: eigensolver failed");
        const double scale = solver.eigenvalues().cwiseAbs().maxCoeff();
        for (int c = 0; c < dim; ++c) {
            const Eigen::Index src = d - 1 - c;
            top_values(c) = solver.eigenvalues()(src);
            if (top_values(c) <= scale * 1e-12)
                throw std::domain_error("pca: data rank below the requested dimension");
            directions.col(c) = solver.eigenvectors().col(src);
        }
    } else {
        const Eigen::MatrixXd gram = centered * centered.transpose();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(gram);
        if (solver.info() != Eigen::Success) throw std::runtime_error("pca: eigensolver failed");
        const double scale = solver.eigenvalues().cwiseAbs().maxCoeff();
        for (int c = 0; c < dim; ++c) {
            const Eigen::Index src = m - 1 - c;
            top_values(c) = solver.eigenvalues()(src);
            if (top_values(c) <= scale * 1e-12)
                throw std::domain_error("pca: data rank below the requested dimension");
            directions.col(c) =
                centered.transpose() * solver.eigenvectors().col(src) / std::sqrt(top_values(c));
            directions.col(c).normalize();
        }
    }

    // Sign convention: the largest-magnitude loading of each direction is
    // positive (first such entry wins ties).
    for (int c = 0; c < dim; ++c) {
        Eigen::Index arg = 0;
        directions.col(c).cwiseAbs().maxCoeff(&arg);
        if (directions(arg, c) < 0.0) directions.col(c) = -directions.col(c);
    }

    Embedding emb;
    emb.coords = centered * directions;
    emb.index_map = features.index_map;
    return emb;
}

double cross_entropy(const NeighborGraph& g, const Embedding& emb, const LayoutParams& p,
                     std::uint64_t pair_seed) {
    const auto sq_dist = [&](int i, int j) {
        return (emb.coords.row(i) - emb.coords.row(j)).squaredNorm();
    };
    double total = 0.0;
    for (const GraphEdge& e : g.edges) total += pair_value(e.weight, sq_dist(e.i, e.j), p);
    for (const auto& [i, j] : sample_repulsive_pairs(g, pair_seed))
        total += pair_value(0.0, sq_dist(i, j), p);
    return total;
}

Eigen::MatrixXd cross_entropy_grad(const NeighborGraph& g, const Embedding& emb,
                                   const LayoutParams& p, std::uint64_t pair_seed) {
    Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(emb.coords.rows(), emb.coords.cols());
    const auto accumulate = [&](int i, int j, double w) {
        const Eigen::RowVectorXd delta = emb.coords.row(i) - emb.coords.row(j);
        const double dsq = pair_grad_wrt_sq(w, delta.squaredNorm(), p);
        grad.row(i) += 2.0 * dsq * delta;
        grad.row(j) -= 2.0 * dsq * delta;
    };
    for (const GraphEdge& e : g.edges) accumulate(e.i, e.j, e.weight);
    for (const auto& [i, j] : sample_repulsive_pairs(g, pair_seed)) accumulate(i, j, 0.0);
    return grad;
}

Embedding optimize_layout(const NeighborGraph& g, const Embedding& init, const UmapConfig& cfg) {
    if (!g.symmetric) throw std::domain_error("optimize_layout: graph must be symmetric");
    if (init.coords.rows() != g.num_vertices)
        throw std::domain_error("optimize_layout: init size disagrees with the graph");
    if (cfg.epochs < 1) throw std::domain_error("optimize_layout: epochs must be >= 1");

    const LayoutParams p = fit_ab(cfg.d_min);
    Embedding emb = init;
    std::vector<DirectedEdge> edges = schedule_edges(g);
    if (edges.empty()) return emb;

    const Eigen::MatrixXd& base = init.coords;
    Eigen::MatrixXd offset = Eigen::MatrixXd::Zero(base.rows(), base.cols());

    const int workers = std::max(1, cfg.threads);
    if (workers == 1) {
        Rng rng(cfg.seed);
        for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
            const double alpha =
                cfg.learning_rate * (1.0 - static_cast<double>(epoch - 1) / cfg.epochs);
            run_edge_range(edges, 0, edges.size(), base, offset, static_cast<double>(epoch),
                           alpha, p, cfg.neg_samples, rng);
        }
        emb.coords = snap_coords(base + offset);
        return emb;
    }

    // Parallel mode: edge ranges race on shared coordinates; convergence in
    // distribution, not bitwise reproducibility.
    std::vector<Rng> rngs;
    for (int w = 0; w < workers; ++w)
        rngs.emplace_back(cfg.seed ^ (0xA24BAED4963EE407ULL * (static_cast<std::uint64_t>(w) + 1)));
    const std::size_t chunk = (edges.size() + workers - 1) / static_cast<std::size_t>(workers);
    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        const double alpha =
            cfg.learning_rate * (1.0 - static_cast<double>(epoch - 1) / cfg.epochs);
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) {
            const std::size_t begin = static_cast<std::size_t>(w) * chunk;
            const std::size_t end = std::min(edges.size(), begin + chunk);
            if (begin >= end) break;
            pool.emplace_back([&, begin, end, w, epoch, alpha] {
                run_edge_range(edges, begin, end, base, offset, static_cast<double>(epoch),
                               alpha, p, cfg.neg_samples, rngs[static_cast<std::size_t>(w)]);
            });
        }
        for (auto& t : pool) t.join();
    }
    emb.coords = snap_coords(base + offset);
    return emb;
}

Embedding umap_embed(const FeatureMatrix& features, const UmapConfig& cfg) {
    const KnnResult knn = knn_exact(features, cfg.n, cfg.threads);
    const FuzzyNeighborhood scales = local_scales(knn, cfg.n);
    const NeighborGraph graph = symmetrize(fuzzy_weights(knn, scales));

    Embedding init;
    if (cfg.random_init) {
        Rng rng(cfg.seed ^ 0x1217ULL);
        init.coords.resize(features.values.rows(), cfg.dim);
        for (Eigen::Index i = 0; i < init.coords.rows(); ++i)
            for (int d = 0; d < cfg.dim; ++d) init.coords(i, d) = rng.uniform(-10.0, 10.0);
        init.index_map.resize(static_cast<std::size_t>(features.values.rows()));
        std::iota(init.index_map.begin(), init.index_map.end(), 0);
    } else {
        init = spectral_layout(graph, cfg.dim);
    }

    Embedding emb = optimize_layout(graph, init, cfg);
    emb.index_map = features.index_map;
    return emb;
}

void write_embedding_csv(const Embedding& emb, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("write_embedding_csv: cannot open " + path.string());
    out << "sample_id";
    const char axis_names[] = {'x', 'y', 'z'};
    for (int d = 0; d < emb.dim(); ++d) {
        if (d < 3) {
            out << ',' << axis_names[d];
        } else {
            out << ",c" << d;
        }
    }
    out << '\n';
    char buffer[64];
    for (int i = 0; i < emb.num_rows(); ++i) {
        out << emb.index_map[static_cast<std::size_t>(i)];
        for (int d = 0; d < emb.dim(); ++d) {
            std::snprintf(buffer, sizeof(buffer), ",%.17g", emb.coords(i, d));
            out << buffer;
        }
        out << '\n';
    }
}

Embedding read_embedding_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("read_embedding_csv: cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line))
        throw std::runtime_error("read_embedding_csv: empty file " + path.string());
    const int dim = static_cast<int>(std::count(line.begin(), line.end(), ','));

    std::vector<int> ids;
    std::vector<double> flat;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string cell;
        if (!std::getline(row, cell, ',')) continue;
        ids.push_back(std::stoi(cell));
        for (int d = 0; d < dim; ++d) {
            if (!std::getline(row, cell, ','))
                throw std::runtime_error("read_embedding_csv: short row in " + path.string());
            flat.push_back(std::stod(cell));
        }
    }

    Embedding emb;
    emb.index_map = std::move(ids);
    emb.coords.resize(static_cast<Eigen::Index>(emb.index_map.size()), dim);
    for (std::size_t i = 0; i < emb.index_map.size(); ++i)
        for (int d = 0; d < dim; ++d)
            emb.coords(static_cast<Eigen::Index>(i), d) =
                flat[i * static_cast<std::size_t>(dim) + static_cast<std::size_t>(d)];
    return emb;
}

}  // namespace holescope
