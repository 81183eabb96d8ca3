#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "holescope/embed.hpp"
#include "holescope/rng.hpp"
#include "holescope/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <vector>

using namespace holescope;

namespace {

double curve_psi(double x, double a, double b) {
    return 1.0 / (1.0 + a * std::pow(x, 2.0 * b));
}

double curve_target(double x, double d_min) {
    return x <= d_min ? 1.0 : std::exp(-(x - d_min));
}

double curve_sse(double a, double b, double d_min) {
    double acc = 0.0;
    for (int i = 0; i < 300; ++i) {
        const double x = 3.0 * i / 299.0;
        const double r = curve_psi(x, a, b) - curve_target(x, d_min);
        acc += r * r;
    }
    return acc;
}

/// Independent reference for the curve fit: coarse grid over (a, b) followed
/// by two local refinement rounds. No shared code with fit_ab.
LayoutParams grid_search_ab(double d_min) {
    double best_a = 1.0, best_b = 1.0, best = 1e300;
    for (double a = 0.1; a <= 5.0; a += 0.05) {
        for (double b = 0.3; b <= 2.0; b += 0.02) {
            const double sse = curve_sse(a, b, d_min);
            if (sse < best) {
                best = sse;
                best_a = a;
                best_b = b;
            }
        }
    }
    double span_a = 0.05, span_b = 0.02;
    for (int round = 0; round < 2; ++round) {
        const double lo_a = best_a - span_a, hi_a = best_a + span_a;
        const double lo_b = best_b - span_b, hi_b = best_b + span_b;
        for (double a = lo_a; a <= hi_a; a += span_a / 20.0) {
            for (double b = lo_b; b <= hi_b; b += span_b / 20.0) {
                const double sse = curve_sse(a, b, d_min);
                if (sse < best) {
                    best = sse;
                    best_a = a;
                    best_b = b;
                }
            }
        }
        span_a /= 20.0;
        span_b /= 20.0;
    }
    return {best_a, best_b};
}

NeighborGraph path_graph(int n) {
    NeighborGraph g;
    g.num_vertices = n;
    g.symmetric = true;
    for (int i = 0; i + 1 < n; ++i) g.edges.push_back({i, i + 1, 1.0});
    return g;
}

NeighborGraph complete_graph(int n) {
    NeighborGraph g;
    g.num_vertices = n;
    g.symmetric = true;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) g.edges.push_back({i, j, 1.0});
    return g;
}

Embedding random_embedding(Rng& rng, int rows, int dim) {
    Embedding emb;
    emb.coords.resize(rows, dim);
    for (int i = 0; i < rows; ++i)
        for (int d = 0; d < dim; ++d) emb.coords(i, d) = rng.uniform(-2.0, 2.0);
    emb.index_map.resize(static_cast<std::size_t>(rows));
    std::iota(emb.index_map.begin(), emb.index_map.end(), 0);
    return emb;
}

NeighborGraph random_graph(Rng& rng, int nv) {
    NeighborGraph g;
    g.num_vertices = nv;
    g.symmetric = true;
    for (int i = 0; i < nv; ++i) {
        for (int j = i + 1; j < nv; ++j) {
            if (rng.uniform() < 0.7) g.edges.push_back({i, j, rng.uniform(0.05, 1.0)});
        }
    }
    if (g.edges.empty()) g.edges.push_back({0, 1, 0.5});
    return g;
}

}  // namespace

TEST_CASE("similarity curve passes through 1 at the origin") {
    for (double d_min : {0.0, 0.1, 0.15, 0.5}) {
        const LayoutParams p = fit_ab(d_min);
        CHECK(curve_psi(0.0, p.a, p.b) == 1.0);
        CHECK(p.a > 0.0);
        CHECK(p.b > 0.0);
    }
}

TEST_CASE("curve fit agrees with the grid-search reference") {
    struct Case {
        double d_min;
        double expect_a;
        double expect_b;
    };
    // Frozen from the grid-search reference below; spot values match the
    // usual (a, b) pairs for these packing settings.
    const Case cases[] = {{0.0, 1.93, 0.79}, {0.1, 1.58, 0.90}, {0.15, 1.44, 0.94}};
    for (const Case& c : cases) {
        const LayoutParams fitted = fit_ab(c.d_min);
        const LayoutParams reference = grid_search_ab(c.d_min);
        CHECK(std::abs(fitted.a - reference.a) <= 0.02);
        CHECK(std::abs(fitted.b - reference.b) <= 0.02);
        CHECK(fitted.a == doctest::Approx(c.expect_a).epsilon(0.02));
        CHECK(fitted.b == doctest::Approx(c.expect_b).epsilon(0.02));
    }
}

TEST_CASE("fitted curve hugs its target everywhere on the fit interval") {
    // The least-squares optimum itself deviates by 0.084 at d_min = 0.5 (the
    // grid-search reference lands on the same curve), so that point gets the
    // measured bound while the tighter packing settings keep 0.08.
    const auto max_deviation = [](double d_min) {
        const LayoutParams p = fit_ab(d_min);
        double worst = 0.0;
        for (int i = 0; i <= 3000; ++i) {
            const double x = 3.0 * i / 3000.0;
            worst = std::max(worst, std::abs(curve_psi(x, p.a, p.b) - curve_target(x, d_min)));
        }
        return worst;
    };
    for (double d_min : {0.0, 0.1, 0.15, 0.2}) CHECK(max_deviation(d_min) <= 0.08);
    CHECK(max_deviation(0.5) <= 0.085);
}

TEST_CASE("path graph has the known laplacian spectrum") {
    const SpectralDecomposition eig = laplacian_eigs(path_graph(3), 3);
    CHECK(eig.eigenvalues(0) == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(eig.eigenvalues(1) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(eig.eigenvalues(2) == doctest::Approx(2.0).epsilon(1e-9));
}

TEST_CASE("complete graph spectrum is flat above zero and centered") {
    const SpectralDecomposition eig = laplacian_eigs(complete_graph(4), 4);
    CHECK(eig.eigenvalues(0) == doctest::Approx(0.0).epsilon(1e-9));
    for (int i = 1; i < 4; ++i)
        CHECK(eig.eigenvalues(i) == doctest::Approx(4.0 / 3.0).epsilon(1e-9));

    const Embedding emb = spectral_layout(complete_graph(4), 2);
    CHECK(std::abs(emb.coords.col(0).mean()) < 1e-9);
    CHECK(std::abs(emb.coords.col(1).mean()) < 1e-9);
}

TEST_CASE("single vertex lands at the origin") {
    NeighborGraph g;
    g.num_vertices = 1;
    g.symmetric = true;
    const Embedding emb = spectral_layout(g, 2);
    REQUIRE(emb.num_rows() == 1);
    CHECK(emb.coords(0, 0) == 0.0);
    CHECK(emb.coords(0, 1) == 0.0);
}

TEST_CASE("disconnected components are offset apart") {
    NeighborGraph g;
    g.num_vertices = 8;
    g.symmetric = true;
    for (int i = 0; i + 1 < 4; ++i) g.edges.push_back({i, i + 1, 1.0});
    for (int i = 4; i + 1 < 8; ++i) g.edges.push_back({i, i + 1, 1.0});
    const Embedding emb = spectral_layout(g, 2);
    const double first_max = emb.coords.col(0).head(4).maxCoeff();
    const double second_min = emb.coords.col(0).tail(4).minCoeff();
    CHECK(second_min > first_max);
}

TEST_CASE("lanczos path agrees with a dense reference") {
    // A k-NN graph of random plane points, large enough to route through the
    // iterative path. The reference eigensolve is built independently here.
    Rng rng(99);
    const int nv = 1500;
    Eigen::MatrixXd pts(nv, 2);
    for (int i = 0; i < nv; ++i) {
        pts(i, 0) = rng.uniform(0.0, 1.0);
        pts(i, 1) = rng.uniform(0.0, 1.0);
    }
    const KnnResult knn = knn_exact(pts, 12);
    NeighborGraph g;
    g.num_vertices = nv;
    g.symmetric = true;
    std::set<std::pair<int, int>> seen;
    for (int i = 0; i < nv; ++i) {
        for (int k = 0; k < 12; ++k) {
            const int j = knn.neighbor_ids(i, k);
            const auto key = std::minmax(i, j);
            if (seen.insert({key.first, key.second}).second)
                g.edges.push_back({key.first, key.second, 1.0});
        }
    }

    const SpectralDecomposition eig = laplacian_eigs(g, 3);

    // Dense reference Laplacian.
    Eigen::VectorXd degree = Eigen::VectorXd::Zero(nv);
    for (const GraphEdge& e : g.edges) {
        degree(e.i) += e.weight;
        degree(e.j) += e.weight;
    }
    Eigen::MatrixXd lap = Eigen::MatrixXd::Identity(nv, nv);
    for (const GraphEdge& e : g.edges) {
        const double w = e.weight / std::sqrt(degree(e.i) * degree(e.j));
        lap(e.i, e.j) -= w;
        lap(e.j, e.i) -= w;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> dense(lap);

    for (int idx = 0; idx < 3; ++idx) {
        CHECK(std::abs(eig.eigenvalues(idx) - dense.eigenvalues()(idx)) < 1e-6);
        // Self-validating residual on the returned vectors.
        const Eigen::VectorXd residual =
            lap * eig.eigenvectors.col(idx) - eig.eigenvalues(idx) * eig.eigenvectors.col(idx);
        CHECK(residual.norm() < 1e-6);
    }
}

TEST_CASE("pca of collinear points recovers the line") {
    FeatureMatrix features;
    features.values.resize(3, 2);
    features.values << -1.0, -1.0, 0.0, 0.0, 1.0, 1.0;
    features.index_map = {0, 1, 2};
    const Embedding emb = pca(features, 1);
    CHECK(emb.coords(0, 0) == doctest::Approx(-std::sqrt(2.0)).epsilon(1e-9));
    CHECK(emb.coords(1, 0) == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(emb.coords(2, 0) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-9));
}

TEST_CASE("a constant column does not move pca scores") {
    Rng rng(5);
    FeatureMatrix features;
    features.values.resize(40, 6);
    for (int i = 0; i < 40; ++i)
        for (int d = 0; d < 6; ++d) features.values(i, d) = rng.uniform(-1.0, 1.0);
    features.index_map.resize(40);
    std::iota(features.index_map.begin(), features.index_map.end(), 0);

    FeatureMatrix padded;
    padded.values.resize(40, 7);
    padded.values.leftCols(6) = features.values;
    padded.values.col(6).setConstant(3.7);
    padded.index_map = features.index_map;

    const Embedding base = pca(features, 2);
    const Embedding same = pca(padded, 2);
    CHECK((base.coords - same.coords).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("pca reconstruction error equals the discarded spectrum") {
    Rng rng(9);
    FeatureMatrix features;
    features.values.resize(100, 20);
    for (int i = 0; i < 100; ++i)
        for (int d = 0; d < 20; ++d) features.values(i, d) = rng.uniform(-1.0, 1.0);
    features.index_map.resize(100);
    std::iota(features.index_map.begin(), features.index_map.end(), 0);

    const int dim = 5;
    const Embedding emb = pca(features, dim);

    // Full decomposition reference.
    const Eigen::MatrixXd centered =
        features.values.rowwise() - features.values.colwise().mean();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(centered.transpose() * centered);
    const Eigen::VectorXd all = solver.eigenvalues();
    double discarded = 0.0;
    for (int i = 0; i < all.size() - dim; ++i) discarded += std::max(0.0, all(i));

    // Reconstruction error from the scores: total variance minus captured.
    const double total = centered.squaredNorm();
    const double captured = emb.coords.squaredNorm();
    CHECK(total - captured == doctest::Approx(discarded).epsilon(1e-8));
}

TEST_CASE("pca scores permute with the input rows") {
    Rng rng(13);
    FeatureMatrix features;
    features.values.resize(30, 5);
    for (int i = 0; i < 30; ++i)
        for (int d = 0; d < 5; ++d) features.values(i, d) = rng.uniform(-1.0, 1.0);
    features.index_map.resize(30);
    std::iota(features.index_map.begin(), features.index_map.end(), 0);

    std::vector<int> perm(30);
    std::iota(perm.begin(), perm.end(), 0);
    for (int i = 29; i > 0; --i)
        std::swap(perm[static_cast<std::size_t>(i)],
                  perm[rng.uniform_index(static_cast<std::size_t>(i + 1))]);

    FeatureMatrix shuffled = features;
    for (int i = 0; i < 30; ++i)
        shuffled.values.row(i) = features.values.row(perm[static_cast<std::size_t>(i)]);

    const Embedding base = pca(features, 2);
    const Embedding swapped = pca(shuffled, 2);
    for (int i = 0; i < 30; ++i) {
        CHECK((swapped.coords.row(i) - base.coords.row(perm[static_cast<std::size_t>(i)]))
                  .cwiseAbs()
                  .maxCoeff() < 1e-9);
    }
}

TEST_CASE("pca rejects rank-deficient requests") {
    FeatureMatrix features;
    features.values = Eigen::MatrixXd::Zero(10, 3);
    features.values.col(0).setLinSpaced(10, 0.0, 1.0);
    features.index_map.resize(10);
    std::iota(features.index_map.begin(), features.index_map.end(), 0);
    CHECK_THROWS_AS(pca(features, 2), std::domain_error);
}

TEST_CASE("coincident endpoints contribute no attractive loss") {
    NeighborGraph g;
    g.num_vertices = 2;
    g.symmetric = true;
    g.edges = {{0, 1, 1.0}};
    Embedding emb;
    emb.coords = Eigen::MatrixXd::Zero(2, 2);
    emb.index_map = {0, 1};
    // Only the sampled non-edges can contribute, and both points coincide, so
    // the attractive edge term must clamp to zero exactly.
    LayoutParams p{1.58, 0.9};
    const double value = cross_entropy(g, emb, p);
    CHECK(value >= 0.0);
    CHECK(value < 1e-6);
}

TEST_CASE("stretching a unit-weight edge grows the loss monotonically") {
    NeighborGraph g;
    g.num_vertices = 2;
    g.symmetric = true;
    g.edges = {{0, 1, 1.0}};
    LayoutParams p{1.58, 0.9};
    double previous = -1.0;
    for (double span : {0.5, 1.0, 2.0, 4.0, 8.0}) {
        Embedding emb;
        emb.coords = Eigen::MatrixXd::Zero(2, 2);
        emb.coords(1, 0) = span;
        emb.index_map = {0, 1};
        const double value = cross_entropy(g, emb, p);
        CHECK(value > previous);
        previous = value;
    }
}

TEST_CASE("analytic gradient matches central finite differences") {
    Rng rng(17);
    const LayoutParams p = fit_ab(0.1);
    for (int trial = 0; trial < 20; ++trial) {
        const NeighborGraph g = random_graph(rng, 5);
        Embedding emb = random_embedding(rng, 5, 2);

        const Eigen::MatrixXd grad = cross_entropy_grad(g, emb, p);
        Eigen::MatrixXd fd(5, 2);
        const double h = 1e-6;
        for (int i = 0; i < 5; ++i) {
            for (int d = 0; d < 2; ++d) {
                emb.coords(i, d) += h;
                const double up = cross_entropy(g, emb, p);
                emb.coords(i, d) -= 2.0 * h;
                const double down = cross_entropy(g, emb, p);
                emb.coords(i, d) += h;
                fd(i, d) = (up - down) / (2.0 * h);
            }
        }
        const double scale = std::max(1e-12, fd.norm());
        REQUIRE((grad - fd).norm() / scale <= 1e-4);
    }
}

TEST_CASE("a lone vertex never moves") {
    NeighborGraph g;
    g.num_vertices = 1;
    g.symmetric = true;
    Embedding init;
    init.coords.resize(1, 2);
    init.coords << 3.0, -2.0;
    init.index_map = {0};
    UmapConfig cfg;
    cfg.n = 1;
    cfg.epochs = 50;
    const Embedding out = optimize_layout(g, init, cfg);
    CHECK(out.coords(0, 0) == 3.0);
    CHECK(out.coords(0, 1) == -2.0);
}

// Run-to-convergence bracket: a single unit edge pulls two points from 5
// apart to within the d_min packing scale, across every seed.
TEST_CASE("two bonded vertices contract into the packing bracket") {
    NeighborGraph g;
    g.num_vertices = 2;
    g.symmetric = true;
    g.edges = {{0, 1, 1.0}};
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        Embedding init;
        init.coords.resize(2, 2);
        init.coords << 0.0, 0.0, 5.0, 0.0;
        init.index_map = {0, 1};
        UmapConfig cfg;
        cfg.n = 1;
        cfg.d_min = 0.1;
        cfg.epochs = 500;
        cfg.seed = seed;
        const Embedding out = optimize_layout(g, init, cfg);
        const double dist = (out.coords.row(0) - out.coords.row(1)).norm();
        CHECK(dist < 5.0);
        CHECK(dist >= 0.0);
        CHECK(dist <= 0.5);
    }
}

TEST_CASE("optimization reduces the layout objective on clustered data") {
    Rng rng(23);
    // Two well-separated feature clusters.
    FeatureMatrix features;
    features.values.resize(200, 4);
    for (int i = 0; i < 200; ++i) {
        const double offset = i < 100 ? 0.0 : 6.0;
        for (int d = 0; d < 4; ++d)
            features.values(i, d) = offset + rng.uniform(-0.5, 0.5);
    }
    features.index_map.resize(200);
    std::iota(features.index_map.begin(), features.index_map.end(), 0);

    const int n = 10;
    const KnnResult knn = knn_exact(features, n);
    const NeighborGraph graph = symmetrize(fuzzy_weights(knn, local_scales(knn, n)));
    const LayoutParams p = fit_ab(0.1);

    int improved = 0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        Rng init_rng(seed + 1000);
        Embedding init = random_embedding(init_rng, 200, 2);
        init.coords *= 5.0;
        UmapConfig cfg;
        cfg.n = n;
        cfg.d_min = 0.1;
        cfg.epochs = 200;
        cfg.seed = seed;
        const Embedding out = optimize_layout(graph, init, cfg);
        if (cross_entropy(graph, out, p) < cross_entropy(graph, init, p)) ++improved;
    }
    CHECK(improved >= 9);
}

TEST_CASE("translating the start translates the result exactly") {
    Rng rng(29);
    const NeighborGraph g = random_graph(rng, 12);
    // Initial coordinates on a coarse dyadic grid and a dyadic displacement,
    // so translating the input introduces no rounding of its own.
    Embedding init = random_embedding(rng, 12, 2);
    for (int i = 0; i < 12; ++i)
        for (int d = 0; d < 2; ++d)
            init.coords(i, d) = std::round(init.coords(i, d) * 1048576.0) / 1048576.0;
    UmapConfig cfg;
    cfg.n = 4;
    cfg.epochs = 100;
    cfg.seed = 77;

    const Embedding base = optimize_layout(g, init, cfg);

    Embedding moved = init;
    moved.coords.col(0).array() += 0.5;
    moved.coords.col(1).array() -= 0.25;
    const Embedding shifted = optimize_layout(g, moved, cfg);

    Eigen::MatrixXd expected = base.coords;
    expected.col(0).array() += 0.5;
    expected.col(1).array() -= 0.25;
    CHECK((shifted.coords - expected).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("single-threaded optimization is a pure function of the seed") {
    Rng rng(31);
    const NeighborGraph g = random_graph(rng, 15);
    const Embedding init = random_embedding(rng, 15, 2);
    UmapConfig cfg;
    cfg.n = 5;
    cfg.epochs = 120;
    cfg.seed = 5;
    const Embedding first = optimize_layout(g, init, cfg);
    const Embedding second = optimize_layout(g, init, cfg);
    CHECK((first.coords - second.coords).norm() == 0.0);
}
