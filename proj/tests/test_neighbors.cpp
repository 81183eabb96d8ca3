#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "holescope/neighbors.hpp"
#include "holescope/rng.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

using namespace holescope;

namespace {

Eigen::MatrixXd random_matrix(Rng& rng, int rows, int cols) {
    Eigen::MatrixXd m(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) m(i, j) = rng.uniform(-1.0, 1.0);
    return m;
}

/// Quadratic reference: all pairwise distances by direct summation, sorted
/// with index tie-breaks. Independent of the blocked GEMM path under test.
KnnResult brute_force_knn(const Eigen::MatrixXd& points, int n) {
    const int m = static_cast<int>(points.rows());
    KnnResult result;
    result.neighbor_ids.resize(m, n);
    result.distances.resize(m, n);
    for (int i = 0; i < m; ++i) {
        std::vector<std::pair<double, int>> all;
        for (int j = 0; j < m; ++j) {
            if (j == i) continue;
            double sq = 0.0;
            for (int d = 0; d < points.cols(); ++d) {
                const double delta = points(i, d) - points(j, d);
                sq += delta * delta;
            }
            all.emplace_back(sq, j);
        }
        std::sort(all.begin(), all.end());
        for (int k = 0; k < n; ++k) {
            result.neighbor_ids(i, k) = all[static_cast<std::size_t>(k)].second;
            result.distances(i, k) = std::sqrt(all[static_cast<std::size_t>(k)].first);
        }
    }
    return result;
}

}  // namespace

TEST_CASE("collinear points pick the obvious neighbor") {
    Eigen::MatrixXd points(3, 1);
    points << 0.0, 1.0, 3.0;
    const KnnResult knn = knn_exact(points, 1);
    CHECK(knn.neighbor_ids(0, 0) == 1);
    CHECK(knn.neighbor_ids(1, 0) == 0);
    CHECK(knn.neighbor_ids(2, 0) == 1);
}

TEST_CASE("duplicate points report zero distance and index ties") {
    Eigen::MatrixXd points(4, 2);
    points << 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0;
    const KnnResult knn = knn_exact(points, 2);
    // Row 0: duplicates at rows 1 and 3, indices ascending.
    CHECK(knn.distances(0, 0) == 0.0);
    CHECK(knn.distances(0, 1) == 0.0);
    CHECK(knn.neighbor_ids(0, 0) == 1);
    CHECK(knn.neighbor_ids(0, 1) == 3);
}

TEST_CASE("knn matches the quadratic reference") {
    Rng rng(41);
    const Eigen::MatrixXd points = random_matrix(rng, 50, 8);
    const KnnResult fast = knn_exact(points, 5);
    const KnnResult slow = brute_force_knn(points, 5);
    CHECK(fast.neighbor_ids == slow.neighbor_ids);
    CHECK((fast.distances - slow.distances).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("knn matches the reference across sizes and dimensions") {
    Rng rng(43);
    for (int trial = 0; trial < 12; ++trial) {
        const int m = 20 + static_cast<int>(rng.uniform_index(480));
        const int d = 1 + static_cast<int>(rng.uniform_index(12));
        const int n = 1 + static_cast<int>(rng.uniform_index(8));
        const Eigen::MatrixXd points = random_matrix(rng, m, d);
        const KnnResult fast = knn_exact(points, n);
        const KnnResult slow = brute_force_knn(points, n);
        REQUIRE(fast.neighbor_ids == slow.neighbor_ids);
        REQUIRE((fast.distances - slow.distances).cwiseAbs().maxCoeff() < 1e-9);
    }
}

TEST_CASE("knn is independent of the worker count") {
    Rng rng(47);
    const Eigen::MatrixXd points = random_matrix(rng, 300, 6);
    const KnnResult one = knn_exact(points, 7, 1);
    const KnnResult four = knn_exact(points, 7, 4);
    CHECK(one.neighbor_ids == four.neighbor_ids);
    CHECK((one.distances - four.distances).norm() == 0.0);
}

TEST_CASE("neighborhood size must stay below the row count") {
    Rng rng(51);
    const Eigen::MatrixXd points = random_matrix(rng, 10, 3);
    CHECK_THROWS_AS(knn_exact(points, 10), std::domain_error);
    CHECK_THROWS_AS(knn_exact(points, 0), std::domain_error);
}

TEST_CASE("rho is the smallest positive distance") {
    KnnResult knn;
    knn.distances.resize(1, 3);
    knn.distances << 1.0, 2.0, 3.0;
    knn.neighbor_ids.resize(1, 3);
    knn.neighbor_ids << 1, 2, 3;
    const FuzzyNeighborhood fn = local_scales(knn, 3);
    CHECK(fn.rho(0) == 1.0);
}

// Closed form: surplus distances {0, t, t, t} and a log2(4) = 2 target give
// 1 + 3 exp(-t/sigma) = 2, so sigma = t/ln 3.
TEST_CASE("sigma closed form for a three-way tie") {
    KnnResult knn;
    knn.distances.resize(1, 4);
    knn.distances << 1.0, 2.0, 2.0, 2.0;
    knn.neighbor_ids.resize(1, 4);
    knn.neighbor_ids << 1, 2, 3, 4;
    const FuzzyNeighborhood fn = local_scales(knn, 4);
    CHECK(fn.sigma(0) == doctest::Approx(1.0 / std::log(3.0)).epsilon(1e-6));
    CHECK(fn.sigma(0) == doctest::Approx(0.91024).epsilon(1e-4));
}

TEST_CASE("sigma satisfies the weight-mass constraint on random rows") {
    Rng rng(61);
    const int n = 12;
    const double target = std::log2(static_cast<double>(n));
    for (int trial = 0; trial < 1000; ++trial) {
        KnnResult knn;
        knn.distances.resize(1, n);
        knn.neighbor_ids.resize(1, n);
        double d = rng.uniform(0.01, 0.5);
        for (int k = 0; k < n; ++k) {
            knn.distances(0, k) = d;
            knn.neighbor_ids(0, k) = k + 1;
            d += rng.uniform(0.0, 0.4);
        }
        const FuzzyNeighborhood fn = local_scales(knn, n);
        // Re-evaluate the constraint with the fitted sigma.
        double mass = 0.0;
        for (int k = 0; k < n; ++k)
            mass += std::exp(-std::max(0.0, knn.distances(0, k) - fn.rho(0)) / fn.sigma(0));
        REQUIRE(std::abs(mass - target) <= 1e-5);
    }
}

TEST_CASE("all-tied rows fall back to unit sigma") {
    KnnResult knn;
    knn.distances.resize(1, 4);
    knn.distances << 2.0, 2.0, 2.0, 2.0;
    knn.neighbor_ids.resize(1, 4);
    knn.neighbor_ids << 1, 2, 3, 4;
    const FuzzyNeighborhood fn = local_scales(knn, 4);
    CHECK(fn.sigma(0) == 1.0);
}

TEST_CASE("a row of zero distances is rejected by name") {
    KnnResult knn;
    knn.distances = Eigen::MatrixXd::Zero(2, 3);
    knn.distances.row(0) << 1.0, 1.5, 2.0;
    knn.neighbor_ids = Eigen::MatrixXi::Zero(2, 3);
    try {
        local_scales(knn, 3);
        FAIL("expected a domain error");
    } catch (const std::domain_error& e) {
        CHECK(std::string(e.what()).find('1') != std::string::npos);
    }
}

TEST_CASE("edge weights follow the exponential kernel") {
    KnnResult knn;
    knn.distances.resize(1, 3);
    knn.distances << 1.0, 1.5, 9.0;
    knn.neighbor_ids.resize(1, 3);
    knn.neighbor_ids << 1, 2, 3;
    FuzzyNeighborhood fn;
    fn.rho.resize(1);
    fn.sigma.resize(1);
    fn.rho << 1.0;
    fn.sigma << 0.5;
    const NeighborGraph g = fuzzy_weights(knn, fn);
    REQUIRE(g.edges.size() == 3);
    CHECK(g.edges[0].weight == doctest::Approx(1.0));               // d == rho
    CHECK(g.edges[1].weight == doctest::Approx(std::exp(-1.0)));    // surplus == sigma
    CHECK(g.edges[2].weight == doctest::Approx(std::exp(-16.0)));
}

TEST_CASE("every row carries a unit-weight edge and weights stay in (0, 1]") {
    Rng rng(67);
    const Eigen::MatrixXd points = random_matrix(rng, 120, 5);
    const int n = 8;
    const KnnResult knn = knn_exact(points, n);
    const NeighborGraph g = fuzzy_weights(knn, local_scales(knn, n));
    std::map<int, double> row_max;
    for (const GraphEdge& e : g.edges) {
        CHECK(e.weight > 0.0);
        CHECK(e.weight <= 1.0);
        row_max[e.i] = std::max(row_max[e.i], e.weight);
    }
    for (int i = 0; i < 120; ++i) CHECK(row_max[i] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("symmetrization follows the probabilistic union") {
    NeighborGraph g;
    g.num_vertices = 4;
    g.edges = {{0, 1, 1.0}, {2, 0, 0.5}, {0, 2, 0.5}, {3, 1, 0.0}};
    const NeighborGraph sym = symmetrize(g);
    REQUIRE(sym.edges.size() == 2);
    CHECK(sym.edges[0].i == 0);
    CHECK(sym.edges[0].j == 1);
    CHECK(sym.edges[0].weight == doctest::Approx(1.0));   // (1, 0) -> 1
    CHECK(sym.edges[1].weight == doctest::Approx(0.75));  // (0.5, 0.5) -> 0.75
}

TEST_CASE("symmetrization is idempotent and direction-commutative") {
    Rng rng(71);
    for (int trial = 0; trial < 20; ++trial) {
        NeighborGraph g;
        g.num_vertices = 6;
        for (int e = 0; e < 10; ++e) {
            const int i = static_cast<int>(rng.uniform_index(6));
            const int j = static_cast<int>(rng.uniform_index(6));
            if (i == j) continue;
            g.edges.push_back({i, j, rng.uniform(0.05, 1.0)});
        }
        NeighborGraph reversed = g;
        for (GraphEdge& e : reversed.edges) std::swap(e.i, e.j);

        const NeighborGraph once = symmetrize(g);
        const NeighborGraph twice = symmetrize(once);
        const NeighborGraph from_reversed = symmetrize(reversed);

        REQUIRE(once.edges.size() == twice.edges.size());
        REQUIRE(once.edges.size() == from_reversed.edges.size());
        for (std::size_t k = 0; k < once.edges.size(); ++k) {
            CHECK(once.edges[k].weight ==
                  doctest::Approx(twice.edges[k].weight).epsilon(1e-12));
            CHECK(once.edges[k].weight ==
                  doctest::Approx(from_reversed.edges[k].weight).epsilon(1e-12));
        }
    }
}
