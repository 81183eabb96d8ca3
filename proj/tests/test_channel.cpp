#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "holescope/channel.hpp"
#include "holescope/rng.hpp"

#include <cmath>
#include <complex>
#include <vector>

using namespace holescope;

namespace {

ArrayConfig small_config(int n, int f) {
    ArrayConfig cfg;
    cfg.num_antennas = n;
    cfg.num_subcarriers = f;
    cfg.carrier_frequency_hz = 60e9;
    cfg.bandwidth_hz = 500e6;
    return cfg;
}

std::vector<MultipathComponent> random_mpcs(Rng& rng, int count) {
    std::vector<MultipathComponent> mpcs;
    for (int k = 0; k < count; ++k) {
        MultipathComponent mpc;
        mpc.amplitude = {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
        mpc.aoa_rad = rng.uniform(0.1, M_PI - 0.1);
        mpc.delay_s = rng.uniform(0.0, 100e-9);
        mpcs.push_back(mpc);
    }
    return mpcs;
}

}  // namespace

TEST_CASE("array response at broadside") {
    const auto a = array_response(M_PI / 2.0, 4);
    REQUIRE(a.size() == 4);
    for (int p = 0; p < 4; ++p) {
        CHECK(a(p).real() == doctest::Approx(0.5).epsilon(1e-12));
        CHECK(std::abs(a(p).imag()) < 1e-12);
    }
}

TEST_CASE("array response near endfire alternates sign") {
    const auto a = array_response(1e-9, 2);
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    CHECK(std::abs(a(0) - std::complex<double>(inv_sqrt2, 0.0)) < 1e-12);
    CHECK(std::abs(a(1) - std::complex<double>(-inv_sqrt2, 0.0)) < 1e-12);
}

TEST_CASE("array response has unit norm for all sizes") {
    for (int n : {1, 2, 3, 5, 17, 64, 256}) {
        for (double aoa = 0.05; aoa < M_PI; aoa += 0.135) {
            CHECK(array_response(aoa, n).norm() == doctest::Approx(1.0).epsilon(1e-12));
        }
    }
}

TEST_CASE("array response rejects out-of-domain input") {
    CHECK_THROWS_AS(array_response(0.0, 4), std::domain_error);
    CHECK_THROWS_AS(array_response(M_PI, 4), std::domain_error);
    CHECK_THROWS_AS(array_response(-0.3, 4), std::domain_error);
    CHECK_THROWS_AS(array_response(1.0, 0), std::domain_error);
}

TEST_CASE("empty component list synthesizes the zero matrix") {
    const auto sample = synth_channel({}, small_config(4, 8));
    CHECK(sample.H.rows() == 4);
    CHECK(sample.H.cols() == 8);
    CHECK(sample.H.norm() == 0.0);
}

TEST_CASE("single zero-delay broadside path") {
    MultipathComponent mpc;
    mpc.amplitude = {1.0, 0.0};
    mpc.aoa_rad = M_PI / 2.0;
    mpc.delay_s = 0.0;
    const auto sample = synth_channel({mpc}, small_config(2, 1));
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    CHECK(std::abs(sample.H(0, 0) - std::complex<double>(inv_sqrt2, 0.0)) < 1e-12);
    CHECK(std::abs(sample.H(1, 0) - std::complex<double>(inv_sqrt2, 0.0)) < 1e-12);
}

TEST_CASE("opposite amplitudes cancel") {
    Rng rng(7);
    auto mpcs = random_mpcs(rng, 1);
    auto mirrored = mpcs;
    mirrored[0].amplitude = -mirrored[0].amplitude;
    mpcs.push_back(mirrored[0]);
    const auto sample = synth_channel(mpcs, small_config(8, 16));
    CHECK(sample.H.norm() < 1e-12);
}

TEST_CASE("synthesis is linear in the component list") {
    Rng rng(21);
    const auto cfg = small_config(8, 16);
    for (int trial = 0; trial < 10; ++trial) {
        const auto first = random_mpcs(rng, 3);
        const auto second = random_mpcs(rng, 2);
        auto merged = first;
        merged.insert(merged.end(), second.begin(), second.end());
        const Eigen::MatrixXcd lhs = synth_channel(merged, cfg).H;
        const Eigen::MatrixXcd rhs = synth_channel(first, cfg).H + synth_channel(second, cfg).H;
        CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("rss of an empty list is the -inf sentinel") {
    CHECK(rss_db({}) == kNegInfDb);
}

TEST_CASE("rss closed forms") {
    MultipathComponent mpc;
    mpc.amplitude = {0.5, 0.0};
    mpc.aoa_rad = 1.0;
    CHECK(rss_db({mpc}) == doctest::Approx(10.0 * std::log10(0.25)).epsilon(1e-12));

    MultipathComponent unit1;
    unit1.amplitude = {1.0, 0.0};
    MultipathComponent unit2;
    unit2.amplitude = {0.0, 1.0};
    CHECK(rss_db({unit1, unit2}) == doctest::Approx(10.0 * std::log10(2.0)).epsilon(1e-12));
}

TEST_CASE("rss scales by 20 log10 of an amplitude factor") {
    Rng rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        auto mpcs = random_mpcs(rng, 4);
        const double base = rss_db(mpcs);
        const std::complex<double> c{rng.uniform(0.2, 3.0), rng.uniform(-1.0, 1.0)};
        for (auto& mpc : mpcs) mpc.amplitude *= c;
        CHECK(rss_db(mpcs) ==
              doctest::Approx(base + 20.0 * std::log10(std::abs(c))).epsilon(1e-10));
    }
}

TEST_CASE("infinite snr returns the input unchanged") {
    Rng rng(5);
    const auto sample = synth_channel(random_mpcs(rng, 3), small_config(4, 4));
    const auto noisy = add_noise(sample, std::numeric_limits<double>::infinity(), 42);
    CHECK((noisy.H - sample.H).norm() == 0.0);
}

TEST_CASE("add_noise is a pure function of the seed") {
    Rng rng(11);
    const auto sample = synth_channel(random_mpcs(rng, 3), small_config(4, 4));
    const auto first = add_noise(sample, 10.0, 1234);
    const auto second = add_noise(sample, 10.0, 1234);
    CHECK((first.H - second.H).norm() == 0.0);
    const auto other_seed = add_noise(sample, 10.0, 1235);
    CHECK((first.H - other_seed.H).norm() > 0.0);
}

TEST_CASE("add_noise rejects a zero channel at finite snr") {
    const auto sample = synth_channel({}, small_config(4, 4));
    CHECK_THROWS_AS(add_noise(sample, 10.0, 1), std::domain_error);
}

// Monte-Carlo oracle: at 0 dB the expected noise energy equals the channel
// energy, so the empirical ratio over many seeds must settle near 1.
TEST_CASE("snr calibration against a monte-carlo estimate") {
    Rng rng(13);
    const auto sample = synth_channel(random_mpcs(rng, 2), small_config(4, 4));
    const double signal_energy = sample.H.squaredNorm();
    double acc = 0.0;
    const int trials = 10000;
    for (int seed = 0; seed < trials; ++seed) {
        const auto noisy = add_noise(sample, 0.0, static_cast<std::uint64_t>(seed));
        acc += (noisy.H - sample.H).squaredNorm();
    }
    const double ratio = acc / trials / signal_energy;
    CHECK(ratio == doctest::Approx(1.0).epsilon(0.05));
}
