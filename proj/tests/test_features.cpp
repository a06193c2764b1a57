#include "trunet/features.hpp"

#include <cmath>
#include <complex>
#include <random>
#include <stdexcept>
#include <vector>

#include "doctest.h"

using namespace trunet;

TEST_CASE("pcen fixed point for unit energy") {
    const int B = 4;
    const auto p = PcenParams::defaults(B);
    PcenState st;
    std::vector<double> e(B, 1.0), out(B);

    // constant input: the smoother sits at its fixed point from the first
    // frame on, so every output equals the closed form
    const double expected =
        std::pow(1.0 / std::pow(1e-6 + 1.0, 0.98) + 2.0, 0.5) - std::pow(2.0, 0.5);
    for (int t = 0; t < 50; ++t) {
        pcen_step(e.data(), B, st, p, out.data());
        for (int f = 0; f < B; ++f) REQUIRE(out[f] == doctest::Approx(expected).epsilon(1e-12));
    }
    REQUIRE(expected == doctest::Approx(0.3178370).epsilon(1e-6));
}

TEST_CASE("pcen primes the smoother with the first frame") {
    const int B = 2;
    const auto p = PcenParams::defaults(B);
    PcenState st;
    std::vector<double> e = {3.0, 0.5}, out(B);
    pcen_step(e.data(), B, st, p, out.data());
    REQUIRE(st.primed);
    for (int f = 0; f < B; ++f) {
        // primed state equals the first energy, so m' = E exactly
        const double expected =
            std::pow(e[f] / std::pow(1e-6 + e[f], 0.98) + 2.0, 0.5) - std::sqrt(2.0);
        REQUIRE(out[f] == doctest::Approx(expected).epsilon(1e-12));
    }
}

TEST_CASE("pcen smoother follows the recurrence") {
    const int B = 1;
    const auto p = PcenParams::defaults(B);
    PcenState st;
    std::vector<double> out(1);
    double e0 = 2.0, e1 = 0.25;
    pcen_step(&e0, 1, st, p, out.data());
    pcen_step(&e1, 1, st, p, out.data());
    const double m = (1.0 - 0.025) * 2.0 + 0.025 * 0.25;
    REQUIRE(st.m[0] == doctest::Approx(m).epsilon(1e-15));
    const double expected = std::pow(e1 / std::pow(1e-6 + m, 0.98) + 2.0, 0.5) - std::sqrt(2.0);
    REQUIRE(out[0] == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("pcen rejects bad input") {
    const auto p = PcenParams::defaults(2);
    PcenState st;
    std::vector<double> e = {-0.1, 0.0}, out(2);
    REQUIRE_THROWS_AS(pcen_step(e.data(), 2, st, p, out.data()), std::invalid_argument);
    std::vector<double> good = {0.1, 0.2};
    REQUIRE_THROWS_AS(pcen_step(good.data(), 3, st, p, out.data()), std::invalid_argument);
}

TEST_CASE("log magnitude floors at 1e-7") {
    std::vector<std::complex<double>> frame = {{0.0, 0.0}, {3.0, 4.0}, {1e-9, 0.0}};
    std::vector<double> out(3);
    log_magnitude(frame.data(), 3, out.data());
    REQUIRE(out[0] == doctest::Approx(std::log(1e-7)).epsilon(1e-12));
    REQUIRE(out[0] == doctest::Approx(-16.118095650958319).epsilon(1e-12));
    REQUIRE(out[1] == doctest::Approx(std::log(5.0)).epsilon(1e-12));
    REQUIRE(out[2] == doctest::Approx(std::log(1e-7)).epsilon(1e-12));
}

TEST_CASE("feature frame layout is logmag pcen cos sin per bin") {
    StftConfig cfg;
    const int B = cfg.bins();
    std::vector<std::complex<double>> frame(B, {0.0, 0.0});
    frame[10] = {2.0, 0.0};

    PcenState st;
    const auto p = PcenParams::defaults(B);
    std::vector<float> out(B * 4);
    build_feature_frame(frame.data(), B, 0, cfg, st, p, out.data());

    REQUIRE(out[10 * 4 + 0] == doctest::Approx(std::log(2.0)).epsilon(1e-6));
    const double pc = std::pow(2.0 / std::pow(1e-6 + 2.0, 0.98) + 2.0, 0.5) - std::sqrt(2.0);
    REQUIRE(out[10 * 4 + 1] == doctest::Approx(pc).epsilon(1e-6));
    // frame 0 carries no carrier, so phase channels reflect the raw frame
    REQUIRE(out[10 * 4 + 2] == doctest::Approx(1.0).epsilon(1e-6));
    REQUIRE(out[10 * 4 + 3] == doctest::Approx(0.0).epsilon(1e-6));
    // zero-magnitude bins: logmag floor and the (1, 0) phase convention
    REQUIRE(out[0] == doctest::Approx(std::log(1e-7)).epsilon(1e-6));
    REQUIRE(out[2] == doctest::Approx(1.0).epsilon(1e-6));
    REQUIRE(out[3] == doctest::Approx(0.0).epsilon(1e-6));
}

TEST_CASE("offline features advance pcen state across frames") {
    StftConfig cfg;
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    std::vector<double> x(2048);
    for (double& v : x) v = dist(rng);

    const auto spec = stft(x, cfg);
    const auto feats = build_features(spec, cfg, PcenParams::defaults(spec.bins));
    REQUIRE(feats.frames == spec.frames);
    REQUIRE(feats.bins == spec.bins);
    REQUIRE(feats.data.size() == static_cast<size_t>(spec.frames) * spec.bins * 4);

    // replaying frame by frame with one carried state must match exactly
    PcenState st;
    const auto p = PcenParams::defaults(spec.bins);
    std::vector<float> frame(spec.bins * 4);
    for (int t = 0; t < spec.frames; ++t) {
        build_feature_frame(spec.frame(t), spec.bins, t, cfg, st, p, frame.data());
        for (size_t i = 0; i < frame.size(); ++i) REQUIRE(frame[i] == feats.frame(t)[i]);
    }
}
