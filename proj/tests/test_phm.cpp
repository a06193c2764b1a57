#include "trunet/phm.hpp"

#include <cmath>
#include <complex>
#include <random>
#include <stdexcept>
#include <vector>

#include "doctest.h"

using namespace trunet;

TEST_CASE("logistic and softplus basics") {
    REQUIRE(logistic(0.0) == doctest::Approx(0.5).epsilon(1e-15));
    REQUIRE(logistic(std::log(3.0)) == doctest::Approx(0.75).epsilon(1e-12));
    REQUIRE(logistic(-800.0) == doctest::Approx(0.0));
    REQUIRE(logistic(800.0) == doctest::Approx(1.0));
    REQUIRE(softplus(0.0) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    REQUIRE(softplus(50.0) == doctest::Approx(50.0).epsilon(1e-12));
    REQUIRE(softplus(-50.0) == doctest::Approx(std::exp(-50.0)).epsilon(1e-6));
    REQUIRE(std::isfinite(softplus(10000.0)));
}

TEST_CASE("sigmoid pair depends on the logit difference") {
    REQUIRE(sigmoid_pair(2.0, 2.0) == doctest::Approx(0.5).epsilon(1e-15));
    REQUIRE(sigmoid_pair(3.0, 1.0) == doctest::Approx(logistic(2.0)).epsilon(1e-15));
    REQUIRE(sigmoid_pair(1.0, 3.0) + sigmoid_pair(3.0, 1.0) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("beta saturates at the triangle bound") {
    // sigma = 0.75: the bound 1/|2s-1| = 2 wins over 1 + softplus(3)
    REQUIRE(compute_beta(3.0, 0.75) == doctest::Approx(2.0).epsilon(1e-12));
    // small raw head: the softplus branch wins
    REQUIRE(compute_beta(-5.0, 0.75) == doctest::Approx(1.0 + softplus(-5.0)).epsilon(1e-12));
    // sigma = 0.5: bound is infinite, softplus always wins
    REQUIRE(compute_beta(10.0, 0.5) == doctest::Approx(1.0 + softplus(10.0)).epsilon(1e-12));
}

TEST_CASE("magnitude pair from beta times sigmoid split") {
    const double sigma = 0.75, beta = compute_beta(3.0, sigma);
    REQUIRE(beta * sigma == doctest::Approx(1.5).epsilon(1e-12));
    REQUIRE(beta * (1.0 - sigma) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("law of cosines on the 3-4-5 triangle") {
    double c = 0.0, s = 0.0;
    phase_from_magnitudes(0.6, 0.8, c, s);
    REQUIRE(c == doctest::Approx(0.6).epsilon(1e-12));
    REQUIRE(s == doctest::Approx(0.8).epsilon(1e-12));
    phase_from_magnitudes(0.8, 0.6, c, s);
    REQUIRE(c == doctest::Approx(0.8).epsilon(1e-12));
    REQUIRE(s == doctest::Approx(0.6).epsilon(1e-12));
}

TEST_CASE("phase handles degenerate magnitudes") {
    double c = 0.0, s = 0.0;
    phase_from_magnitudes(0.0, 0.3, c, s);
    REQUIRE(c == 1.0);
    REQUIRE(s == 0.0);
    // infeasible triangle clamps the cosine
    phase_from_magnitudes(3.0, 0.5, c, s);
    REQUIRE(c == 1.0);
    REQUIRE(s == 0.0);
}

TEST_CASE("hard sign selection with tie to plus") {
    REQUIRE(select_sign(1.0, 0.5) == 1);
    REQUIRE(select_sign(0.5, 1.0) == -1);
    REQUIRE(select_sign(0.7, 0.7) == 1);
}

TEST_CASE("gumbel sign sampling") {
    std::mt19937_64 rng(99);
    REQUIRE_THROWS_AS(select_sign_gumbel(0.0, 0.0, 0.0, rng), std::invalid_argument);
    REQUIRE_THROWS_AS(select_sign_gumbel(0.0, 0.0, -1.0, rng), std::invalid_argument);

    // vanishing temperature reduces to the hard argmax
    for (int i = 0; i < 50; ++i) REQUIRE(select_sign_gumbel(2.0, -2.0, 1e-9, rng) == 1);

    // tied logits at tau 1: both signs occur
    int plus = 0;
    for (int i = 0; i < 2000; ++i)
        if (select_sign_gumbel(0.0, 0.0, 1.0, rng) == 1) ++plus;
    REQUIRE(plus > 600);
    REQUIRE(plus < 1400);
}

TEST_CASE("assembled pair always sums to one") {
    std::mt19937_64 rng(123);
    std::uniform_real_distribution<double> z(-8.0, 8.0), braw(-6.0, 6.0);
    for (int i = 0; i < 20000; ++i) {
        PhmHeads heads;
        heads.z_k = z(rng);
        heads.z_not_k = z(rng);
        heads.beta_raw = braw(rng);
        const int sign = (i & 1) ? 1 : -1;
        const PhmPair pair = assemble_pair(heads, sign);
        const std::complex<double> sum = pair.mask_k + pair.mask_not_k;
        REQUIRE(std::abs(sum - std::complex<double>(1.0, 0.0)) < 1e-12);
        // the chosen sign goes to mask_k's imaginary part
        if (std::abs(pair.mask_k.imag()) > 0.0)
            REQUIRE((pair.mask_k.imag() > 0.0 ? 1 : -1) == sign);
    }
    REQUIRE_THROWS_AS(assemble_pair(PhmHeads{}, 0), std::invalid_argument);
}

TEST_CASE("separate frame pins the head order and closes the quadrilateral") {
    const int B = 8;
    std::vector<std::complex<double>> X(B);
    for (int f = 0; f < B; ++f) X[f] = {0.3 * f - 1.0, 0.1 * f};

    // direct pair saturated toward sigma=1 with beta clipped to 1: M_d = 1.
    // noise pair toward sigma=0: M_n = 0. Residual reverb must be 0.
    std::vector<float> heads(B * 10, 0.0f);
    for (int f = 0; f < B; ++f) {
        float* h = &heads[f * 10];
        h[0] = 40.0f;   // z_d
        h[1] = -40.0f;  // z_~d
        h[2] = 5.0f;    // beta_raw_d (clipped by the triangle bound)
        h[3] = 1.0f;    // sign_d0
        h[4] = 0.0f;    // sign_d1
        h[5] = -40.0f;  // z_n
        h[6] = 40.0f;   // z_~n
        h[7] = 5.0f;    // beta_raw_n
        h[8] = 0.0f;    // sign_n0
        h[9] = 1.0f;    // sign_n1
    }
    std::vector<std::complex<double>> yd(B), yr(B), yn(B);
    SeparationOptions opts;
    separate_frame(heads.data(), X.data(), B, opts, nullptr, yd.data(), yr.data(), yn.data());
    for (int f = 0; f < B; ++f) {
        REQUIRE(std::abs(yd[f] - X[f]) < 1e-9);
        REQUIRE(std::abs(yn[f]) < 1e-9);
        REQUIRE(std::abs(yr[f]) < 1e-9);
    }
}

TEST_CASE("separate frame conserves the mixture over random heads") {
    const int B = 64;
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-4.0, 4.0);
    std::vector<std::complex<double>> X(B);
    for (auto& v : X) v = {u(rng), u(rng)};
    std::vector<float> heads(B * 10);
    for (float& h : heads) h = static_cast<float>(u(rng));

    std::vector<std::complex<double>> yd(B), yr(B), yn(B);
    SeparationOptions opts;
    separate_frame(heads.data(), X.data(), B, opts, nullptr, yd.data(), yr.data(), yn.data());
    for (int f = 0; f < B; ++f) {
        REQUIRE(std::abs(yd[f] + yr[f] + yn[f] - X[f]) < 1e-12);
        REQUIRE(std::isfinite(yd[f].real()));
        REQUIRE(std::isfinite(yn[f].imag()));
    }

    // gumbel mode needs an rng
    opts.sign_mode = SignMode::gumbel;
    REQUIRE_THROWS_AS(
        separate_frame(heads.data(), X.data(), B, opts, nullptr, yd.data(), yr.data(), yn.data()),
        std::invalid_argument);
    std::mt19937_64 g(1);
    separate_frame(heads.data(), X.data(), B, opts, &g, yd.data(), yr.data(), yn.data());
    for (int f = 0; f < B; ++f) REQUIRE(std::abs(yd[f] + yr[f] + yn[f] - X[f]) < 1e-12);
}
