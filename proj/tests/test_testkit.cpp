#include "trunet/testkit.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

#include "doctest.h"

using namespace trunet;

namespace {

double energy(const std::vector<double>& x) {
    double e = 0.0;
    for (double v : x) e += v * v;
    return e;
}

// direct O(n*m) convolution as the oracle for the fft path
std::vector<double> conv_direct(const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<double> out(a.size() + b.size() - 1, 0.0);
    for (size_t i = 0; i < a.size(); ++i)
        for (size_t j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
    return out;
}

}  // namespace

TEST_CASE("impulse response shape") {
    ReverbSpec spec;
    spec.delay_s = 0.005;
    spec.decay_tau_s = 0.06;
    spec.density = 0.3;
    spec.seed = 9;
    const auto ir = reverb_impulse_response(spec);

    const int delay = static_cast<int>(std::llround(spec.delay_s * spec.sample_rate));  // 80
    const size_t tail = static_cast<size_t>(
        std::ceil(6.0 * spec.decay_tau_s * spec.sample_rate));
    REQUIRE(ir.size() == static_cast<size_t>(delay) + tail);

    for (int i = 0; i < delay; ++i) REQUIRE(ir[i] == 0.0);

    // every tap obeys the decay envelope measured from the delay tap
    const double tau_samp = spec.decay_tau_s * spec.sample_rate;
    size_t nonzero = 0;
    for (size_t i = delay; i < ir.size(); ++i) {
        const double bound = std::exp(-(static_cast<double>(i) - delay) / tau_samp);
        REQUIRE(std::abs(ir[i]) <= bound + 1e-15);
        if (ir[i] != 0.0) ++nonzero;
    }
    // Bernoulli(0.3) over ~5760 taps: observed rate within a loose band
    const double rate = static_cast<double>(nonzero) / static_cast<double>(tail);
    REQUIRE(rate > 0.25);
    REQUIRE(rate < 0.35);

    REQUIRE(reverb_impulse_response(spec) == ir);
    spec.seed = 10;
    REQUIRE(reverb_impulse_response(spec) != ir);
}

TEST_CASE("impulse response validates its spec") {
    ReverbSpec spec;
    spec.density = 1.5;
    REQUIRE_THROWS_AS(reverb_impulse_response(spec), std::invalid_argument);
    spec = ReverbSpec{};
    spec.decay_tau_s = 0.0;
    REQUIRE_THROWS_AS(reverb_impulse_response(spec), std::invalid_argument);
    spec = ReverbSpec{};
    spec.delay_s = -0.001;
    REQUIRE_THROWS_AS(reverb_impulse_response(spec), std::invalid_argument);
}

TEST_CASE("shorter decay means less tail energy") {
    ReverbSpec slow;
    slow.decay_tau_s = 0.09;
    ReverbSpec fast = slow;
    fast.decay_tau_s = 0.03;
    REQUIRE(energy(reverb_impulse_response(fast)) < energy(reverb_impulse_response(slow)));
}

TEST_CASE("synth_reverb is a full linear convolution") {
    ReverbSpec spec;
    spec.decay_tau_s = 0.02;  // keep the oracle cheap
    spec.density = 0.5;
    const auto ir = reverb_impulse_response(spec);

    std::vector<double> dry(400);
    for (size_t i = 0; i < dry.size(); ++i) dry[i] = std::sin(0.1 * static_cast<double>(i));

    const auto wet = synth_reverb(dry, spec);
    const auto ref = conv_direct(dry, ir);
    REQUIRE(wet.size() == dry.size() + ir.size() - 1);
    for (size_t i = 0; i < wet.size(); ++i)
        REQUIRE(wet[i] == doctest::Approx(ref[i]).epsilon(1e-9));

    // linearity in the dry signal
    std::vector<double> dry2(dry.size());
    for (size_t i = 0; i < dry.size(); ++i) dry2[i] = 2.0 * dry[i];
    const auto wet2 = synth_reverb(dry2, spec);
    for (size_t i = 0; i < wet.size(); ++i)
        REQUIRE(wet2[i] == doctest::Approx(2.0 * wet[i]).epsilon(1e-9));

    REQUIRE_THROWS_AS(synth_reverb({}, spec), std::invalid_argument);
}

TEST_CASE("scenes hit the requested ratios exactly") {
    const size_t len = 16000;
    const SyntheticScene scene = make_scene(len, 3.0, 10.0, 77);

    REQUIRE(scene.direct.size() == len);
    REQUIRE(scene.reverb.size() == len);
    REQUIRE(scene.noise.size() == len);
    REQUIRE(scene.mix.size() == len);

    // the mix is the literal sum, same order as construction
    for (size_t i = 0; i < len; ++i)
        REQUIRE(scene.mix[i] == scene.direct[i] + scene.reverb[i] + scene.noise[i]);

    const double drr = 10.0 * std::log10(energy(scene.direct) / energy(scene.reverb));
    REQUIRE(drr == doctest::Approx(3.0).epsilon(1e-6));

    std::vector<double> wet(len);
    for (size_t i = 0; i < len; ++i) wet[i] = scene.direct[i] + scene.reverb[i];
    const double snr = 10.0 * std::log10(energy(wet) / energy(scene.noise));
    REQUIRE(snr == doctest::Approx(10.0).epsilon(1e-6));
}

TEST_CASE("scenes are deterministic per seed") {
    const SyntheticScene a = make_scene(4000, 0.0, 5.0, 3);
    const SyntheticScene b = make_scene(4000, 0.0, 5.0, 3);
    const SyntheticScene c = make_scene(4000, 0.0, 5.0, 4);
    REQUIRE(a.mix == b.mix);
    REQUIRE(a.mix != c.mix);
    REQUIRE_THROWS_AS(make_scene(0, 0.0, 5.0, 3), std::invalid_argument);
}

TEST_CASE("dry signal has speech-scale level") {
    const SyntheticScene scene = make_scene(16000, 3.0, 10.0, 21);
    const double rms = std::sqrt(energy(scene.direct) / static_cast<double>(scene.direct.size()));
    REQUIRE(rms == doctest::Approx(0.1).epsilon(1e-6));
}
