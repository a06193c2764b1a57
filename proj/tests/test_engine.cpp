#include "trunet/engine.hpp"

#include <cmath>
#include <memory>
#include <random>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "trunet/testkit.hpp"

using namespace trunet;

namespace {

std::shared_ptr<const Network> make_net(uint64_t seed, bool with_fgru = true) {
    TrunetConfig cfg;
    cfg.with_fgru = with_fgru;
    return std::make_shared<const Network>(cfg, random_init(cfg, seed));
}

std::vector<double> random_signal(size_t n, uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(-0.5, 0.5);
    std::vector<double> x(n);
    for (double& v : x) v = dist(rng);
    return x;
}

}  // namespace

TEST_CASE("engine latency and priming") {
    const Engine engine(make_net(1));
    REQUIRE(engine.latency_samples() == 384);
    REQUIRE(engine.priming_calls() == 3);

    StreamState st = engine.new_stream();
    std::vector<double> in(128, 0.25), d(128), r(128), n(128);
    for (int call = 0; call < 3; ++call) {
        engine.process_frame(st, in.data(), d.data(), r.data(), n.data());
        for (int i = 0; i < 128; ++i) {
            REQUIRE(d[i] == 0.0);
            REQUIRE(r[i] == 0.0);
            REQUIRE(n[i] == 0.0);
        }
    }
    engine.process_frame(st, in.data(), d.data(), r.data(), n.data());
    double energy = 0.0;
    for (int i = 0; i < 128; ++i) energy += d[i] * d[i] + r[i] * r[i] + n[i] * n[i];
    REQUIRE(energy > 0.0);
}

TEST_CASE("streaming equals offline where both are fully defined") {
    const auto net = make_net(2);
    const Engine engine(net);
    const StftConfig cfg = engine.stft_config();

    const auto x = random_signal(8000, 3);
    const SourceTriple off = engine.enhance_offline(x);
    const SourceTriple str = engine.enhance_streaming(x);
    REQUIRE(str.direct.size() == x.size());

    // the offline tail past the last full frame start has partial overlap;
    // compare the region covered identically by both paths
    const int T = (static_cast<int>(x.size()) - cfg.window_size) / cfg.hop_size + 1;
    const size_t full = static_cast<size_t>(T) * cfg.hop_size;
    for (size_t i = 0; i < full; ++i) {
        REQUIRE(str.direct[i] == doctest::Approx(off.direct[i]).epsilon(1e-9));
        REQUIRE(str.reverb[i] == doctest::Approx(off.reverb[i]).epsilon(1e-9));
        REQUIRE(str.noise[i] == doctest::Approx(off.noise[i]).epsilon(1e-9));
    }
}

TEST_CASE("streaming output never depends on future input") {
    const auto net = make_net(4);
    const Engine engine(net);
    const int H = 128, W = 512;

    const auto x = random_signal(4096, 5);
    for (uint64_t trial = 0; trial < 3; ++trial) {
        std::mt19937_64 rng(100 + trial);
        std::uniform_int_distribution<int> pick(W + 1, 4000);
        const int cut = pick(rng);
        auto x2 = x;
        std::uniform_real_distribution<double> bump(0.5, 1.0);
        for (size_t i = cut; i < x2.size(); ++i) x2[i] += bump(rng);

        const SourceTriple a = engine.enhance_streaming(x);
        const SourceTriple b = engine.enhance_streaming(x2);

        // all output chunks whose analysis window ends at or before the cut
        // must match bit for bit
        const int safe_frames = (cut - W) / H + 1;
        const size_t safe = static_cast<size_t>(safe_frames) * H;
        for (size_t i = 0; i < safe; ++i) {
            REQUIRE(a.direct[i] == b.direct[i]);
            REQUIRE(a.reverb[i] == b.reverb[i]);
            REQUIRE(a.noise[i] == b.noise[i]);
        }
        // and the perturbation must show up somewhere later
        double diff = 0.0;
        for (size_t i = safe; i < x.size(); ++i) diff += std::abs(a.direct[i] - b.direct[i]);
        REQUIRE(diff > 0.0);
    }
}

TEST_CASE("streaming state buffers never grow") {
    const Engine engine(make_net(6));
    StreamState st = engine.new_stream();
    const size_t cap_analysis = st.analysis.capacity();
    const size_t cap_ola = st.ola[0].capacity();
    const size_t cap_norm = st.ola_norm.capacity();

    std::vector<double> in(128), d(128), r(128), n(128);
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    for (int call = 0; call < 40; ++call) {
        for (double& v : in) v = dist(rng);
        engine.process_frame(st, in.data(), d.data(), r.data(), n.data());
    }
    REQUIRE(st.analysis.capacity() == cap_analysis);
    REQUIRE(st.ola[0].capacity() == cap_ola);
    REQUIRE(st.ola_norm.capacity() == cap_norm);
    REQUIRE(st.calls == 40);
}

TEST_CASE("gumbel sign mode is reproducible per seed") {
    const auto net = make_net(8);
    const Engine engine(net);
    const auto x = random_signal(3000, 9);

    EngineOptions g1;
    g1.sign_mode = SignMode::gumbel;
    g1.tau = 4.0;
    g1.seed = 42;
    const SourceTriple a = engine.enhance_streaming(x, g1);
    const SourceTriple b = engine.enhance_streaming(x, g1);
    REQUIRE(a.direct == b.direct);

    EngineOptions g2 = g1;
    g2.seed = 43;
    const SourceTriple c = engine.enhance_streaming(x, g2);
    double diff = 0.0;
    for (size_t i = 0; i < x.size(); ++i) diff += std::abs(a.direct[i] - c.direct[i]);
    REQUIRE(diff > 0.0);
}

TEST_CASE("engine rejects mismatched configs") {
    REQUIRE_THROWS_AS(Engine(nullptr), std::invalid_argument);
    StftConfig odd;
    odd.window_size = 256;  // 128 bins, network wants 256
    REQUIRE_THROWS_AS(Engine(make_net(10), odd), std::invalid_argument);
}

TEST_CASE("remix hits the requested ratio and handles zero reverb") {
    const auto d = random_signal(5000, 11);
    const auto r = random_signal(5000, 12);
    const auto y = remix(d, r, 15.0);
    double de = 0.0, re = 0.0;
    for (size_t i = 0; i < y.size(); ++i) {
        de += d[i] * d[i];
        const double rv = y[i] - d[i];
        re += rv * rv;
    }
    REQUIRE(10.0 * std::log10(de / re) == doctest::Approx(15.0).epsilon(1e-9));

    const std::vector<double> zeros(5000, 0.0);
    REQUIRE(remix(d, zeros, 15.0) == d);
    REQUIRE_THROWS_AS(remix(d, random_signal(10, 13), 15.0), std::invalid_argument);
}

TEST_CASE("rtf benchmark reports sane numbers") {
    const Engine engine(make_net(14));
    const RtfReport r = benchmark_rtf(engine, 8);
    REQUIRE(r.frames_measured == 8);
    REQUIRE(r.mean_frame_ms > 0.0);
    REQUIRE(r.p95_frame_ms >= r.mean_frame_ms * 0.1);
    REQUIRE(r.rtf == doctest::Approx(r.mean_frame_ms / 8.0).epsilon(1e-12));
    REQUIRE_THROWS_AS(benchmark_rtf(engine, 0), std::invalid_argument);
}

TEST_CASE("ablated engine streams too") {
    const Engine engine(make_net(15, false));
    const auto x = random_signal(2000, 16);
    const SourceTriple out = engine.enhance_streaming(x);
    REQUIRE(out.direct.size() == x.size());
    for (double v : out.direct) REQUIRE(std::isfinite(v));
}

TEST_CASE("offline separation reconstructs the analyzed mix from the three parts") {
    const Engine engine(make_net(17));
    SyntheticScene scene = make_scene(6000, 3.0, 10.0, 18);
    const SourceTriple out = engine.enhance_offline(scene.mix);

    // masks close the per-bin sum, so the three resynthesized sources must
    // add back to the round trip of the mix (the analysis drops the Nyquist
    // bin, so the raw mix is not the reference)
    const StftConfig& cfg = engine.stft_config();
    const std::vector<double> ref = istft(stft(scene.mix, cfg), cfg);
    REQUIRE(out.direct.size() == ref.size());
    double num = 0.0, den = 0.0;
    for (size_t i = 0; i < ref.size(); ++i) {
        const double sum = out.direct[i] + out.reverb[i] + out.noise[i];
        num += (sum - ref[i]) * (sum - ref[i]);
        den += ref[i] * ref[i];
    }
    REQUIRE(std::sqrt(num / den) < 1e-9);
}
