#include "trunet/testkit.hpp"

#include <cmath>
#include <complex>
#include <random>
#include <stdexcept>

#include "trunet/dsp.hpp"

namespace trunet {

namespace {

constexpr double kPi = 3.14159265358979323846;

size_t next_pow2(size_t n) {
    size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

std::vector<double> fft_convolve(const std::vector<double>& a, const std::vector<double>& b) {
    const size_t out_len = a.size() + b.size() - 1;
    const size_t n = next_pow2(out_len);
    Fft fft(static_cast<int>(n));
    std::vector<std::complex<double>> fa(n), fb(n);
    for (size_t i = 0; i < a.size(); ++i) fa[i] = a[i];
    for (size_t i = 0; i < b.size(); ++i) fb[i] = b[i];
    fft.forward(fa.data());
    fft.forward(fb.data());
    for (size_t i = 0; i < n; ++i) fa[i] *= fb[i];
    fft.inverse(fa.data());
    std::vector<double> out(out_len);
    for (size_t i = 0; i < out_len; ++i) out[i] = fa[i].real();
    return out;
}

double energy(const std::vector<double>& x) {
    double e = 0.0;
    for (double v : x) e += v * v;
    return e;
}

}  // namespace

std::vector<double> reverb_impulse_response(const ReverbSpec& spec) {
    if (spec.sample_rate <= 0) throw std::invalid_argument("reverb: bad sample rate");
    if (spec.delay_s < 0.0) throw std::invalid_argument("reverb: negative delay");
    if (spec.decay_tau_s <= 0.0) throw std::invalid_argument("reverb: decay tau must be positive");
    if (spec.density < 0.0 || spec.density > 1.0)
        throw std::invalid_argument("reverb: density outside [0, 1]");

    const double fs = spec.sample_rate;
    const size_t delay = static_cast<size_t>(std::llround(spec.delay_s * fs));
    const double tau_samples = spec.decay_tau_s * fs;
    const size_t tail = std::max<size_t>(1, static_cast<size_t>(std::ceil(6.0 * tau_samples)));

    std::vector<double> ir(delay + tail, 0.0);
    std::mt19937_64 rng(spec.seed);
    std::bernoulli_distribution hit(spec.density);
    std::uniform_int_distribution<int> coin(0, 1);
    for (size_t k = 0; k < tail; ++k) {
        if (!hit(rng)) continue;
        const double sign = coin(rng) ? 1.0 : -1.0;
        ir[delay + k] = sign * std::exp(-static_cast<double>(k) / tau_samples);
    }
    return ir;
}

std::vector<double> synth_reverb(const std::vector<double>& dry, const ReverbSpec& spec) {
    if (dry.empty()) throw std::invalid_argument("synth_reverb: empty input");
    return fft_convolve(dry, reverb_impulse_response(spec));
}

SyntheticScene make_scene(size_t len, double drr_db, double snr_db, uint64_t seed) {
    if (len == 0) throw std::invalid_argument("make_scene: zero length");
    const double fs = 16000.0;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    // harmonic dry source with syllabic amplitude modulation and a slowly
    // wandering fundamental
    const double f0_base = 100.0 + 80.0 * unif(rng);
    const double f0_swing = 10.0 + 20.0 * unif(rng);
    const double mod_rate = 2.0 + 2.0 * unif(rng);
    const int harmonics = 8;
    std::vector<double> phase0(harmonics);
    for (double& p : phase0) p = 2.0 * kPi * unif(rng);

    SyntheticScene scene;
    scene.direct.resize(len);
    double phi = 0.0;
    for (size_t i = 0; i < len; ++i) {
        const double t = static_cast<double>(i) / fs;
        const double f0 = f0_base + f0_swing * std::sin(2.0 * kPi * 0.4 * t);
        phi += 2.0 * kPi * f0 / fs;
        const double env = 0.5 * (1.0 - std::cos(2.0 * kPi * mod_rate * t));
        double v = 0.0;
        for (int h = 1; h <= harmonics; ++h)
            v += std::sin(h * phi + phase0[h - 1]) / h;
        scene.direct[i] = env * v;
    }
    const double de = energy(scene.direct);
    if (de < 1e-20) throw std::logic_error("make_scene: degenerate dry signal");
    const double norm = 0.1 * std::sqrt(static_cast<double>(len) / de);
    for (double& v : scene.direct) v *= norm;

    ReverbSpec rspec;
    rspec.delay_s = 0.004;
    rspec.decay_tau_s = 0.05 + 0.05 * unif(rng);
    rspec.seed = seed ^ 0x9e3779b97f4a7c15ull;
    std::vector<double> rev = synth_reverb(scene.direct, rspec);
    rev.resize(len);
    const double re = energy(rev);
    if (re < 1e-20) throw std::logic_error("make_scene: degenerate reverb tail");
    const double gd = energy(scene.direct);
    const double gr = std::sqrt(gd / re) * std::pow(10.0, -drr_db / 20.0);
    scene.reverb = std::move(rev);
    for (double& v : scene.reverb) v *= gr;

    std::vector<double> wet(len);
    for (size_t i = 0; i < len; ++i) wet[i] = scene.direct[i] + scene.reverb[i];
    std::normal_distribution<double> gauss(0.0, 1.0);
    scene.noise.resize(len);
    for (double& v : scene.noise) v = gauss(rng);
    const double ne = energy(scene.noise);
    const double gn = std::sqrt(energy(wet) / ne) * std::pow(10.0, -snr_db / 20.0);
    for (double& v : scene.noise) v *= gn;

    scene.mix.resize(len);
    for (size_t i = 0; i < len; ++i)
        scene.mix[i] = scene.direct[i] + scene.reverb[i] + scene.noise[i];
    return scene;
}

}  // namespace trunet
