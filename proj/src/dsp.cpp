#include "trunet/dsp.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace trunet {

namespace {

constexpr double kPi = 3.14159265358979323846;

bool is_pow2(int n) { return n > 0 && (n & (n - 1)) == 0; }

void check_cfg(const StftConfig& cfg) {
    if (cfg.window_size <= 0 || cfg.hop_size <= 0)
        throw std::invalid_argument("stft: window and hop must be positive");
    if (!is_pow2(cfg.window_size))
        throw std::invalid_argument("stft: window size must be a power of two");
    if (cfg.hop_size > cfg.window_size)
        throw std::invalid_argument("stft: hop larger than window");
}

}  // namespace

Fft::Fft(int n) : n_(n) {
    if (!is_pow2(n)) throw std::invalid_argument("Fft: size must be a power of two");
    rev_.resize(n);
    int bits = 0;
    while ((1 << bits) < n) ++bits;
    for (int i = 0; i < n; ++i) {
        int r = 0;
        for (int b = 0; b < bits; ++b)
            if (i & (1 << b)) r |= 1 << (bits - 1 - b);
        rev_[i] = r;
    }
    tw_.resize(n / 2);
    for (int k = 0; k < n / 2; ++k) {
        double a = -2.0 * kPi * k / n;
        tw_[k] = {std::cos(a), std::sin(a)};
    }
}

void Fft::transform(std::complex<double>* buf, bool inv) const {
    for (int i = 0; i < n_; ++i) {
        int j = rev_[i];
        if (i < j) std::swap(buf[i], buf[j]);
    }
    for (int len = 2; len <= n_; len <<= 1) {
        int half = len / 2;
        int step = n_ / len;
        for (int base = 0; base < n_; base += len) {
            for (int k = 0; k < half; ++k) {
                std::complex<double> w = tw_[k * step];
                if (inv) w = std::conj(w);
                std::complex<double> u = buf[base + k];
                std::complex<double> v = buf[base + k + half] * w;
                buf[base + k] = u + v;
                buf[base + k + half] = u - v;
            }
        }
    }
}

void Fft::forward(std::complex<double>* buf) const { transform(buf, false); }

void Fft::inverse(std::complex<double>* buf) const {
    transform(buf, true);
    double inv_n = 1.0 / n_;
    for (int i = 0; i < n_; ++i) buf[i] *= inv_n;
}

std::vector<double> hann_periodic(int n) {
    if (n <= 0) throw std::invalid_argument("hann_periodic: size must be positive");
    std::vector<double> w(n);
    for (int i = 0; i < n; ++i) w[i] = 0.5 - 0.5 * std::cos(2.0 * kPi * i / n);
    return w;
}

ComplexSpectrogram stft(const std::vector<double>& x, const StftConfig& cfg) {
    check_cfg(cfg);
    const int W = cfg.window_size;
    const int H = cfg.hop_size;
    if (static_cast<int>(x.size()) < W)
        throw std::invalid_argument("stft: input shorter than one window (" +
                                    std::to_string(x.size()) + " < " + std::to_string(W) + ")");
    const int T = static_cast<int>((x.size() - W) / H) + 1;
    const int B = cfg.bins();

    ComplexSpectrogram out;
    out.frames = T;
    out.bins = B;
    out.data.resize(static_cast<size_t>(T) * B);

    const std::vector<double> win = hann_periodic(W);
    Fft fft(W);
    std::vector<std::complex<double>> buf(W);
    for (int t = 0; t < T; ++t) {
        const double* seg = x.data() + static_cast<size_t>(t) * H;
        for (int n = 0; n < W; ++n) buf[n] = {seg[n] * win[n], 0.0};
        fft.forward(buf.data());
        std::complex<double>* dst = out.frame(t);
        for (int k = 0; k < B; ++k) dst[k] = buf[k];
    }
    return out;
}

std::vector<double> istft(const ComplexSpectrogram& spec, const StftConfig& cfg) {
    check_cfg(cfg);
    const int W = cfg.window_size;
    const int H = cfg.hop_size;
    if (spec.bins != cfg.bins())
        throw std::invalid_argument("istft: spectrogram has " + std::to_string(spec.bins) +
                                    " bins, config expects " + std::to_string(cfg.bins()));
    if (spec.frames <= 0) throw std::invalid_argument("istft: empty spectrogram");

    const size_t out_len = static_cast<size_t>(spec.frames - 1) * H + W;
    std::vector<double> out(out_len, 0.0);
    std::vector<double> norm(out_len, 0.0);

    const std::vector<double> win = hann_periodic(W);
    Fft fft(W);
    std::vector<std::complex<double>> buf(W);
    for (int t = 0; t < spec.frames; ++t) {
        const std::complex<double>* src = spec.frame(t);
        buf[0] = src[0];
        for (int k = 1; k < spec.bins; ++k) {
            buf[k] = src[k];
            buf[W - k] = std::conj(src[k]);
        }
        buf[W / 2] = 0.0;  // Nyquist restored as zero
        fft.inverse(buf.data());
        double* dst = out.data() + static_cast<size_t>(t) * H;
        double* nrm = norm.data() + static_cast<size_t>(t) * H;
        for (int n = 0; n < W; ++n) {
            dst[n] += buf[n].real() * win[n];
            nrm[n] += win[n] * win[n];
        }
    }
    for (size_t n = 0; n < out_len; ++n) out[n] = norm[n] > 1e-12 ? out[n] / norm[n] : 0.0;
    return out;
}

void demodulated_phase(const std::complex<double>* frame, int bins, int frame_index,
                       const StftConfig& cfg, double* cos_out, double* sin_out) {
    if (frame_index < 0) throw std::invalid_argument("demodulated_phase: negative frame index");
    const long long W = cfg.window_size;
    const long long H = cfg.hop_size;
    // the carrier index f*H*t mod W stays exact in integers; t mod W bounds it
    const long long t = frame_index % W;
    for (int f = 0; f < bins; ++f) {
        const long long p = (static_cast<long long>(f) * H % W) * t % W;
        const double phi = 2.0 * kPi * static_cast<double>(p) / static_cast<double>(W);
        const double c = std::cos(phi), s = std::sin(phi);
        const double re = frame[f].real(), im = frame[f].imag();
        const double mag = std::hypot(re, im);
        if (mag == 0.0) {
            cos_out[f] = 1.0;
            sin_out[f] = 0.0;
        } else {
            // X * e^{-i phi} / |X|
            cos_out[f] = (re * c + im * s) / mag;
            sin_out[f] = (im * c - re * s) / mag;
        }
    }
}

std::vector<double> power_compress(const std::vector<double>& mags, double exponent) {
    if (exponent <= 0.0) throw std::invalid_argument("power_compress: exponent must be positive");
    std::vector<double> out(mags.size());
    for (size_t i = 0; i < mags.size(); ++i) {
        if (mags[i] < 0.0) throw std::invalid_argument("power_compress: negative magnitude");
        out[i] = std::pow(mags[i], exponent);
    }
    return out;
}

}  // namespace trunet
