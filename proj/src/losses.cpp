#include "trunet/losses.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>

#include "trunet/dsp.hpp"

namespace trunet {

namespace {

double dot(const double* a, const double* b, size_t n) {
    double s = 0.0;
    for (size_t i = 0; i < n; ++i) s += a[i] * b[i];
    return s;
}

void check_pair(const std::vector<double>& y, const std::vector<double>& yhat) {
    if (y.empty()) throw std::invalid_argument("loss: empty input");
    if (y.size() != yhat.size()) throw std::invalid_argument("loss: length mismatch");
}

// magnitude^c spectrogram, bins 0..size/2 inclusive
std::vector<double> compressed_mag_spec(const std::vector<double>& x, int size, int hop,
                                        double c, int& frames_out) {
    const int n = static_cast<int>(x.size());
    frames_out = n >= size ? (n - size) / hop + 1 : 0;
    if (frames_out <= 0) return {};
    const int bins = size / 2 + 1;
    const std::vector<double> win = hann_periodic(size);
    Fft fft(size);
    std::vector<std::complex<double>> buf(size);
    std::vector<double> out(static_cast<size_t>(frames_out) * bins);
    for (int t = 0; t < frames_out; ++t) {
        const double* seg = x.data() + static_cast<size_t>(t) * hop;
        for (int i = 0; i < size; ++i) buf[i] = {seg[i] * win[i], 0.0};
        fft.forward(buf.data());
        double* dst = out.data() + static_cast<size_t>(t) * bins;
        for (int k = 0; k < bins; ++k) dst[k] = std::pow(std::abs(buf[k]), c);
    }
    return out;
}

}  // namespace

double cosine_loss(const double* y, const double* yhat, size_t n) {
    const double ny = std::sqrt(dot(y, y, n));
    const double nyh = std::sqrt(dot(yhat, yhat, n));
    if (ny < 1e-12 || nyh < 1e-12) return 0.0;
    return -dot(y, yhat, n) / (ny * nyh);
}

double multiscale_wav_loss(const std::vector<double>& y, const std::vector<double>& yhat,
                           const LossConfig& cfg) {
    check_pair(y, yhat);
    double total = 0.0;
    for (int g : cfg.wav_scales) {
        if (g <= 0) throw std::invalid_argument("loss: bad segment length");
        const size_t m = y.size() / static_cast<size_t>(g);
        if (m == 0) continue;
        double acc = 0.0;
        for (size_t i = 0; i < m; ++i)
            acc += cosine_loss(y.data() + i * g, yhat.data() + i * g, g);
        total += acc / static_cast<double>(m);
    }
    return total;
}

std::vector<double> wav_loss_gradient(const std::vector<double>& y,
                                      const std::vector<double>& yhat, const LossConfig& cfg) {
    check_pair(y, yhat);
    std::vector<double> grad(yhat.size(), 0.0);
    for (int g : cfg.wav_scales) {
        if (g <= 0) throw std::invalid_argument("loss: bad segment length");
        const size_t m = y.size() / static_cast<size_t>(g);
        if (m == 0) continue;
        const double inv_m = 1.0 / static_cast<double>(m);
        for (size_t i = 0; i < m; ++i) {
            const double* ys = y.data() + i * g;
            const double* yh = yhat.data() + i * g;
            const double ny = std::sqrt(dot(ys, ys, g));
            const double nyh = std::sqrt(dot(yh, yh, g));
            if (ny < 1e-12 || nyh < 1e-12) continue;
            const double d = dot(ys, yh, g);
            const double a = 1.0 / (ny * nyh);
            const double b = d / (ny * nyh * nyh * nyh);
            double* gs = grad.data() + i * g;
            for (int j = 0; j < g; ++j) gs[j] += -(ys[j] * a - b * yh[j]) * inv_m;
        }
    }
    return grad;
}

double multiscale_spec_loss(const std::vector<double>& y, const std::vector<double>& yhat,
                            const LossConfig& cfg) {
    check_pair(y, yhat);
    double total = 0.0;
    for (int size : cfg.spec_sizes) {
        if (size <= 0 || (size & (size - 1)) != 0)
            throw std::invalid_argument("loss: FFT size must be a power of two");
        const int hop = size / 4;
        int ta = 0, tb = 0;
        const std::vector<double> ma = compressed_mag_spec(y, size, hop, cfg.spec_compress, ta);
        const std::vector<double> mb =
            compressed_mag_spec(yhat, size, hop, cfg.spec_compress, tb);
        if (ta == 0) continue;
        double acc = 0.0;
        for (size_t i = 0; i < ma.size(); ++i) {
            const double d = ma[i] - mb[i];
            acc += d * d;
        }
        total += acc;
    }
    return total;
}

double final_loss(const SourceTriple& target, const SourceTriple& estimate,
                  const LossConfig& cfg) {
    double total = 0.0;
    const std::vector<double>* t[3] = {&target.direct, &target.reverb, &target.noise};
    const std::vector<double>* e[3] = {&estimate.direct, &estimate.reverb, &estimate.noise};
    for (int k = 0; k < 3; ++k)
        total += multiscale_wav_loss(*t[k], *e[k], cfg) + multiscale_spec_loss(*t[k], *e[k], cfg);
    return total;
}

double si_sdr(const std::vector<double>& reference, const std::vector<double>& estimate) {
    if (reference.size() != estimate.size())
        throw std::invalid_argument("si_sdr: length mismatch");
    if (reference.empty()) throw std::invalid_argument("si_sdr: empty input");
    const size_t n = reference.size();
    const double ref_e = dot(reference.data(), reference.data(), n);
    if (ref_e < 1e-20) throw std::invalid_argument("si_sdr: zero-energy reference");
    const double alpha = dot(estimate.data(), reference.data(), n) / ref_e;
    double sig_e = 0.0, res_e = 0.0;
    for (size_t i = 0; i < n; ++i) {
        const double s = alpha * reference[i];
        const double r = estimate[i] - s;
        sig_e += s * s;
        res_e += r * r;
    }
    if (res_e < 1e-20) return 100.0;
    if (sig_e < 1e-20) return -100.0;
    return std::clamp(10.0 * std::log10(sig_e / res_e), -100.0, 100.0);
}

std::vector<double> mix_at_snr(const std::vector<double>& clean,
                               const std::vector<double>& noise, double snr_db,
                               double* gain_out) {
    if (clean.size() != noise.size()) throw std::invalid_argument("mix_at_snr: length mismatch");
    if (clean.empty()) throw std::invalid_argument("mix_at_snr: empty input");
    const double ce = dot(clean.data(), clean.data(), clean.size());
    const double ne = dot(noise.data(), noise.data(), noise.size());
    if (ce < 1e-20) throw std::invalid_argument("mix_at_snr: zero-energy clean signal");
    if (ne < 1e-20) throw std::invalid_argument("mix_at_snr: zero-energy noise");
    const double g = std::sqrt(ce / ne * std::pow(10.0, -snr_db / 10.0));
    if (gain_out) *gain_out = g;
    std::vector<double> out(clean.size());
    for (size_t i = 0; i < clean.size(); ++i) out[i] = clean[i] + g * noise[i];
    return out;
}

}  // namespace trunet
