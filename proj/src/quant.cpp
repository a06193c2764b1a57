#include "trunet/quant.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_map>

#include "trunet/dsp.hpp"
#include "trunet/features.hpp"
#include "trunet/kernels.hpp"

namespace trunet {

namespace {

constexpr int kMaxAccTerms = 65536;  // keeps |acc| < 2^31 at 127*127 per term

inline float logistic_f(float x) {
    if (x >= 0.0f) return 1.0f / (1.0f + std::exp(-x));
    const float e = std::exp(x);
    return e / (1.0f + e);
}

double max_abs(const float* x, size_t n) {
    double m = 0.0;
    for (size_t i = 0; i < n; ++i) m = std::max(m, std::abs(static_cast<double>(x[i])));
    return m;
}

std::vector<int8_t> quantize_activation(const float* x, size_t n, double scale) {
    std::vector<int8_t> q(n);
    for (size_t i = 0; i < n; ++i) q[i] = quantize_value(x[i], scale);
    return q;
}

void check_terms(int terms, const char* name) {
    if (terms > kMaxAccTerms)
        throw std::logic_error(std::string(name) + ": accumulator budget exceeded");
}

}  // namespace

double quant_scale_for(double max_abs_value) {
    return std::max(max_abs_value / 127.0, 1e-8);
}

int8_t quantize_value(double x, double scale) {
    const double q = std::round(x / scale);
    return static_cast<int8_t>(std::clamp(q, -127.0, 127.0));
}

QuantizedTensor quantize_tensor(const float* x, size_t n) {
    QuantizedTensor t;
    t.scale = quant_scale_for(max_abs(x, n));
    t.q.resize(n);
    for (size_t i = 0; i < n; ++i) t.q[i] = quantize_value(x[i], t.scale);
    return t;
}

std::vector<float> dequantize_tensor(const QuantizedTensor& t) {
    std::vector<float> out(t.q.size());
    for (size_t i = 0; i < t.q.size(); ++i) out[i] = static_cast<float>(t.q[i] * t.scale);
    return out;
}

void CalibrationStats::observe(const float* x, size_t n) {
    if (n == 0) return;
    double lo = x[0], hi = x[0];
    for (size_t i = 1; i < n; ++i) {
        lo = std::min(lo, static_cast<double>(x[i]));
        hi = std::max(hi, static_cast<double>(x[i]));
    }
    min_sum += lo;
    max_sum += hi;
    ++observations;
}

double CalibrationStats::min_avg() const {
    return observations ? min_sum / observations : 0.0;
}

double CalibrationStats::max_avg() const {
    return observations ? max_sum / observations : 0.0;
}

double CalibrationStats::scale() const {
    return quant_scale_for(std::max(std::abs(min_avg()), std::abs(max_avg())));
}

std::vector<float> qconv1d_standard(const float* in, int F, int Cin, const int8_t* qw,
                                    double w_scale, double in_scale, int kernel, int Cout,
                                    int stride) {
    check_terms(kernel * Cin, "qconv1d_standard");
    const std::vector<int8_t> qin = quantize_activation(in, static_cast<size_t>(F) * Cin,
                                                        in_scale);
    const int Fo = conv_out_length(F, stride);
    const int lo = same_pad_low(F, kernel, stride);
    const double deq = in_scale * w_scale;
    std::vector<float> out(static_cast<size_t>(Fo) * Cout);
    std::vector<int32_t> acc(Cout);
    for (int fo = 0; fo < Fo; ++fo) {
        std::fill(acc.begin(), acc.end(), 0);
        for (int k = 0; k < kernel; ++k) {
            const int fi = fo * stride - lo + k;
            if (fi < 0 || fi >= F) continue;
            const int8_t* a = qin.data() + static_cast<size_t>(fi) * Cin;
            const int8_t* wk = qw + static_cast<size_t>(k) * Cin * Cout;
            for (int ci = 0; ci < Cin; ++ci) {
                const int32_t av = a[ci];
                const int8_t* wr = wk + static_cast<size_t>(ci) * Cout;
                for (int co = 0; co < Cout; ++co) acc[co] += av * wr[co];
            }
        }
        float* o = out.data() + static_cast<size_t>(fo) * Cout;
        for (int co = 0; co < Cout; ++co) o[co] = static_cast<float>(acc[co] * deq);
    }
    return out;
}

std::vector<float> qconv1d_pointwise(const float* in, int F, int Cin, const int8_t* qw,
                                     double w_scale, double in_scale, int Cout) {
    check_terms(Cin, "qconv1d_pointwise");
    const std::vector<int8_t> qin = quantize_activation(in, static_cast<size_t>(F) * Cin,
                                                        in_scale);
    const double deq = in_scale * w_scale;
    std::vector<float> out(static_cast<size_t>(F) * Cout);
    std::vector<int32_t> acc(Cout);
    for (int f = 0; f < F; ++f) {
        std::fill(acc.begin(), acc.end(), 0);
        const int8_t* a = qin.data() + static_cast<size_t>(f) * Cin;
        for (int ci = 0; ci < Cin; ++ci) {
            const int32_t av = a[ci];
            if (av == 0) continue;
            const int8_t* wr = qw + static_cast<size_t>(ci) * Cout;
            for (int co = 0; co < Cout; ++co) acc[co] += av * wr[co];
        }
        float* o = out.data() + static_cast<size_t>(f) * Cout;
        for (int co = 0; co < Cout; ++co) o[co] = static_cast<float>(acc[co] * deq);
    }
    return out;
}

std::vector<float> qconv1d_depthwise(const float* in, int F, int C, const int8_t* qw,
                                     double w_scale, double in_scale, int kernel, int stride) {
    check_terms(kernel, "qconv1d_depthwise");
    const std::vector<int8_t> qin = quantize_activation(in, static_cast<size_t>(F) * C, in_scale);
    const int Fo = conv_out_length(F, stride);
    const int lo = same_pad_low(F, kernel, stride);
    const double deq = in_scale * w_scale;
    std::vector<float> out(static_cast<size_t>(Fo) * C);
    std::vector<int32_t> acc(C);
    for (int fo = 0; fo < Fo; ++fo) {
        std::fill(acc.begin(), acc.end(), 0);
        for (int k = 0; k < kernel; ++k) {
            const int fi = fo * stride - lo + k;
            if (fi < 0 || fi >= F) continue;
            const int8_t* a = qin.data() + static_cast<size_t>(fi) * C;
            const int8_t* wk = qw + static_cast<size_t>(k) * C;
            for (int c = 0; c < C; ++c) acc[c] += static_cast<int32_t>(a[c]) * wk[c];
        }
        float* o = out.data() + static_cast<size_t>(fo) * C;
        for (int c = 0; c < C; ++c) o[c] = static_cast<float>(acc[c] * deq);
    }
    return out;
}

std::vector<float> qtransposed_conv1d(const float* in, int F, int Cin, const int8_t* qw,
                                      double w_scale, double in_scale, int kernel, int Cout,
                                      int stride) {
    if (kernel < stride)
        throw std::invalid_argument("qtransposed_conv1d: kernel smaller than stride leaves gaps");
    check_terms(kernel * Cin, "qtransposed_conv1d");
    const std::vector<int8_t> qin = quantize_activation(in, static_cast<size_t>(F) * Cin,
                                                        in_scale);
    const int full = (F - 1) * stride + kernel;
    const int Fo = stride * F;
    const int trim_lo = (kernel - stride) / 2;
    const double deq = in_scale * w_scale;
    std::vector<int32_t> buf(static_cast<size_t>(full) * Cout, 0);
    for (int fi = 0; fi < F; ++fi) {
        const int8_t* a = qin.data() + static_cast<size_t>(fi) * Cin;
        for (int k = 0; k < kernel; ++k) {
            int32_t* o = buf.data() + static_cast<size_t>(fi * stride + k) * Cout;
            const int8_t* wk = qw + static_cast<size_t>(k) * Cin * Cout;
            for (int ci = 0; ci < Cin; ++ci) {
                const int32_t av = a[ci];
                if (av == 0) continue;
                const int8_t* wr = wk + static_cast<size_t>(ci) * Cout;
                for (int co = 0; co < Cout; ++co) o[co] += av * wr[co];
            }
        }
    }
    std::vector<float> out(static_cast<size_t>(Fo) * Cout);
    for (int fo = 0; fo < Fo; ++fo) {
        const int32_t* src = buf.data() + static_cast<size_t>(fo + trim_lo) * Cout;
        float* o = out.data() + static_cast<size_t>(fo) * Cout;
        for (int co = 0; co < Cout; ++co) o[co] = static_cast<float>(src[co] * deq);
    }
    return out;
}

void dynamic_quant_gru_step(const QuantGruWeights& g, const float* x, const float* h,
                            float* h_out) {
    if (!g.W || !g.U || !g.b_input || !g.b_hidden)
        throw std::invalid_argument("dynamic_quant_gru_step: null weights");
    const int H = g.hidden;
    const int I = g.input;
    check_terms(std::max(I, H), "dynamic_quant_gru_step");
    const double sx = quant_scale_for(max_abs(x, I));
    const double sh = quant_scale_for(max_abs(h, H));
    const std::vector<int8_t> qx = quantize_activation(x, I, sx);
    const std::vector<int8_t> qh = quantize_activation(h, H, sh);
    const double dqx = sx * g.w_scale;
    const double dqh = sh * g.u_scale;
    std::vector<float> wx(3 * H), uh(3 * H);
    for (int row = 0; row < 3 * H; ++row) {
        const int8_t* wr = g.W + static_cast<size_t>(row) * I;
        int32_t acc = 0;
        for (int i = 0; i < I; ++i) acc += static_cast<int32_t>(wr[i]) * qx[i];
        wx[row] = static_cast<float>(g.b_input[row] + acc * dqx);
    }
    for (int row = 0; row < 3 * H; ++row) {
        const int8_t* ur = g.U + static_cast<size_t>(row) * H;
        int32_t acc = 0;
        for (int i = 0; i < H; ++i) acc += static_cast<int32_t>(ur[i]) * qh[i];
        uh[row] = static_cast<float>(g.b_hidden[row] + acc * dqh);
    }
    for (int j = 0; j < H; ++j) {
        const float r = logistic_f(wx[j] + uh[j]);
        const float z = logistic_f(wx[H + j] + uh[H + j]);
        const float n = std::tanh(wx[2 * H + j] + r * uh[2 * H + j]);
        h_out[j] = (1.0f - z) * n + z * h[j];
    }
}

namespace {

class StatsCollector : public SiteObserver {
public:
    void observe(const std::string& site, const float* x, size_t n) override {
        stats_[site].observe(x, n);
    }
    const CalibrationStats* find(const std::string& site) const {
        auto it = stats_.find(site);
        return it == stats_.end() ? nullptr : &it->second;
    }

private:
    std::unordered_map<std::string, CalibrationStats> stats_;
};

}  // namespace

WeightStore quantize_model(const WeightStore& f32_store, const TrunetConfig& cfg,
                           const std::vector<AudioBuffer>& calibration,
                           const StftConfig& stft_cfg) {
    if (f32_store.any_i8())
        throw std::invalid_argument("quantize_model: store is already quantized");
    if (calibration.empty())
        throw std::invalid_argument("quantize_model: empty calibration set");

    Network net(cfg, f32_store);
    const PcenParams pcen = net.pcen_params();
    StatsCollector stats;
    for (const AudioBuffer& clip : calibration) {
        if (clip.sample_rate != 16000)
            throw std::invalid_argument("quantize_model: calibration clips must be 16 kHz");
        const ComplexSpectrogram spec = stft(clip.samples, stft_cfg);
        const FeatureTensor feats = build_features(spec, stft_cfg, pcen);
        net.forward_offline(feats, &stats);
    }

    const std::vector<TensorSpec> schema = tensor_schema(cfg);
    std::unordered_map<std::string, bool> quantizable;
    for (const TensorSpec& s : schema) quantizable[s.name] = s.quantizable;

    WeightStore out;
    for (const Tensor& t : f32_store.tensors()) {
        auto it = quantizable.find(t.name);
        if (it != quantizable.end() && it->second) {
            QuantizedTensor q = quantize_tensor(t.f32.data(), t.f32.size());
            out.add(Tensor::make_i8(t.name, t.dims, std::move(q.q), q.scale));
        } else {
            out.add(t);
        }
    }
    for (const TensorSpec& s : schema) {
        if (s.name.size() < 2 || s.name.compare(s.name.size() - 2, 2, ".w") != 0) continue;
        const std::string site = s.name.substr(0, s.name.size() - 2);
        const CalibrationStats* cs = stats.find(site);
        if (!cs || cs->observations == 0)
            throw std::logic_error("quantize_model: site never observed: " + site);
        Tensor qt = Tensor::make_f32("qscale." + site, {1});
        qt.f32[0] = static_cast<float>(cs->scale());
        out.add(std::move(qt));
    }
    return out;
}

}  // namespace trunet
