#include "trunet/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>
#include <string>

namespace trunet {

namespace {

void require(bool ok, const char* name, const std::string& what) {
    if (!ok) throw std::invalid_argument(std::string(name) + ": " + what);
}

void fill_bias(float* out, int F, int C, const float* bias) {
    if (bias) {
        for (int f = 0; f < F; ++f) std::memcpy(out + static_cast<size_t>(f) * C, bias, C * sizeof(float));
    } else {
        std::memset(out, 0, static_cast<size_t>(F) * C * sizeof(float));
    }
}

inline float logistic_f(float x) {
    if (x >= 0.0f) return 1.0f / (1.0f + std::exp(-x));
    const float e = std::exp(x);
    return e / (1.0f + e);
}

}  // namespace

int conv_out_length(int f, int stride) { return (f + stride - 1) / stride; }

int same_pad_low(int f, int kernel, int stride) {
    const int fo = conv_out_length(f, stride);
    const int total = (fo - 1) * stride + kernel - f;
    return total > 0 ? total / 2 : 0;
}

std::vector<float> conv1d_standard(const float* in, int F, int Cin, const float* w, int kernel,
                                   int Cout, int stride, const float* bias, const char* name) {
    require(in && w, name, "null argument");
    require(F > 0 && Cin > 0 && Cout > 0, name, "bad shape");
    require(kernel > 0 && stride > 0, name, "bad kernel or stride");
    const int Fo = conv_out_length(F, stride);
    const int lo = same_pad_low(F, kernel, stride);
    std::vector<float> out(static_cast<size_t>(Fo) * Cout);
    fill_bias(out.data(), Fo, Cout, bias);
    for (int fo = 0; fo < Fo; ++fo) {
        float* o = out.data() + static_cast<size_t>(fo) * Cout;
        for (int k = 0; k < kernel; ++k) {
            const int fi = fo * stride - lo + k;
            if (fi < 0 || fi >= F) continue;
            const float* a = in + static_cast<size_t>(fi) * Cin;
            const float* wk = w + static_cast<size_t>(k) * Cin * Cout;
            for (int ci = 0; ci < Cin; ++ci) {
                const float av = a[ci];
                const float* wr = wk + static_cast<size_t>(ci) * Cout;
                for (int co = 0; co < Cout; ++co) o[co] += av * wr[co];
            }
        }
    }
    return out;
}

std::vector<float> conv1d_pointwise(const float* in, int F, int Cin, const float* w, int Cout,
                                    const float* bias, const char* name) {
    require(in && w, name, "null argument");
    require(F > 0 && Cin > 0 && Cout > 0, name, "bad shape");
    std::vector<float> out(static_cast<size_t>(F) * Cout);
    fill_bias(out.data(), F, Cout, bias);
    for (int f = 0; f < F; ++f) {
        const float* a = in + static_cast<size_t>(f) * Cin;
        float* o = out.data() + static_cast<size_t>(f) * Cout;
        for (int ci = 0; ci < Cin; ++ci) {
            const float av = a[ci];
            const float* wr = w + static_cast<size_t>(ci) * Cout;
            for (int co = 0; co < Cout; ++co) o[co] += av * wr[co];
        }
    }
    return out;
}

std::vector<float> conv1d_depthwise(const float* in, int F, int C, const float* w, int kernel,
                                    int stride, const float* bias, const char* name) {
    require(in && w, name, "null argument");
    require(F > 0 && C > 0, name, "bad shape");
    require(kernel > 0 && stride > 0, name, "bad kernel or stride");
    const int Fo = conv_out_length(F, stride);
    const int lo = same_pad_low(F, kernel, stride);
    std::vector<float> out(static_cast<size_t>(Fo) * C);
    fill_bias(out.data(), Fo, C, bias);
    for (int fo = 0; fo < Fo; ++fo) {
        float* o = out.data() + static_cast<size_t>(fo) * C;
        for (int k = 0; k < kernel; ++k) {
            const int fi = fo * stride - lo + k;
            if (fi < 0 || fi >= F) continue;
            const float* a = in + static_cast<size_t>(fi) * C;
            const float* wk = w + static_cast<size_t>(k) * C;
            for (int c = 0; c < C; ++c) o[c] += a[c] * wk[c];
        }
    }
    return out;
}

std::vector<float> transposed_conv1d(const float* in, int F, int Cin, const float* w, int kernel,
                                     int Cout, int stride, const float* bias, const char* name) {
    require(in && w, name, "null argument");
    require(F > 0 && Cin > 0 && Cout > 0, name, "bad shape");
    require(kernel > 0 && stride > 0, name, "bad kernel or stride");
    require(kernel >= stride, name, "kernel smaller than stride leaves gaps");
    const int full = (F - 1) * stride + kernel;
    const int Fo = stride * F;
    const int trim_lo = (kernel - stride) / 2;
    std::vector<float> buf(static_cast<size_t>(full) * Cout, 0.0f);
    for (int fi = 0; fi < F; ++fi) {
        const float* a = in + static_cast<size_t>(fi) * Cin;
        for (int k = 0; k < kernel; ++k) {
            float* o = buf.data() + static_cast<size_t>(fi * stride + k) * Cout;
            const float* wk = w + static_cast<size_t>(k) * Cin * Cout;
            for (int ci = 0; ci < Cin; ++ci) {
                const float av = a[ci];
                const float* wr = wk + static_cast<size_t>(ci) * Cout;
                for (int co = 0; co < Cout; ++co) o[co] += av * wr[co];
            }
        }
    }
    std::vector<float> out(static_cast<size_t>(Fo) * Cout);
    fill_bias(out.data(), Fo, Cout, bias);
    for (int fo = 0; fo < Fo; ++fo) {
        const float* src = buf.data() + static_cast<size_t>(fo + trim_lo) * Cout;
        float* o = out.data() + static_cast<size_t>(fo) * Cout;
        for (int co = 0; co < Cout; ++co) o[co] += src[co];
    }
    return out;
}

void batch_norm_inference(float* x, int F, int C, const float* gamma, const float* beta,
                          const float* mean, const float* var, double eps) {
    std::vector<float> scale(C), shift(C);
    for (int c = 0; c < C; ++c) {
        const double s = gamma[c] / std::sqrt(static_cast<double>(var[c]) + eps);
        scale[c] = static_cast<float>(s);
        shift[c] = static_cast<float>(beta[c] - mean[c] * s);
    }
    for (int f = 0; f < F; ++f) {
        float* row = x + static_cast<size_t>(f) * C;
        for (int c = 0; c < C; ++c) row[c] = row[c] * scale[c] + shift[c];
    }
}

void relu(float* x, size_t n) {
    for (size_t i = 0; i < n; ++i)
        if (x[i] < 0.0f) x[i] = 0.0f;
}

void gru_cell_step(const GruWeights& g, const float* x, const float* h, float* h_out) {
    if (!g.W || !g.U || !g.b_input || !g.b_hidden)
        throw std::invalid_argument("gru_cell_step: null weights");
    const int H = g.hidden;
    const int I = g.input;
    std::vector<float> wx(3 * H), uh(3 * H);
    for (int row = 0; row < 3 * H; ++row) {
        const float* wr = g.W + static_cast<size_t>(row) * I;
        double acc = g.b_input[row];
        for (int i = 0; i < I; ++i) acc += static_cast<double>(wr[i]) * x[i];
        wx[row] = static_cast<float>(acc);
    }
    for (int row = 0; row < 3 * H; ++row) {
        const float* ur = g.U + static_cast<size_t>(row) * H;
        double acc = g.b_hidden[row];
        for (int i = 0; i < H; ++i) acc += static_cast<double>(ur[i]) * h[i];
        uh[row] = static_cast<float>(acc);
    }
    for (int j = 0; j < H; ++j) {
        const float r = logistic_f(wx[j] + uh[j]);
        const float z = logistic_f(wx[H + j] + uh[H + j]);
        const float n = std::tanh(wx[2 * H + j] + r * uh[2 * H + j]);
        h_out[j] = (1.0f - z) * n + z * h[j];
    }
}

std::vector<float> bigru_sequence(const GruWeights& fw, const GruWeights& bw, const float* seq,
                                  int L) {
    if (fw.hidden != bw.hidden || fw.input != bw.input)
        throw std::invalid_argument("bigru_sequence: direction shape mismatch");
    const int H = fw.hidden;
    const int I = fw.input;
    std::vector<float> out(static_cast<size_t>(L) * 2 * H);
    std::vector<float> h(H, 0.0f), hn(H);
    for (int l = 0; l < L; ++l) {
        gru_cell_step(fw, seq + static_cast<size_t>(l) * I, h.data(), hn.data());
        h = hn;
        std::memcpy(out.data() + static_cast<size_t>(l) * 2 * H, h.data(), H * sizeof(float));
    }
    std::fill(h.begin(), h.end(), 0.0f);
    for (int l = L - 1; l >= 0; --l) {
        gru_cell_step(bw, seq + static_cast<size_t>(l) * I, h.data(), hn.data());
        h = hn;
        std::memcpy(out.data() + static_cast<size_t>(l) * 2 * H + H, h.data(), H * sizeof(float));
    }
    return out;
}

}  // namespace trunet
