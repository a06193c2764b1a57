#pragma once

#include <cstddef>
#include <vector>

namespace trunet {

// All activations are F x C row major: channels contiguous per frequency bin.
// Convolutions run along the frequency axis only; time never enters a kernel,
// which is what keeps the whole stack frame-causal.

// 'same' zero padding: output length ceil(F / stride), total pad split with
// floor(pad/2) below and the remainder above.
int conv_out_length(int f, int stride);
int same_pad_low(int f, int kernel, int stride);

// weights: kernel x Cin x Cout. bias (Cout) may be null.
std::vector<float> conv1d_standard(const float* in, int F, int Cin, const float* w, int kernel,
                                   int Cout, int stride, const float* bias,
                                   const char* name = "conv1d");

// weights: Cin x Cout (a 1x1 convolution).
std::vector<float> conv1d_pointwise(const float* in, int F, int Cin, const float* w, int Cout,
                                    const float* bias, const char* name = "pointwise");

// weights: kernel x C, one filter per channel.
std::vector<float> conv1d_depthwise(const float* in, int F, int C, const float* w, int kernel,
                                    int stride, const float* bias,
                                    const char* name = "depthwise");

// weights: kernel x Cin x Cout. Produces (F-1)*stride + kernel positions and
// crops floor((kernel-stride)/2) low / remainder high so the output length is
// exactly stride * F. kernel < stride is rejected.
std::vector<float> transposed_conv1d(const float* in, int F, int Cin, const float* w, int kernel,
                                     int Cout, int stride, const float* bias,
                                     const char* name = "tconv");

void batch_norm_inference(float* x, int F, int C, const float* gamma, const float* beta,
                          const float* mean, const float* var, double eps = 1e-5);

void relu(float* x, size_t n);

// Gate order [r, z, n], dual biases:
//   r = logistic(W_r x + b_ir + U_r h + b_hr)
//   z = logistic(W_z x + b_iz + U_z h + b_hz)
//   n = tanh(W_n x + b_in + r . (U_n h + b_hn))
//   h' = (1 - z) . n + z . h
struct GruWeights {
    const float* W = nullptr;        // 3H x input
    const float* U = nullptr;        // 3H x H
    const float* b_input = nullptr;  // 3H
    const float* b_hidden = nullptr; // 3H
    int input = 0;
    int hidden = 0;
};

void gru_cell_step(const GruWeights& g, const float* x, const float* h, float* h_out);

// L x Cin sequence -> L x 2H, forward and backward states concatenated per
// position. Both directions start from zero state.
std::vector<float> bigru_sequence(const GruWeights& fw, const GruWeights& bw, const float* seq,
                                  int L);

}  // namespace trunet
