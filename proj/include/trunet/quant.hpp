#pragma once

#include <cstdint>
#include <vector>

#include "trunet/audio.hpp"
#include "trunet/graph.hpp"
#include "trunet/weights.hpp"

namespace trunet {

// Uniform symmetric INT8: zero point 0, range [-127, 127] (-128 unused),
// rounding half away from zero. Weights carry per-tensor scales; conv
// activations use static scales recorded at calibration time; GRU inputs and
// states are quantized dynamically per step. Accumulation is int32.

double quant_scale_for(double max_abs);  // max_abs / 127, floored at 1e-8
int8_t quantize_value(double x, double scale);

struct QuantizedTensor {
    std::vector<int8_t> q;
    double scale = 0.0;
};

QuantizedTensor quantize_tensor(const float* x, size_t n);  // max-abs scale
std::vector<float> dequantize_tensor(const QuantizedTensor& t);

// Running averages of per-observation extrema; scale derives from the
// averaged |min| / |max|.
struct CalibrationStats {
    double min_sum = 0.0;
    double max_sum = 0.0;
    uint64_t observations = 0;

    void observe(const float* x, size_t n);
    double min_avg() const;
    double max_avg() const;
    double scale() const;
};

// Integer mirrors of the f32 conv kernels: the input is quantized with the
// given static activation scale, products accumulate in int32, and the result
// is dequantized to f32 (no bias; BN runs in f32 afterwards).
std::vector<float> qconv1d_standard(const float* in, int F, int Cin, const int8_t* qw,
                                    double w_scale, double in_scale, int kernel, int Cout,
                                    int stride);
std::vector<float> qconv1d_pointwise(const float* in, int F, int Cin, const int8_t* qw,
                                     double w_scale, double in_scale, int Cout);
std::vector<float> qconv1d_depthwise(const float* in, int F, int C, const int8_t* qw,
                                     double w_scale, double in_scale, int kernel, int stride);
std::vector<float> qtransposed_conv1d(const float* in, int F, int Cin, const int8_t* qw,
                                      double w_scale, double in_scale, int kernel, int Cout,
                                      int stride);

struct QuantGruWeights {
    const int8_t* W = nullptr;
    const int8_t* U = nullptr;
    double w_scale = 0.0;
    double u_scale = 0.0;
    const float* b_input = nullptr;
    const float* b_hidden = nullptr;
    int input = 0;
    int hidden = 0;
};

// x and h are max-abs quantized on the spot; gates run in f32.
void dynamic_quant_gru_step(const QuantGruWeights& g, const float* x, const float* h,
                            float* h_out);

// Runs the f32 network over the calibration clips to record activation
// statistics at every conv site, then emits a store with i8 conv/GRU weights,
// f32 biases/BN/PCEN, and one qscale.<site> scalar per conv. Rejects stores
// that are already quantized and empty calibration sets.
WeightStore quantize_model(const WeightStore& f32_store, const TrunetConfig& cfg,
                           const std::vector<AudioBuffer>& calibration,
                           const StftConfig& stft_cfg = {});

}  // namespace trunet
