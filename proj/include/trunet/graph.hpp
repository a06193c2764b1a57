#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "trunet/features.hpp"
#include "trunet/kernels.hpp"
#include "trunet/weights.hpp"

namespace trunet {

struct LayerSpec {
    int kernel;
    int stride;
    int channels;
};

// Frequency-axis U-Net with a bidirectional frequency GRU and a shared
// per-frame time GRU at the bottleneck. Encoder block 1 is a standard conv;
// blocks 2..6 are pointwise + depthwise, each conv followed by BN and ReLU.
// Decoder blocks concatenate the matching encoder skip, project back to 64
// channels, then run a transposed conv; the final block emits the 10 raw mask
// heads per bin (no ReLU).
struct TrunetConfig {
    std::array<LayerSpec, 6> encoder{{{5, 2, 64},
                                      {3, 1, 128},
                                      {5, 2, 128},
                                      {3, 1, 128},
                                      {5, 2, 128},
                                      {3, 2, 128}}};
    std::array<LayerSpec, 6> decoder{{{3, 2, 64},
                                      {5, 2, 64},
                                      {3, 1, 64},
                                      {5, 2, 64},
                                      {3, 1, 64},
                                      {5, 2, 10}}};
    int freq_bins = 256;
    int input_channels = 4;
    int fgru_hidden = 64;   // per direction
    int tgru_hidden = 128;
    int fgru_proj_channels = 64;  // FGRU block pointwise output
    int tgru_proj_channels = 64;  // TGRU block pointwise output
    int decoder_proj_channels = 64;
    bool with_fgru = true;  // ablation switch: drops the bi-GRU, keeps the block's pointwise
};

struct TensorSpec {
    std::string name;
    std::vector<uint32_t> dims;
    int fan_in = 0;        // 0: not weight-like (BN stats, PCEN constants)
    bool quantizable = false;
};

// Full tensor inventory for a config: the contract between random_init,
// save/load and Network construction.
std::vector<TensorSpec> tensor_schema(const TrunetConfig& cfg);

// Test-grade initialization: uniform [-k, k], k = 1/sqrt(fan_in), for conv
// and GRU parameters; identity BN stats; canonical PCEN constants.
WeightStore random_init(const TrunetConfig& cfg, uint64_t seed);

// Default config with the ablation switch matching what the store contains.
TrunetConfig infer_config(const WeightStore& store);

struct TgruState {
    std::vector<float> h;  // positions x hidden, flattened
    int positions = 0;
    int hidden = 0;
};

// One frame of raw mask heads: bins x 10 floats.
struct FrameOutput {
    int bins = 0;
    static constexpr int heads = 10;
    std::vector<float> data;

    const float* bin(int f) const { return data.data() + static_cast<size_t>(f) * heads; }
};

// Observes conv-layer inputs during forward passes; used for calibration.
class SiteObserver {
public:
    virtual ~SiteObserver() = default;
    virtual void observe(const std::string& site, const float* x, size_t n) = 0;
};

class Network {
public:
    // Validates every schema tensor against the store (presence, dtype
    // consistency, shape) and prepares the layer table. The store may be all
    // f32 or quantized (i8 conv/GRU weights plus qscale.* activation scales).
    Network(const TrunetConfig& cfg, WeightStore store);

    const TrunetConfig& config() const { return cfg_; }
    const WeightStore& store() const { return store_; }
    bool quantized() const { return quantized_; }
    int bottleneck_positions() const { return bottleneck_f_; }
    PcenParams pcen_params() const;

    TgruState make_tgru_state() const;

    // features: freq_bins x 4, channel-contiguous. Returns bins x 10 heads.
    FrameOutput forward_frame(const float* features, TgruState& state,
                              SiteObserver* obs = nullptr) const;
    std::vector<FrameOutput> forward_offline(const FeatureTensor& features,
                                             SiteObserver* obs = nullptr) const;

    // stage entry points, exposed for tests and calibration
    std::vector<std::vector<float>> encode_frame(const float* features,
                                                 SiteObserver* obs = nullptr) const;
    std::vector<float> fgru_block(const std::vector<float>& bottleneck,
                                  SiteObserver* obs = nullptr) const;
    std::vector<float> tgru_block(const std::vector<float>& x, TgruState& state,
                                  SiteObserver* obs = nullptr) const;
    FrameOutput decode_frame(const std::vector<float>& x,
                             const std::vector<std::vector<float>>& skips,
                             SiteObserver* obs = nullptr) const;

private:
    struct ConvRef;
    struct GruRef;

    std::vector<float> run_conv(const ConvRef& layer, const float* in, int F,
                                SiteObserver* obs) const;
    GruWeights gru_weights(const GruRef& g) const;

    TrunetConfig cfg_;
    WeightStore store_;
    bool quantized_ = false;
    bool has_fgru_ = false;
    int bottleneck_f_ = 0;
    std::vector<int> enc_f_;  // per-block output lengths

    struct ConvRef {
        enum class Kind { standard, pointwise, depthwise, transposed };
        Kind kind;
        std::string name;  // tensor prefix, e.g. "enc.3.pw"
        int kernel = 1, stride = 1, cin = 0, cout = 0;
        const float* w = nullptr;
        const int8_t* qw = nullptr;
        double w_scale = 0.0;
        double in_scale = 0.0;  // static activation scale (quantized stores)
        const float* bn_gamma = nullptr;
        const float* bn_beta = nullptr;
        const float* bn_mean = nullptr;
        const float* bn_var = nullptr;
        bool relu_after = true;
    };
    struct GruRef {
        std::string name;  // "fgru.fw", "fgru.bw", "tgru.cell"
        int input = 0, hidden = 0;
        const float* W = nullptr;
        const float* U = nullptr;
        const int8_t* qW = nullptr;
        const int8_t* qU = nullptr;
        double w_scale = 0.0, u_scale = 0.0;
        const float* b_input = nullptr;
        const float* b_hidden = nullptr;
    };

    std::array<ConvRef, 11> enc_convs_;  // block1 + (pw, dw) x 5
    GruRef fgru_fw_, fgru_bw_, tgru_;
    ConvRef fgru_pw_, tgru_pw_;
    std::array<ConvRef, 12> dec_convs_;  // (proj, tconv) x 6

    void gru_step(const GruRef& g, const float* x, const float* h, float* h_out) const;
};

}  // namespace trunet
