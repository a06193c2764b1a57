#pragma once

#include <complex>
#include <vector>

#include "trunet/dsp.hpp"

namespace trunet {

// Per-frequency PCEN constants. Serialized alongside the network weights as
// the four tensors pcen.s, pcen.alpha, pcen.delta, pcen.r.
struct PcenParams {
    std::vector<double> s;
    std::vector<double> alpha;
    std::vector<double> delta;
    std::vector<double> r;
    double eps = 1e-6;

    static PcenParams defaults(int bins);  // s=0.025 alpha=0.98 delta=2.0 r=0.5
    int bins() const { return static_cast<int>(s.size()); }
};

// Causal smoother state. Primed with the first frame's energy.
struct PcenState {
    std::vector<double> m;
    bool primed = false;
};

// One smoother update plus compression for a magnitude frame.
// m' = (1-s)m + sE; out = (E/(eps+m')^alpha + delta)^r - delta^r.
void pcen_step(const double* energy, int bins, PcenState& state, const PcenParams& p,
               double* out);

// ln(max(|X|, 1e-7))
void log_magnitude(const std::complex<double>* frame, int bins, double* out);

// frames x bins x 4 float, channels [logmag, pcen, cos, sin]
struct FeatureTensor {
    int frames = 0;
    int bins = 0;
    static constexpr int channels = 4;
    std::vector<float> data;

    float* frame(int t) {
        return data.data() + static_cast<size_t>(t) * bins * channels;
    }
    const float* frame(int t) const {
        return data.data() + static_cast<size_t>(t) * bins * channels;
    }
};

// One feature frame (bins x 4, channel-contiguous per bin) from one analysis
// frame. Streaming callers must present frames in order: PCEN state advances.
void build_feature_frame(const std::complex<double>* spec_frame, int bins, int frame_index,
                         const StftConfig& cfg, PcenState& state, const PcenParams& params,
                         float* out);

FeatureTensor build_features(const ComplexSpectrogram& spec, const StftConfig& cfg,
                             const PcenParams& params);

}  // namespace trunet
