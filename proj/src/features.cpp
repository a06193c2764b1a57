#include "trunet/features.hpp"

#include <cmath>
#include <stdexcept>

namespace trunet {

PcenParams PcenParams::defaults(int bins) {
    PcenParams p;
    p.s.assign(bins, 0.025);
    p.alpha.assign(bins, 0.98);
    p.delta.assign(bins, 2.0);
    p.r.assign(bins, 0.5);
    return p;
}

void pcen_step(const double* energy, int bins, PcenState& state, const PcenParams& p,
               double* out) {
    if (p.bins() != bins) throw std::invalid_argument("pcen_step: parameter size mismatch");
    for (int f = 0; f < bins; ++f)
        if (energy[f] < 0.0) throw std::invalid_argument("pcen_step: negative energy");
    if (!state.primed) {
        state.m.assign(energy, energy + bins);
        state.primed = true;
    }
    if (static_cast<int>(state.m.size()) != bins)
        throw std::invalid_argument("pcen_step: state size mismatch");
    for (int f = 0; f < bins; ++f) {
        const double m = (1.0 - p.s[f]) * state.m[f] + p.s[f] * energy[f];
        state.m[f] = m;
        const double dr = std::pow(p.delta[f], p.r[f]);
        out[f] = std::pow(energy[f] / std::pow(p.eps + m, p.alpha[f]) + p.delta[f], p.r[f]) - dr;
    }
}

void log_magnitude(const std::complex<double>* frame, int bins, double* out) {
    for (int f = 0; f < bins; ++f) {
        const double mag = std::abs(frame[f]);
        out[f] = std::log(mag > 1e-7 ? mag : 1e-7);
    }
}

void build_feature_frame(const std::complex<double>* spec_frame, int bins, int frame_index,
                         const StftConfig& cfg, PcenState& state, const PcenParams& params,
                         float* out) {
    std::vector<double> logmag(bins), energy(bins), pcen(bins), c(bins), s(bins);
    log_magnitude(spec_frame, bins, logmag.data());
    for (int f = 0; f < bins; ++f) energy[f] = std::abs(spec_frame[f]);
    pcen_step(energy.data(), bins, state, params, pcen.data());
    demodulated_phase(spec_frame, bins, frame_index, cfg, c.data(), s.data());
    for (int f = 0; f < bins; ++f) {
        out[f * 4 + 0] = static_cast<float>(logmag[f]);
        out[f * 4 + 1] = static_cast<float>(pcen[f]);
        out[f * 4 + 2] = static_cast<float>(c[f]);
        out[f * 4 + 3] = static_cast<float>(s[f]);
    }
}

FeatureTensor build_features(const ComplexSpectrogram& spec, const StftConfig& cfg,
                             const PcenParams& params) {
    FeatureTensor ft;
    ft.frames = spec.frames;
    ft.bins = spec.bins;
    ft.data.resize(static_cast<size_t>(spec.frames) * spec.bins * FeatureTensor::channels);
    PcenState state;
    for (int t = 0; t < spec.frames; ++t)
        build_feature_frame(spec.frame(t), spec.bins, t, cfg, state, params, ft.frame(t));
    return ft;
}

}  // namespace trunet
