#pragma once

#include <cstdint>
#include <vector>

#include "trunet/losses.hpp"

namespace trunet {

// Sparse exponentially decaying impulse response: zero up to the delay tap,
// then random-sign taps drawn with the given density whose envelope decays
// with time constant decay_tau_s. Deterministic per seed.
struct ReverbSpec {
    double delay_s = 0.004;
    double decay_tau_s = 0.08;
    double density = 0.25;
    int sample_rate = 16000;
    uint64_t seed = 1;
};

std::vector<double> reverb_impulse_response(const ReverbSpec& spec);

// Full linear convolution of dry with the impulse response; output length is
// len(dry) + len(ir) - 1.
std::vector<double> synth_reverb(const std::vector<double>& dry, const ReverbSpec& spec);

// A complete labeled scene: mix = direct + reverb + noise exactly.
struct SyntheticScene {
    std::vector<double> direct;
    std::vector<double> reverb;
    std::vector<double> noise;
    std::vector<double> mix;
};

// Speech-like harmonic dry signal plus a reverb tail scaled to the requested
// direct-to-reverb ratio and white noise scaled to the requested SNR against
// direct + reverb. All components have exactly len samples.
SyntheticScene make_scene(size_t len, double drr_db, double snr_db, uint64_t seed);

}  // namespace trunet
