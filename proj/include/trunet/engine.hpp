#pragma once

#include <memory>
#include <random>
#include <vector>

#include "trunet/dsp.hpp"
#include "trunet/features.hpp"
#include "trunet/graph.hpp"
#include "trunet/losses.hpp"
#include "trunet/phm.hpp"

namespace trunet {

struct EngineOptions {
    SignMode sign_mode = SignMode::hard;
    double tau = 1.0;
    uint64_t seed = 0;
};

// Everything a live stream carries. All buffers are sized at creation and
// never grow: per-frame work is constant.
struct StreamState {
    std::vector<double> analysis;              // window_size input history
    std::array<std::vector<double>, 3> ola;    // per-source overlap-add accumulators
    std::vector<double> ola_norm;              // summed squared synthesis window
    PcenState pcen;
    TgruState tgru;
    SeparationOptions sep;
    std::mt19937_64 rng;
    int64_t calls = 0;
};

struct RtfReport {
    double mean_frame_ms = 0.0;
    double p95_frame_ms = 0.0;
    double rtf = 0.0;
    int frames_measured = 0;
};

class Engine {
public:
    Engine(std::shared_ptr<const Network> net, StftConfig cfg = {});

    const StftConfig& stft_config() const { return cfg_; }
    const Network& network() const { return *net_; }

    // Output lags input by window - hop samples: the first output chunk for
    // input samples [0, hop) appears once input [0, window) has arrived.
    int latency_samples() const { return cfg_.window_size - cfg_.hop_size; }
    int priming_calls() const { return cfg_.window_size / cfg_.hop_size - 1; }

    StreamState new_stream(const EngineOptions& opts = {}) const;

    // Consumes exactly hop_size samples and writes hop_size samples per
    // source. The first priming_calls() calls emit zeros; afterwards call i
    // emits the fully overlap-added output samples
    // [(i - priming) * hop, (i - priming + 1) * hop).
    void process_frame(StreamState& state, const double* in_hop, double* out_d, double* out_r,
                       double* out_n) const;

    // Drives process_frame over the whole signal, strips the priming zeros
    // and flushes the tail, so outputs align sample-for-sample with the
    // input.
    SourceTriple enhance_streaming(const std::vector<double>& x,
                                   const EngineOptions& opts = {}) const;

    // Whole-signal reference path: stft -> features -> net -> masks -> istft.
    // Output length is (frames - 1) * hop + window.
    SourceTriple enhance_offline(const std::vector<double>& x,
                                 const EngineOptions& opts = {}) const;

private:
    std::shared_ptr<const Network> net_;
    StftConfig cfg_;
    PcenParams pcen_;
    std::vector<double> window_;
    Fft fft_;
};

// direct + g * reverb with g set so the direct-to-scaled-reverb energy ratio
// is target_db; zero-energy reverb returns direct unchanged.
std::vector<double> remix(const std::vector<double>& direct, const std::vector<double>& reverb,
                          double target_db);

// Wall-clock per-frame statistics over synthetic input; the first 16 calls
// are warm-up and excluded. rtf = mean frame time / hop duration.
RtfReport benchmark_rtf(const Engine& engine, int frames);

}  // namespace trunet
