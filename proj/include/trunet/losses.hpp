#pragma once

#include <vector>

namespace trunet {

struct LossConfig {
    std::vector<int> wav_scales = {4064, 2032, 1016, 508};  // segment lengths
    std::vector<int> spec_sizes = {1024, 512, 256};         // FFT sizes, hop = size/4
    double spec_compress = 0.3;
};

// Negative cosine similarity of one segment; either norm below 1e-12 gives 0.
double cosine_loss(const double* y, const double* yhat, size_t n);

// Sum over scales of the per-scale segment average. Segments are
// non-overlapping, the tail shorter than a segment is dropped, and scales
// longer than the signal contribute nothing.
double multiscale_wav_loss(const std::vector<double>& y, const std::vector<double>& yhat,
                           const LossConfig& cfg = {});

// Analytic d(multiscale_wav_loss)/d(yhat), same length as yhat.
std::vector<double> wav_loss_gradient(const std::vector<double>& y,
                                      const std::vector<double>& yhat,
                                      const LossConfig& cfg = {});

// Sum over FFT sizes of the squared Frobenius distance between
// magnitude^0.3 spectrograms (Hann window, hop = size/4, bins 0..size/2).
double multiscale_spec_loss(const std::vector<double>& y, const std::vector<double>& yhat,
                            const LossConfig& cfg = {});

struct SourceTriple {
    std::vector<double> direct;
    std::vector<double> reverb;
    std::vector<double> noise;
};

// Sum of waveform and spectral terms over the three sources.
double final_loss(const SourceTriple& target, const SourceTriple& estimate,
                  const LossConfig& cfg = {});

// Scale-invariant SDR in dB, clamped to [-100, 100]; vanishing residual
// returns the +100 cap. Zero-energy references are rejected.
double si_sdr(const std::vector<double>& reference, const std::vector<double>& estimate);

// clean + g * noise with g chosen so the clean-to-scaled-noise ratio is
// exactly snr_db.
std::vector<double> mix_at_snr(const std::vector<double>& clean,
                               const std::vector<double>& noise, double snr_db,
                               double* gain_out = nullptr);

}  // namespace trunet
