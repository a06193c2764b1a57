#pragma once

#include <complex>
#include <vector>

namespace trunet {

// Analysis/synthesis framing. Defaults: 32 ms window, 8 ms hop at 16 kHz,
// periodic Hann on both sides. Frames are left aligned (no centering), so a
// frame never reads samples past its own window: zero lookahead.
struct StftConfig {
    int window_size = 512;
    int hop_size = 128;

    int bins() const { return window_size / 2; }  // Nyquist dropped
};

// frames x bins, row major. Bin window_size/2 (Nyquist) is dropped on
// analysis and restored as zero on synthesis.
struct ComplexSpectrogram {
    int frames = 0;
    int bins = 0;
    std::vector<std::complex<double>> data;

    std::complex<double>* frame(int t) { return data.data() + static_cast<size_t>(t) * bins; }
    const std::complex<double>* frame(int t) const {
        return data.data() + static_cast<size_t>(t) * bins;
    }
};

// Iterative radix-2 complex FFT. Size must be a power of two.
class Fft {
public:
    explicit Fft(int n);

    void forward(std::complex<double>* buf) const;
    void inverse(std::complex<double>* buf) const;  // applies 1/n
    int size() const { return n_; }

private:
    void transform(std::complex<double>* buf, bool inv) const;

    int n_;
    std::vector<int> rev_;
    std::vector<std::complex<double>> tw_;  // forward twiddles, n/2
};

std::vector<double> hann_periodic(int n);

// x must hold at least one full window; frame count is
// floor((len - window) / hop) + 1.
ComplexSpectrogram stft(const std::vector<double>& x, const StftConfig& cfg);

// Weighted overlap-add with per-sample window-power normalization. Output
// length is (frames - 1) * hop + window.
std::vector<double> istft(const ComplexSpectrogram& spec, const StftConfig& cfg);

// Demodulated phase of one analysis frame as (cos, sin) pairs. The carrier
// 2*pi*f*hop*t/window is removed with exact integer phase-index arithmetic so
// streaming and offline paths agree for any frame count. Zero-magnitude bins
// yield (1, 0).
void demodulated_phase(const std::complex<double>* frame, int bins, int frame_index,
                       const StftConfig& cfg, double* cos_out, double* sin_out);

// Elementwise magnitude compression m^e. Negative inputs are rejected.
std::vector<double> power_compress(const std::vector<double>& mags, double exponent);

}  // namespace trunet
