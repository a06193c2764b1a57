#pragma once

#include <complex>
#include <random>
#include <vector>

namespace trunet {

// Phase-aware beta-sigmoid masking. Each head pair describes two complex
// masks M_k and M_~k that always satisfy M_k + M_~k = 1 + 0i: their
// magnitudes come from a shared beta and a sigmoid split, the phase offsets
// follow from the law of cosines on the triangle with the unit mixture side,
// and the two imaginary parts carry opposite signs.

double logistic(double x);
double softplus(double x);

// sigma_k = logistic(z_k - z_~k)
double sigmoid_pair(double z_k, double z_not_k);

// beta = min(1 + softplus(beta_raw), 1/|2 sigma - 1|); the clip keeps the
// magnitude pair inside the triangle-inequality region.
double compute_beta(double beta_raw, double sigma);

// cos of the mask's phase offset via the law of cosines against the unit
// side, clamped to [-1, 1]; sin returned as the non-negative root.
// mag_k < 1e-8 degenerates to (1, 0).
void phase_from_magnitudes(double mag_k, double mag_not_k, double& cos_out, double& sin_out);

enum class SignMode { hard, gumbel };

// Hard sign: argmax over the two logits, class 0 -> +1, ties -> +1.
int select_sign(double logit0, double logit1);

// Gumbel sampling: argmax(logit_i + tau * g_i), g_i ~ Gumbel(0,1).
int select_sign_gumbel(double logit0, double logit1, double tau, std::mt19937_64& rng);

struct PhmHeads {
    double z_k = 0.0;
    double z_not_k = 0.0;
    double beta_raw = 0.0;
    double sign0 = 0.0;
    double sign1 = 0.0;
};

struct PhmPair {
    std::complex<double> mask_k;
    std::complex<double> mask_not_k;
};

// sign is +1 or -1 and is applied to mask_k's imaginary part; mask_~k takes
// the opposite sign so the pair sums to 1 + 0i.
PhmPair assemble_pair(const PhmHeads& heads, int sign);

struct SeparationOptions {
    SignMode sign_mode = SignMode::hard;
    double tau = 1.0;
};

// heads: F x 10 floats per frame, channel order per bin
//   [z_d, z_~d, beta_raw_d, sign_d0, sign_d1, z_n, z_~n, beta_raw_n, sign_n0, sign_n1]
// Pair one masks the direct source, pair two the noise; the reverberant
// estimate closes the quadrilateral: Y_r = X - Y_d - Y_n.
void separate_frame(const float* heads, const std::complex<double>* X, int bins,
                    const SeparationOptions& opts, std::mt19937_64* rng,
                    std::complex<double>* yd, std::complex<double>* yr,
                    std::complex<double>* yn);

}  // namespace trunet
