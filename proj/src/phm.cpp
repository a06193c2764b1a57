#include "trunet/phm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace trunet {

double logistic(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

double softplus(double x) {
    if (x > 0.0) return x + std::log1p(std::exp(-x));
    return std::log1p(std::exp(x));
}

double sigmoid_pair(double z_k, double z_not_k) { return logistic(z_k - z_not_k); }

double compute_beta(double beta_raw, double sigma) {
    const double beta = 1.0 + softplus(beta_raw);
    const double spread = std::abs(2.0 * sigma - 1.0);
    if (spread < 1e-300) return beta;  // no feasibility bound at sigma = 1/2
    return std::min(beta, 1.0 / spread);
}

void phase_from_magnitudes(double mag_k, double mag_not_k, double& cos_out, double& sin_out) {
    if (mag_k < 1e-8) {
        cos_out = 1.0;
        sin_out = 0.0;
        return;
    }
    double c = (1.0 + mag_k * mag_k - mag_not_k * mag_not_k) / (2.0 * mag_k);
    c = std::clamp(c, -1.0, 1.0);
    cos_out = c;
    sin_out = std::sqrt(std::max(0.0, 1.0 - c * c));
}

int select_sign(double logit0, double logit1) { return logit0 >= logit1 ? 1 : -1; }

int select_sign_gumbel(double logit0, double logit1, double tau, std::mt19937_64& rng) {
    if (tau <= 0.0) throw std::invalid_argument("select_sign_gumbel: tau must be positive");
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    auto gumbel = [&]() {
        double u = uni(rng);
        if (u <= 0.0) u = std::numeric_limits<double>::min();
        return -std::log(-std::log(u));
    };
    const double a = logit0 + tau * gumbel();
    const double b = logit1 + tau * gumbel();
    return a >= b ? 1 : -1;
}

PhmPair assemble_pair(const PhmHeads& heads, int sign) {
    if (sign != 1 && sign != -1) throw std::invalid_argument("assemble_pair: sign must be +-1");
    const double sigma = sigmoid_pair(heads.z_k, heads.z_not_k);
    const double beta = compute_beta(heads.beta_raw, sigma);
    const double mag_k = beta * sigma;
    const double mag_not_k = beta * (1.0 - sigma);
    double ck, sk;
    phase_from_magnitudes(mag_k, mag_not_k, ck, sk);
    PhmPair out;
    out.mask_k = {mag_k * ck, sign * mag_k * sk};
    // the complement closes the sum exactly; its magnitude equals
    // beta * (1 - sigma) by the law of cosines and its imaginary part takes
    // the opposite sign
    out.mask_not_k = 1.0 - out.mask_k;
    return out;
}

void separate_frame(const float* heads, const std::complex<double>* X, int bins,
                    const SeparationOptions& opts, std::mt19937_64* rng,
                    std::complex<double>* yd, std::complex<double>* yr,
                    std::complex<double>* yn) {
    if (opts.sign_mode == SignMode::gumbel && rng == nullptr)
        throw std::invalid_argument("separate_frame: gumbel mode needs an rng");
    for (int f = 0; f < bins; ++f) {
        const float* h = heads + static_cast<size_t>(f) * 10;
        PhmHeads pd{h[0], h[1], h[2], h[3], h[4]};
        PhmHeads pn{h[5], h[6], h[7], h[8], h[9]};
        const int sd = opts.sign_mode == SignMode::hard
                           ? select_sign(pd.sign0, pd.sign1)
                           : select_sign_gumbel(pd.sign0, pd.sign1, opts.tau, *rng);
        const int sn = opts.sign_mode == SignMode::hard
                           ? select_sign(pn.sign0, pn.sign1)
                           : select_sign_gumbel(pn.sign0, pn.sign1, opts.tau, *rng);
        const PhmPair md = assemble_pair(pd, sd);
        const PhmPair mn = assemble_pair(pn, sn);
        yd[f] = md.mask_k * X[f];
        yn[f] = mn.mask_k * X[f];
        yr[f] = X[f] - yd[f] - yn[f];
    }
}

}  // namespace trunet
