#include "trunet/engine.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

namespace trunet {

Engine::Engine(std::shared_ptr<const Network> net, StftConfig cfg)
    : net_(std::move(net)), cfg_(cfg), fft_(cfg.window_size) {
    if (!net_) throw std::invalid_argument("engine: null network");
    if (cfg_.hop_size <= 0 || cfg_.window_size % cfg_.hop_size != 0)
        throw std::invalid_argument("engine: hop must divide the window");
    if (cfg_.bins() != net_->config().freq_bins)
        throw std::invalid_argument("engine: stft bins do not match the network input");
    pcen_ = net_->pcen_params();
    window_ = hann_periodic(cfg_.window_size);
}

StreamState Engine::new_stream(const EngineOptions& opts) const {
    StreamState st;
    st.analysis.assign(cfg_.window_size, 0.0);
    for (auto& b : st.ola) b.assign(cfg_.window_size, 0.0);
    st.ola_norm.assign(cfg_.window_size, 0.0);
    st.tgru = net_->make_tgru_state();
    st.sep.sign_mode = opts.sign_mode;
    st.sep.tau = opts.tau;
    st.rng.seed(opts.seed);
    return st;
}

void Engine::process_frame(StreamState& st, const double* in_hop, double* out_d, double* out_r,
                           double* out_n) const {
    const int W = cfg_.window_size;
    const int H = cfg_.hop_size;
    const int B = cfg_.bins();

    std::move(st.analysis.begin() + H, st.analysis.end(), st.analysis.begin());
    std::copy(in_hop, in_hop + H, st.analysis.end() - H);

    const int64_t call = st.calls++;
    const int prime = priming_calls();
    if (call < prime) {
        std::fill(out_d, out_d + H, 0.0);
        std::fill(out_r, out_r + H, 0.0);
        std::fill(out_n, out_n + H, 0.0);
        return;
    }
    const int64_t t = call - prime;

    std::vector<std::complex<double>> buf(W);
    for (int n = 0; n < W; ++n) buf[n] = {st.analysis[n] * window_[n], 0.0};
    fft_.forward(buf.data());
    std::vector<std::complex<double>> spec(buf.begin(), buf.begin() + B);

    std::vector<float> feat(static_cast<size_t>(B) * FeatureTensor::channels);
    // the demodulation carrier is periodic in the frame index, so the cast is
    // safe for arbitrarily long streams
    build_feature_frame(spec.data(), B, static_cast<int>(t % W), cfg_, st.pcen, pcen_,
                        feat.data());

    const FrameOutput heads = net_->forward_frame(feat.data(), st.tgru);

    std::vector<std::complex<double>> yd(B), yr(B), yn(B);
    separate_frame(heads.data.data(), spec.data(), B, st.sep, &st.rng, yd.data(), yr.data(),
                   yn.data());

    // same reconstruction arithmetic as istft so streaming and offline agree
    const std::complex<double>* sources[3] = {yd.data(), yr.data(), yn.data()};
    for (int s = 0; s < 3; ++s) {
        buf[0] = sources[s][0];
        for (int k = 1; k < B; ++k) {
            buf[k] = sources[s][k];
            buf[W - k] = std::conj(sources[s][k]);
        }
        buf[W / 2] = 0.0;
        fft_.inverse(buf.data());
        double* acc = st.ola[s].data();
        for (int n = 0; n < W; ++n) acc[n] += buf[n].real() * window_[n];
    }
    for (int n = 0; n < W; ++n) st.ola_norm[n] += window_[n] * window_[n];

    double* outs[3] = {out_d, out_r, out_n};
    for (int s = 0; s < 3; ++s)
        for (int j = 0; j < H; ++j)
            outs[s][j] = st.ola_norm[j] > 1e-12 ? st.ola[s][j] / st.ola_norm[j] : 0.0;

    for (auto& b : st.ola) {
        std::move(b.begin() + H, b.end(), b.begin());
        std::fill(b.end() - H, b.end(), 0.0);
    }
    std::move(st.ola_norm.begin() + H, st.ola_norm.end(), st.ola_norm.begin());
    std::fill(st.ola_norm.end() - H, st.ola_norm.end(), 0.0);
}

SourceTriple Engine::enhance_streaming(const std::vector<double>& x,
                                       const EngineOptions& opts) const {
    if (x.empty()) throw std::invalid_argument("enhance_streaming: empty input");
    const int H = cfg_.hop_size;
    const size_t n = x.size();
    const size_t chunks = (n + H - 1) / H;
    const int prime = priming_calls();

    StreamState st = new_stream(opts);
    std::vector<double> in(H), od(H), orv(H), on(H);
    SourceTriple out;
    out.direct.reserve(chunks * H);
    out.reverb.reserve(chunks * H);
    out.noise.reserve(chunks * H);

    const size_t total = chunks + static_cast<size_t>(prime);
    for (size_t i = 0; i < total; ++i) {
        std::fill(in.begin(), in.end(), 0.0);
        if (i < chunks) {
            const size_t at = i * H;
            const size_t take = std::min(static_cast<size_t>(H), n - at);
            std::copy(x.begin() + at, x.begin() + at + take, in.begin());
        }
        process_frame(st, in.data(), od.data(), orv.data(), on.data());
        if (i >= static_cast<size_t>(prime)) {
            out.direct.insert(out.direct.end(), od.begin(), od.end());
            out.reverb.insert(out.reverb.end(), orv.begin(), orv.end());
            out.noise.insert(out.noise.end(), on.begin(), on.end());
        }
    }
    out.direct.resize(n);
    out.reverb.resize(n);
    out.noise.resize(n);
    return out;
}

SourceTriple Engine::enhance_offline(const std::vector<double>& x,
                                     const EngineOptions& opts) const {
    const ComplexSpectrogram spec = stft(x, cfg_);
    const FeatureTensor feats = build_features(spec, cfg_, pcen_);
    const std::vector<FrameOutput> heads = net_->forward_offline(feats);

    SeparationOptions sep;
    sep.sign_mode = opts.sign_mode;
    sep.tau = opts.tau;
    std::mt19937_64 rng(opts.seed);

    ComplexSpectrogram sd, sr, sn;
    for (ComplexSpectrogram* s : {&sd, &sr, &sn}) {
        s->frames = spec.frames;
        s->bins = spec.bins;
        s->data.resize(spec.data.size());
    }
    for (int t = 0; t < spec.frames; ++t)
        separate_frame(heads[t].data.data(), spec.frame(t), spec.bins, sep, &rng, sd.frame(t),
                       sr.frame(t), sn.frame(t));

    SourceTriple out;
    out.direct = istft(sd, cfg_);
    out.reverb = istft(sr, cfg_);
    out.noise = istft(sn, cfg_);
    return out;
}

std::vector<double> remix(const std::vector<double>& direct, const std::vector<double>& reverb,
                          double target_db) {
    if (direct.size() != reverb.size()) throw std::invalid_argument("remix: length mismatch");
    double de = 0.0, re = 0.0;
    for (double v : direct) de += v * v;
    for (double v : reverb) re += v * v;
    if (re < 1e-20) return direct;
    const double g = std::sqrt(de / re) * std::pow(10.0, -target_db / 20.0);
    std::vector<double> out(direct.size());
    for (size_t i = 0; i < out.size(); ++i) out[i] = direct[i] + g * reverb[i];
    return out;
}

RtfReport benchmark_rtf(const Engine& engine, int frames) {
    if (frames <= 0) throw std::invalid_argument("benchmark_rtf: frame count must be positive");
    const int H = engine.stft_config().hop_size;
    StreamState st = engine.new_stream();
    std::mt19937_64 rng(0x5eed);
    std::uniform_real_distribution<double> dist(-0.5, 0.5);
    std::vector<double> in(H), od(H), orv(H), on(H);

    constexpr int kWarmup = 16;
    std::vector<double> ms;
    ms.reserve(frames);
    for (int i = 0; i < kWarmup + frames; ++i) {
        for (double& v : in) v = dist(rng);
        const auto t0 = std::chrono::steady_clock::now();
        engine.process_frame(st, in.data(), od.data(), orv.data(), on.data());
        const auto t1 = std::chrono::steady_clock::now();
        if (i >= kWarmup)
            ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
    }

    RtfReport r;
    r.frames_measured = frames;
    double sum = 0.0;
    for (double v : ms) sum += v;
    r.mean_frame_ms = sum / frames;
    std::sort(ms.begin(), ms.end());
    const size_t idx = std::min(ms.size() - 1, static_cast<size_t>(std::ceil(0.95 * frames)) - 1);
    r.p95_frame_ms = ms[idx];
    const double hop_ms = 1000.0 * H / 16000.0;
    r.rtf = r.mean_frame_ms / hop_ms;
    return r;
}

}  // namespace trunet
