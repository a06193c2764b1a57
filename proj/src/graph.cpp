#include "trunet/graph.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <random>
#include <stdexcept>

#include "trunet/kernels.hpp"
#include "trunet/quant.hpp"

namespace trunet {

namespace {

std::string dims_str(const std::vector<uint32_t>& dims) {
    std::string s = "[";
    for (size_t i = 0; i < dims.size(); ++i) {
        if (i) s += "x";
        s += std::to_string(dims[i]);
    }
    return s + "]";
}

void push_bn(std::vector<TensorSpec>& out, const std::string& prefix, uint32_t channels) {
    for (const char* part : {"gamma", "beta", "mean", "var"})
        out.push_back({prefix + ".bn." + part, {channels}, 0, false});
}

void push_gru(std::vector<TensorSpec>& out, const std::string& prefix, uint32_t input,
              uint32_t hidden) {
    out.push_back({prefix + ".W", {3 * hidden, input}, static_cast<int>(input), true});
    out.push_back({prefix + ".U", {3 * hidden, hidden}, static_cast<int>(hidden), true});
    out.push_back({prefix + ".b_input", {3 * hidden}, static_cast<int>(input), false});
    out.push_back({prefix + ".b_hidden", {3 * hidden}, static_cast<int>(hidden), false});
}

}  // namespace

std::vector<TensorSpec> tensor_schema(const TrunetConfig& cfg) {
    std::vector<TensorSpec> out;
    const uint32_t F = cfg.freq_bins;

    // encoder
    int cin = cfg.input_channels;
    {
        const LayerSpec& l = cfg.encoder[0];
        out.push_back({"enc.1.conv.w",
                       {static_cast<uint32_t>(l.kernel), static_cast<uint32_t>(cin),
                        static_cast<uint32_t>(l.channels)},
                       l.kernel * cin,
                       true});
        push_bn(out, "enc.1.conv", l.channels);
        cin = l.channels;
    }
    for (int b = 1; b < 6; ++b) {
        const LayerSpec& l = cfg.encoder[b];
        const std::string p = "enc." + std::to_string(b + 1);
        out.push_back({p + ".pw.w",
                       {1, static_cast<uint32_t>(cin), static_cast<uint32_t>(l.channels)},
                       cin,
                       true});
        push_bn(out, p + ".pw", l.channels);
        out.push_back({p + ".dw.w",
                       {static_cast<uint32_t>(l.kernel), static_cast<uint32_t>(l.channels)},
                       l.kernel,
                       true});
        push_bn(out, p + ".dw", l.channels);
        cin = l.channels;
    }
    const int bottleneck_c = cin;

    // FGRU block: bidirectional over frequency, then pointwise back down.
    // The pointwise input is 2*hidden = bottleneck channels, so the ablation
    // (no bi-GRU) reuses the same tensor shapes.
    if (cfg.with_fgru) {
        push_gru(out, "fgru.fw", bottleneck_c, cfg.fgru_hidden);
        push_gru(out, "fgru.bw", bottleneck_c, cfg.fgru_hidden);
    }
    out.push_back({"fgru.pw.w",
                   {1, static_cast<uint32_t>(bottleneck_c),
                    static_cast<uint32_t>(cfg.fgru_proj_channels)},
                   bottleneck_c,
                   true});
    push_bn(out, "fgru.pw", cfg.fgru_proj_channels);

    // TGRU block: one shared cell stepped per frequency position.
    push_gru(out, "tgru.cell", cfg.fgru_proj_channels, cfg.tgru_hidden);
    out.push_back({"tgru.pw.w",
                   {1, static_cast<uint32_t>(cfg.tgru_hidden),
                    static_cast<uint32_t>(cfg.tgru_proj_channels)},
                   cfg.tgru_hidden,
                   true});
    push_bn(out, "tgru.pw", cfg.tgru_proj_channels);

    // decoder: concat skip, project, transposed conv
    int cx = cfg.tgru_proj_channels;
    for (int b = 0; b < 6; ++b) {
        const LayerSpec& l = cfg.decoder[b];
        const int skip_c = cfg.encoder[5 - b].channels;
        const int concat_c = cx + skip_c;
        const std::string p = "dec." + std::to_string(b + 1);
        out.push_back({p + ".proj.w",
                       {1, static_cast<uint32_t>(concat_c),
                        static_cast<uint32_t>(cfg.decoder_proj_channels)},
                       concat_c,
                       true});
        push_bn(out, p + ".proj", cfg.decoder_proj_channels);
        out.push_back({p + ".tconv.w",
                       {static_cast<uint32_t>(l.kernel),
                        static_cast<uint32_t>(cfg.decoder_proj_channels),
                        static_cast<uint32_t>(l.channels)},
                       l.kernel * cfg.decoder_proj_channels,
                       true});
        push_bn(out, p + ".tconv", l.channels);
        cx = l.channels;
    }

    for (const char* part : {"s", "alpha", "delta", "r"})
        out.push_back({std::string("pcen.") + part, {F}, 0, false});
    return out;
}

WeightStore random_init(const TrunetConfig& cfg, uint64_t seed) {
    std::mt19937_64 rng(seed);
    WeightStore store;
    const PcenParams defaults = PcenParams::defaults(cfg.freq_bins);
    for (const TensorSpec& spec : tensor_schema(cfg)) {
        Tensor t = Tensor::make_f32(spec.name, spec.dims);
        if (spec.fan_in > 0) {
            const double k = 1.0 / std::sqrt(static_cast<double>(spec.fan_in));
            std::uniform_real_distribution<double> uni(-k, k);
            for (float& v : t.f32) v = static_cast<float>(uni(rng));
        } else if (spec.name.rfind("pcen.", 0) == 0) {
            const std::vector<double>* src = nullptr;
            if (spec.name == "pcen.s") src = &defaults.s;
            else if (spec.name == "pcen.alpha") src = &defaults.alpha;
            else if (spec.name == "pcen.delta") src = &defaults.delta;
            else src = &defaults.r;
            for (size_t i = 0; i < t.f32.size(); ++i) t.f32[i] = static_cast<float>((*src)[i]);
        } else {
            // BN: identity stats
            const bool ones = spec.name.size() > 6 &&
                              spec.name.compare(spec.name.size() - 6, 6, ".gamma") == 0;
            const bool var = spec.name.size() > 4 &&
                             spec.name.compare(spec.name.size() - 4, 4, ".var") == 0;
            std::fill(t.f32.begin(), t.f32.end(), ones || var ? 1.0f : 0.0f);
        }
        store.add(std::move(t));
    }
    return store;
}

TrunetConfig infer_config(const WeightStore& store) {
    TrunetConfig cfg;
    cfg.with_fgru = store.has("fgru.fw.W");
    return cfg;
}

PcenParams Network::pcen_params() const {
    PcenParams p;
    const int F = cfg_.freq_bins;
    p.s.resize(F);
    p.alpha.resize(F);
    p.delta.resize(F);
    p.r.resize(F);
    auto read = [&](const char* name, std::vector<double>& dst) {
        const Tensor& t = store_.get(name);
        for (int f = 0; f < F; ++f) dst[f] = t.f32[f];
    };
    read("pcen.s", p.s);
    read("pcen.alpha", p.alpha);
    read("pcen.delta", p.delta);
    read("pcen.r", p.r);
    return p;
}

Network::Network(const TrunetConfig& cfg, WeightStore store)
    : cfg_(cfg), store_(std::move(store)) {
    if (cfg_.freq_bins != 256)
        throw std::invalid_argument("network: decoder topology requires 256 frequency bins, got " +
                                    std::to_string(cfg_.freq_bins));
    if (cfg_.input_channels != 4)
        throw std::invalid_argument("network: expected 4 input feature channels");
    quantized_ = store_.any_i8();
    has_fgru_ = cfg_.with_fgru;

    // frequency ladder
    enc_f_.clear();
    int F = cfg_.freq_bins;
    for (int b = 0; b < 6; ++b) {
        F = conv_out_length(F, cfg_.encoder[b].stride);
        enc_f_.push_back(F);
    }
    bottleneck_f_ = F;
    int Fd = bottleneck_f_;
    for (int b = 0; b < 6; ++b) {
        const int skip_f = enc_f_[5 - b];
        if (Fd != skip_f)
            throw std::invalid_argument("network: decoder block " + std::to_string(b + 1) +
                                        " expects skip length " + std::to_string(Fd) + ", got " +
                                        std::to_string(skip_f));
        Fd *= cfg_.decoder[b].stride;
    }
    if (Fd != cfg_.freq_bins)
        throw std::invalid_argument("network: decoder ladder ends at " + std::to_string(Fd) +
                                    " bins instead of " + std::to_string(cfg_.freq_bins));

    // validate the store against the schema
    for (const TensorSpec& spec : tensor_schema(cfg_)) {
        if (!store_.has(spec.name))
            throw std::invalid_argument("network: missing tensor: " + spec.name);
        const Tensor& t = store_.get(spec.name);
        if (t.dims != spec.dims)
            throw std::invalid_argument("network: tensor '" + spec.name + "' has shape " +
                                        dims_str(t.dims) + ", expected " + dims_str(spec.dims));
        const bool want_i8 = quantized_ && spec.quantizable;
        if (want_i8 && t.dtype != Dtype::i8)
            throw std::invalid_argument("network: tensor '" + spec.name +
                                        "' must be i8 in a quantized store");
        if (!want_i8 && t.dtype != Dtype::f32)
            throw std::invalid_argument("network: tensor '" + spec.name + "' must be f32");
        if (want_i8 && t.scale <= 0.0)
            throw std::invalid_argument("network: tensor '" + spec.name + "' has no scale");
    }

    auto f32_ptr = [&](const std::string& name) { return store_.get(name).f32.data(); };
    auto wire_conv = [&](ConvRef& c, ConvRef::Kind kind, const std::string& prefix, int kernel,
                         int stride, int cin_, int cout_) {
        c.kind = kind;
        c.name = prefix;
        c.kernel = kernel;
        c.stride = stride;
        c.cin = cin_;
        c.cout = cout_;
        const Tensor& w = store_.get(prefix + ".w");
        if (quantized_) {
            c.qw = w.i8.data();
            c.w_scale = w.scale;
            const std::string qname = "qscale." + prefix;
            if (!store_.has(qname))
                throw std::invalid_argument("network: missing activation scale: " + qname);
            const Tensor& qs = store_.get(qname);
            if (qs.dtype != Dtype::f32 || qs.elements() != 1)
                throw std::invalid_argument("network: bad activation scale: " + qname);
            c.in_scale = qs.f32[0];
            if (c.in_scale <= 0.0)
                throw std::invalid_argument("network: non-positive activation scale: " + qname);
        } else {
            c.w = w.f32.data();
        }
        c.bn_gamma = f32_ptr(prefix + ".bn.gamma");
        c.bn_beta = f32_ptr(prefix + ".bn.beta");
        c.bn_mean = f32_ptr(prefix + ".bn.mean");
        c.bn_var = f32_ptr(prefix + ".bn.var");
        c.relu_after = true;
    };
    auto wire_gru = [&](GruRef& g, const std::string& prefix, int input, int hidden) {
        g.name = prefix;
        g.input = input;
        g.hidden = hidden;
        const Tensor& W = store_.get(prefix + ".W");
        const Tensor& U = store_.get(prefix + ".U");
        if (quantized_) {
            g.qW = W.i8.data();
            g.qU = U.i8.data();
            g.w_scale = W.scale;
            g.u_scale = U.scale;
        } else {
            g.W = W.f32.data();
            g.U = U.f32.data();
        }
        g.b_input = f32_ptr(prefix + ".b_input");
        g.b_hidden = f32_ptr(prefix + ".b_hidden");
    };

    int cin = cfg_.input_channels;
    wire_conv(enc_convs_[0], ConvRef::Kind::standard, "enc.1.conv", cfg_.encoder[0].kernel,
              cfg_.encoder[0].stride, cin, cfg_.encoder[0].channels);
    cin = cfg_.encoder[0].channels;
    for (int b = 1; b < 6; ++b) {
        const LayerSpec& l = cfg_.encoder[b];
        const std::string p = "enc." + std::to_string(b + 1);
        wire_conv(enc_convs_[2 * b - 1], ConvRef::Kind::pointwise, p + ".pw", 1, 1, cin,
                  l.channels);
        wire_conv(enc_convs_[2 * b], ConvRef::Kind::depthwise, p + ".dw", l.kernel, l.stride,
                  l.channels, l.channels);
        cin = l.channels;
    }
    const int bottleneck_c = cin;

    if (has_fgru_) {
        wire_gru(fgru_fw_, "fgru.fw", bottleneck_c, cfg_.fgru_hidden);
        wire_gru(fgru_bw_, "fgru.bw", bottleneck_c, cfg_.fgru_hidden);
    }
    wire_conv(fgru_pw_, ConvRef::Kind::pointwise, "fgru.pw", 1, 1, bottleneck_c,
              cfg_.fgru_proj_channels);
    wire_gru(tgru_, "tgru.cell", cfg_.fgru_proj_channels, cfg_.tgru_hidden);
    wire_conv(tgru_pw_, ConvRef::Kind::pointwise, "tgru.pw", 1, 1, cfg_.tgru_hidden,
              cfg_.tgru_proj_channels);

    int cx = cfg_.tgru_proj_channels;
    for (int b = 0; b < 6; ++b) {
        const LayerSpec& l = cfg_.decoder[b];
        const int skip_c = cfg_.encoder[5 - b].channels;
        const std::string p = "dec." + std::to_string(b + 1);
        wire_conv(dec_convs_[2 * b], ConvRef::Kind::pointwise, p + ".proj", 1, 1, cx + skip_c,
                  cfg_.decoder_proj_channels);
        wire_conv(dec_convs_[2 * b + 1], ConvRef::Kind::transposed, p + ".tconv", l.kernel,
                  l.stride, cfg_.decoder_proj_channels, l.channels);
        if (b == 5) dec_convs_[2 * b + 1].relu_after = false;  // raw mask heads
        cx = l.channels;
    }
}

std::vector<float> Network::run_conv(const ConvRef& layer, const float* in, int F,
                                     SiteObserver* obs) const {
    if (obs) obs->observe(layer.name, in, static_cast<size_t>(F) * layer.cin);
    std::vector<float> out;
    const char* nm = layer.name.c_str();
    if (!quantized_) {
        switch (layer.kind) {
            case ConvRef::Kind::standard:
                out = conv1d_standard(in, F, layer.cin, layer.w, layer.kernel, layer.cout,
                                      layer.stride, nullptr, nm);
                break;
            case ConvRef::Kind::pointwise:
                out = conv1d_pointwise(in, F, layer.cin, layer.w, layer.cout, nullptr, nm);
                break;
            case ConvRef::Kind::depthwise:
                out = conv1d_depthwise(in, F, layer.cin, layer.w, layer.kernel, layer.stride,
                                       nullptr, nm);
                break;
            case ConvRef::Kind::transposed:
                out = transposed_conv1d(in, F, layer.cin, layer.w, layer.kernel, layer.cout,
                                        layer.stride, nullptr, nm);
                break;
        }
    } else {
        switch (layer.kind) {
            case ConvRef::Kind::standard:
                out = qconv1d_standard(in, F, layer.cin, layer.qw, layer.w_scale, layer.in_scale,
                                       layer.kernel, layer.cout, layer.stride);
                break;
            case ConvRef::Kind::pointwise:
                out = qconv1d_pointwise(in, F, layer.cin, layer.qw, layer.w_scale, layer.in_scale,
                                        layer.cout);
                break;
            case ConvRef::Kind::depthwise:
                out = qconv1d_depthwise(in, F, layer.cin, layer.qw, layer.w_scale, layer.in_scale,
                                        layer.kernel, layer.stride);
                break;
            case ConvRef::Kind::transposed:
                out = qtransposed_conv1d(in, F, layer.cin, layer.qw, layer.w_scale,
                                         layer.in_scale, layer.kernel, layer.cout, layer.stride);
                break;
        }
    }
    const int Fo = layer.kind == ConvRef::Kind::transposed ? F * layer.stride
                                                           : conv_out_length(F, layer.stride);
    batch_norm_inference(out.data(), Fo, layer.cout, layer.bn_gamma, layer.bn_beta, layer.bn_mean,
                         layer.bn_var);
    if (layer.relu_after) relu(out.data(), out.size());
    return out;
}

GruWeights Network::gru_weights(const GruRef& g) const {
    GruWeights w;
    w.W = g.W;
    w.U = g.U;
    w.b_input = g.b_input;
    w.b_hidden = g.b_hidden;
    w.input = g.input;
    w.hidden = g.hidden;
    return w;
}

void Network::gru_step(const GruRef& g, const float* x, const float* h, float* h_out) const {
    if (!quantized_) {
        gru_cell_step(gru_weights(g), x, h, h_out);
    } else {
        QuantGruWeights q;
        q.W = g.qW;
        q.U = g.qU;
        q.w_scale = g.w_scale;
        q.u_scale = g.u_scale;
        q.b_input = g.b_input;
        q.b_hidden = g.b_hidden;
        q.input = g.input;
        q.hidden = g.hidden;
        dynamic_quant_gru_step(q, x, h, h_out);
    }
}

std::vector<std::vector<float>> Network::encode_frame(const float* features,
                                                      SiteObserver* obs) const {
    std::vector<std::vector<float>> skips;
    skips.reserve(6);
    int F = cfg_.freq_bins;
    std::vector<float> cur = run_conv(enc_convs_[0], features, F, obs);
    F = enc_f_[0];
    skips.push_back(std::move(cur));
    for (int b = 1; b < 6; ++b) {
        std::vector<float> t = run_conv(enc_convs_[2 * b - 1], skips.back().data(), F, obs);
        t = run_conv(enc_convs_[2 * b], t.data(), F, obs);
        F = enc_f_[b];
        skips.push_back(std::move(t));
    }
    return skips;
}

std::vector<float> Network::fgru_block(const std::vector<float>& bottleneck,
                                       SiteObserver* obs) const {
    const int L = bottleneck_f_;
    const int C = cfg_.encoder[5].channels;
    if (bottleneck.size() != static_cast<size_t>(L) * C)
        throw std::invalid_argument("fgru_block: bottleneck size mismatch");
    std::vector<float> seq;
    if (has_fgru_) {
        const int H = cfg_.fgru_hidden;
        seq.resize(static_cast<size_t>(L) * 2 * H);
        std::vector<float> h(H, 0.0f), hn(H);
        for (int l = 0; l < L; ++l) {
            gru_step(fgru_fw_, bottleneck.data() + static_cast<size_t>(l) * C, h.data(),
                     hn.data());
            h = hn;
            std::memcpy(seq.data() + static_cast<size_t>(l) * 2 * H, h.data(),
                        H * sizeof(float));
        }
        std::fill(h.begin(), h.end(), 0.0f);
        for (int l = L - 1; l >= 0; --l) {
            gru_step(fgru_bw_, bottleneck.data() + static_cast<size_t>(l) * C, h.data(),
                     hn.data());
            h = hn;
            std::memcpy(seq.data() + static_cast<size_t>(l) * 2 * H + H, h.data(),
                        H * sizeof(float));
        }
    } else {
        seq = bottleneck;
    }
    return run_conv(fgru_pw_, seq.data(), L, obs);
}

std::vector<float> Network::tgru_block(const std::vector<float>& x, TgruState& state,
                                       SiteObserver* obs) const {
    const int L = bottleneck_f_;
    const int C = cfg_.fgru_proj_channels;
    const int H = cfg_.tgru_hidden;
    if (x.size() != static_cast<size_t>(L) * C)
        throw std::invalid_argument("tgru_block: input size mismatch");
    if (state.positions != L || state.hidden != H)
        throw std::invalid_argument("tgru_block: state shape mismatch");
    std::vector<float> out(static_cast<size_t>(L) * H);
    for (int l = 0; l < L; ++l) {
        gru_step(tgru_, x.data() + static_cast<size_t>(l) * C,
                 state.h.data() + static_cast<size_t>(l) * H,
                 out.data() + static_cast<size_t>(l) * H);
    }
    std::memcpy(state.h.data(), out.data(), out.size() * sizeof(float));
    return run_conv(tgru_pw_, out.data(), L, obs);
}

FrameOutput Network::decode_frame(const std::vector<float>& x,
                                  const std::vector<std::vector<float>>& skips,
                                  SiteObserver* obs) const {
    if (skips.size() != 6) throw std::invalid_argument("decode_frame: expected 6 skips");
    int F = bottleneck_f_;
    std::vector<float> cur = x;
    int cx = cfg_.tgru_proj_channels;
    for (int b = 0; b < 6; ++b) {
        const std::vector<float>& skip = skips[5 - b];
        const int cs = cfg_.encoder[5 - b].channels;
        if (skip.size() != static_cast<size_t>(F) * cs)
            throw std::invalid_argument("decode_frame: skip size mismatch at block " +
                                        std::to_string(b + 1));
        std::vector<float> cat(static_cast<size_t>(F) * (cx + cs));
        for (int f = 0; f < F; ++f) {
            std::memcpy(cat.data() + static_cast<size_t>(f) * (cx + cs),
                        cur.data() + static_cast<size_t>(f) * cx, cx * sizeof(float));
            std::memcpy(cat.data() + static_cast<size_t>(f) * (cx + cs) + cx,
                        skip.data() + static_cast<size_t>(f) * cs, cs * sizeof(float));
        }
        cur = run_conv(dec_convs_[2 * b], cat.data(), F, obs);
        cur = run_conv(dec_convs_[2 * b + 1], cur.data(), F, obs);
        F *= cfg_.decoder[b].stride;
        cx = cfg_.decoder[b].channels;
    }
    FrameOutput out;
    out.bins = F;
    out.data = std::move(cur);
    return out;
}

TgruState Network::make_tgru_state() const {
    TgruState s;
    s.positions = bottleneck_f_;
    s.hidden = cfg_.tgru_hidden;
    s.h.assign(static_cast<size_t>(s.positions) * s.hidden, 0.0f);
    return s;
}

FrameOutput Network::forward_frame(const float* features, TgruState& state,
                                   SiteObserver* obs) const {
    std::vector<std::vector<float>> skips = encode_frame(features, obs);
    std::vector<float> mid = fgru_block(skips.back(), obs);
    mid = tgru_block(mid, state, obs);
    return decode_frame(mid, skips, obs);
}

std::vector<FrameOutput> Network::forward_offline(const FeatureTensor& features,
                                                  SiteObserver* obs) const {
    if (features.bins != cfg_.freq_bins)
        throw std::invalid_argument("forward_offline: feature bins mismatch");
    std::vector<FrameOutput> out;
    out.reserve(features.frames);
    TgruState state = make_tgru_state();
    for (int t = 0; t < features.frames; ++t)
        out.push_back(forward_frame(features.frame(t), state, obs));
    return out;
}

}  // namespace trunet
