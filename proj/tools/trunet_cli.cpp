#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <memory>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "trunet/engine.hpp"
#include "trunet/graph.hpp"
#include "trunet/losses.hpp"
#include "trunet/quant.hpp"
#include "trunet/wav_io.hpp"
#include "trunet/weights.hpp"

namespace {

using namespace trunet;

// exit codes: 0 success, 1 usage, 2 bad data or file, 3 failed check

void check_int8_flag(const WeightStore& store, bool want_int8) {
    if (store.any_i8() && !want_int8)
        throw std::runtime_error("weight file is quantized; pass --int8 to run it");
    if (!store.any_i8() && want_int8)
        throw std::runtime_error("--int8 given but the weight file holds f32 weights");
}

std::shared_ptr<const Network> build_network(WeightStore store) {
    const TrunetConfig cfg = infer_config(store);
    return std::make_shared<const Network>(cfg, std::move(store));
}

EngineOptions make_options(const std::string& sign_mode, double tau, uint64_t seed) {
    EngineOptions opts;
    opts.sign_mode = sign_mode == "gumbel" ? SignMode::gumbel : SignMode::hard;
    opts.tau = tau;
    opts.seed = seed;
    return opts;
}

std::set<std::string> parse_emit(const std::string& emit) {
    std::set<std::string> out;
    std::stringstream ss(emit);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (tok != "d" && tok != "r" && tok != "n" && tok != "mix")
            throw std::runtime_error("--emit: unknown token '" + tok +
                                     "' (expected d, r, n or mix)");
        out.insert(tok);
    }
    if (out.empty()) throw std::runtime_error("--emit: empty list");
    return out;
}

void run_enhance(const std::string& input, const std::string& weights,
                 const std::string& out_dir, bool use_int8, double remix_db,
                 const std::string& emit, const std::string& sign_mode, double tau,
                 uint64_t seed) {
    const AudioBuffer in = wav_read(input);
    WeightStore store = load_weights(weights);
    check_int8_flag(store, use_int8);
    const Engine engine(build_network(std::move(store)));

    const SourceTriple out = engine.enhance_streaming(in.samples, make_options(sign_mode, tau, seed));

    const std::set<std::string> want = parse_emit(emit);
    std::filesystem::create_directories(out_dir);
    const auto write = [&](const std::string& name, const std::vector<double>& samples) {
        AudioBuffer buf;
        buf.samples = samples;
        buf.sample_rate = in.sample_rate;
        const std::string path = (std::filesystem::path(out_dir) / name).string();
        wav_write(path, buf, WavFormat::float32);
        std::cout << "wrote " << path << " (" << samples.size() << " samples)\n";
    };
    if (want.count("d")) write("direct.wav", out.direct);
    if (want.count("r")) write("reverb.wav", out.reverb);
    if (want.count("n")) write("noise.wav", out.noise);
    if (want.count("mix")) write("remix.wav", remix(out.direct, out.reverb, remix_db));
    std::cout << "algorithmic latency: " << engine.latency_samples() << " samples\n";
}

void run_bench(const std::string& weights, bool use_int8, int frames) {
    WeightStore store = load_weights(weights);
    check_int8_flag(store, use_int8);
    const Engine engine(build_network(std::move(store)));

    const RtfReport r = benchmark_rtf(engine, frames);
    const double hop_ms = 1000.0 * engine.stft_config().hop_size / 16000.0;
    std::printf("%d frames: mean %.4f ms, p95 %.4f ms per %.1f ms hop\n", r.frames_measured,
                r.mean_frame_ms, r.p95_frame_ms, hop_ms);
    std::printf("frames_measured=%d\n", r.frames_measured);
    std::printf("mean_frame_ms=%.6f\n", r.mean_frame_ms);
    std::printf("p95_frame_ms=%.6f\n", r.p95_frame_ms);
    std::printf("rtf=%.6f\n", r.rtf);
}

void run_init(uint64_t seed, const std::string& out, bool no_fgru) {
    TrunetConfig cfg;
    cfg.with_fgru = !no_fgru;
    const WeightStore store = random_init(cfg, seed);
    save_weights(store, out);
    std::cout << "wrote " << out << " (" << parameter_count(store) << " parameters)\n";
}

void run_quantize(const std::string& weights, const std::vector<std::string>& calib,
                  const std::string& out) {
    const WeightStore store = load_weights(weights);
    const TrunetConfig cfg = infer_config(store);
    std::vector<AudioBuffer> clips;
    clips.reserve(calib.size());
    for (const std::string& path : calib) clips.push_back(wav_read(path));
    const WeightStore q = quantize_model(store, cfg, clips);
    save_weights(q, out);
    std::cout << "wrote " << out << " (" << std::filesystem::file_size(out) << " bytes, from "
              << std::filesystem::file_size(weights) << ")\n";
}

void run_inspect(const std::string& path) {
    const WeightStore store = load_weights(path);
    for (const Tensor& t : store.tensors()) {
        std::string shape;
        for (size_t i = 0; i < t.dims.size(); ++i) {
            if (i) shape += "x";
            shape += std::to_string(t.dims[i]);
        }
        std::printf("%-22s %-4s %-12s", t.name.c_str(), t.dtype == Dtype::i8 ? "i8" : "f32",
                    shape.c_str());
        if (t.dtype == Dtype::i8) std::printf(" scale=%.8g", t.scale);
        std::printf("\n");
    }
    std::printf("tensors: %zu\n", store.tensors().size());
    std::printf("parameters: %llu\n",
                static_cast<unsigned long long>(parameter_count(store)));
    std::printf("file_bytes: %llu\n",
                static_cast<unsigned long long>(std::filesystem::file_size(path)));
}

int run_gradcheck(int trials, uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> amp(-1.0, 1.0);
    std::uniform_int_distribution<int> len(600, 6000);
    std::uniform_int_distribution<int> probe_count(4, 4);

    double max_rel = 0.0;
    for (int trial = 0; trial < trials; ++trial) {
        const int n = len(rng);
        std::vector<double> y(n), yhat(n);
        for (double& v : y) v = amp(rng);
        for (double& v : yhat) v = amp(rng);

        const std::vector<double> grad = wav_loss_gradient(y, yhat);
        std::uniform_int_distribution<int> pick(0, n - 1);
        for (int k = 0; k < probe_count(rng); ++k) {
            const int j = pick(rng);
            const double h = 1e-4;
            const double saved = yhat[j];
            yhat[j] = saved + h;
            const double lp = multiscale_wav_loss(y, yhat);
            yhat[j] = saved - h;
            const double lm = multiscale_wav_loss(y, yhat);
            yhat[j] = saved;
            const double fd = (lp - lm) / (2.0 * h);
            const double rel = std::abs(grad[j] - fd) / std::max(std::abs(fd), 1e-8);
            max_rel = std::max(max_rel, rel);
        }
    }
    std::printf("trials=%d\n", trials);
    std::printf("max_rel_err=%.3e\n", max_rel);
    const bool ok = max_rel < 1e-4;
    std::printf("%s\n", ok ? "gradcheck passed" : "gradcheck FAILED");
    return ok ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"TRU-Net streaming speech enhancement"};
    app.require_subcommand(1);
    int rc = 0;

    std::string en_input, en_weights, en_out_dir, en_emit = "d,r,n,mix", en_sign = "hard";
    bool en_int8 = false;
    double en_remix_db = 15.0, en_tau = 1.0;
    uint64_t en_seed = 0;
    auto* enhance = app.add_subcommand(
        "enhance", "Split a mix into direct/reverb/noise estimates and write a remix");
    enhance->add_option("--input", en_input, "mono 16 kHz wav")->required();
    enhance->add_option("--weights", en_weights, "weight file")->required();
    enhance->add_option("--out-dir", en_out_dir, "output directory")->required();
    enhance->add_flag("--int8", en_int8, "run the quantized model (file must be quantized)");
    enhance->add_option("--remix-db", en_remix_db, "direct-to-reverb ratio of remix.wav [dB]");
    enhance->add_option("--emit", en_emit, "comma list of outputs: d,r,n,mix");
    enhance->add_option("--sign-mode", en_sign, "phase sign selection")
        ->check(CLI::IsMember({"hard", "gumbel"}));
    enhance->add_option("--tau", en_tau, "gumbel temperature");
    enhance->add_option("--seed", en_seed, "gumbel seed");
    enhance->callback([&] {
        run_enhance(en_input, en_weights, en_out_dir, en_int8, en_remix_db, en_emit, en_sign,
                    en_tau, en_seed);
    });

    std::string be_weights;
    bool be_int8 = false;
    int be_frames = 1000;
    auto* bench = app.add_subcommand("bench", "Measure per-frame wall time and real-time factor");
    bench->add_option("--weights", be_weights, "weight file")->required();
    bench->add_flag("--int8", be_int8, "run the quantized model");
    bench->add_option("--frames", be_frames, "frames to measure")->check(CLI::PositiveNumber);
    bench->callback([&] { run_bench(be_weights, be_int8, be_frames); });

    std::string in_out;
    uint64_t in_seed = 1;
    bool in_no_fgru = false;
    auto* init = app.add_subcommand("init-weights", "Write randomly initialized weights");
    init->add_option("--out", in_out, "output weight file")->required();
    init->add_option("--seed", in_seed, "rng seed");
    init->add_flag("--no-fgru", in_no_fgru, "drop the frequency GRU (ablation)");
    init->callback([&] { run_init(in_seed, in_out, in_no_fgru); });

    std::string qu_weights, qu_out;
    std::vector<std::string> qu_calib;
    auto* quant = app.add_subcommand("quantize", "Calibrate and quantize an f32 weight file");
    quant->add_option("--weights", qu_weights, "f32 weight file")->required();
    quant->add_option("--calib", qu_calib, "calibration wav files")->required()->expected(1, -1);
    quant->add_option("--out", qu_out, "output weight file")->required();
    quant->callback([&] { run_quantize(qu_weights, qu_calib, qu_out); });

    std::string is_path;
    auto* inspect = app.add_subcommand("inspect", "List the tensors in a weight file");
    inspect->add_option("file", is_path, "weight file")->required();
    inspect->callback([&] { run_inspect(is_path); });

    int gc_trials = 100;
    uint64_t gc_seed = 7;
    auto* gradcheck =
        app.add_subcommand("gradcheck", "Finite-difference check of the waveform loss gradient");
    gradcheck->add_option("--trials", gc_trials, "random pairs to test")
        ->check(CLI::PositiveNumber);
    gradcheck->add_option("--seed", gc_seed, "rng seed");
    gradcheck->callback([&] { rc = run_gradcheck(gc_trials, gc_seed); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return rc;
}
