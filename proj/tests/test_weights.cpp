#include "trunet/weights.hpp"

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "doctest.h"

using namespace trunet;

namespace {

std::string temp_path(const char* stem) {
    return (std::filesystem::temp_directory_path() / stem).string();
}

WeightStore sample_store() {
    WeightStore store;
    Tensor a = Tensor::make_f32("enc.demo.w", {3, 2, 4});
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<float> dist(-1.0f, 1.0f);
    for (float& v : a.f32) v = dist(rng);
    store.add(std::move(a));

    std::vector<int8_t> q = {-127, -3, 0, 5, 127, 64};
    store.add(Tensor::make_i8("enc.demo.q", {6}, q, 0.0123));

    Tensor s = Tensor::make_f32("qscale.enc.demo", {1});
    s.f32[0] = 0.5f;
    store.add(std::move(s));
    return store;
}

std::vector<char> slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return std::vector<char>(std::istreambuf_iterator<char>(in), {});
}

void spit(const std::string& path, const std::vector<char>& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace

TEST_CASE("weight store add and lookup") {
    WeightStore store = sample_store();
    REQUIRE(store.has("enc.demo.w"));
    REQUIRE(!store.has("nope"));
    REQUIRE(store.get("enc.demo.q").scale == doctest::Approx(0.0123));
    REQUIRE(store.any_i8());
    REQUIRE_THROWS_WITH(store.get("nope"), doctest::Contains("missing tensor: nope"));
    REQUIRE_THROWS(store.add(Tensor::make_f32("enc.demo.w", {1})));
}

TEST_CASE("parameter count skips qscale entries") {
    const WeightStore store = sample_store();
    REQUIRE(parameter_count(store) == 3 * 2 * 4 + 6);
}

TEST_CASE("save load round trip preserves everything") {
    const std::string path = temp_path("trunet_rt.truw");
    const WeightStore store = sample_store();
    save_weights(store, path);

    const WeightStore loaded = load_weights(path);
    REQUIRE(loaded.tensors().size() == store.tensors().size());
    for (size_t i = 0; i < store.tensors().size(); ++i) {
        const Tensor& a = store.tensors()[i];
        const Tensor& b = loaded.tensors()[i];
        REQUIRE(a.name == b.name);
        REQUIRE(a.dtype == b.dtype);
        REQUIRE(a.dims == b.dims);
        REQUIRE(a.f32 == b.f32);
        REQUIRE(a.i8 == b.i8);
        if (a.dtype == Dtype::i8) REQUIRE(a.scale == b.scale);
    }

    // a second save of the loaded store is byte identical
    const std::string path2 = temp_path("trunet_rt2.truw");
    save_weights(loaded, path2);
    REQUIRE(slurp(path) == slurp(path2));
    std::filesystem::remove(path);
    std::filesystem::remove(path2);
}

TEST_CASE("file format is stable at the byte level") {
    // hand built file: one f32 tensor "ab" with dims {2}, payload {1.0f, -2.0f}
    std::vector<char> bytes;
    const auto push = [&](const void* p, size_t n) {
        const char* c = static_cast<const char*>(p);
        bytes.insert(bytes.end(), c, c + n);
    };
    push("TRUW", 4);
    const uint32_t version = 1, count = 1;
    push(&version, 4);
    push(&count, 4);
    const uint16_t name_len = 2;
    push(&name_len, 2);
    push("ab", 2);
    const uint8_t dtype = 0, ndim = 1;
    push(&dtype, 1);
    push(&ndim, 1);
    const uint32_t dim0 = 2;
    push(&dim0, 4);
    const float payload[2] = {1.0f, -2.0f};
    push(payload, 8);

    const std::string path = temp_path("trunet_handmade.truw");
    spit(path, bytes);
    const WeightStore store = load_weights(path);
    REQUIRE(store.tensors().size() == 1);
    REQUIRE(store.get("ab").dims == std::vector<uint32_t>{2});
    REQUIRE(store.get("ab").f32 == std::vector<float>{1.0f, -2.0f});
    std::filesystem::remove(path);
}

TEST_CASE("loader rejects corrupt files") {
    const std::string path = temp_path("trunet_corrupt.truw");
    save_weights(sample_store(), path);
    const std::vector<char> good = slurp(path);

    auto mutate = [&](auto fn) {
        std::vector<char> bad = good;
        fn(bad);
        spit(path, bad);
        return path;
    };

    SUBCASE("bad magic") {
        mutate([](std::vector<char>& b) { b[0] = 'X'; });
        REQUIRE_THROWS_WITH(load_weights(path), doctest::Contains("bad magic"));
    }
    SUBCASE("bad version") {
        mutate([](std::vector<char>& b) { b[4] = 9; });
        REQUIRE_THROWS_WITH(load_weights(path), doctest::Contains("unsupported weight file version"));
    }
    SUBCASE("truncated") {
        mutate([](std::vector<char>& b) { b.resize(b.size() - 3); });
        REQUIRE_THROWS_WITH(load_weights(path), doctest::Contains("truncated weight file"));
    }
    SUBCASE("trailing bytes") {
        mutate([](std::vector<char>& b) { b.push_back(0); });
        REQUIRE_THROWS_WITH(load_weights(path), doctest::Contains("trailing bytes"));
    }
    SUBCASE("unknown dtype") {
        // first record: 4 magic + 4 version + 4 count + 2 name_len + 10 name
        mutate([](std::vector<char>& b) { b[24] = 7; });
        REQUIRE_THROWS_WITH(load_weights(path), doctest::Contains("unknown dtype"));
    }
    SUBCASE("missing file") {
        std::filesystem::remove(path);
        REQUIRE_THROWS(load_weights(path));
    }
    std::filesystem::remove(path);
}

TEST_CASE("loader rejects duplicate tensor names") {
    // two records with the same name, built by hand since the store refuses
    std::vector<char> bytes;
    const auto push = [&](const void* p, size_t n) {
        const char* c = static_cast<const char*>(p);
        bytes.insert(bytes.end(), c, c + n);
    };
    push("TRUW", 4);
    const uint32_t version = 1, count = 2;
    push(&version, 4);
    push(&count, 4);
    for (int rep = 0; rep < 2; ++rep) {
        const uint16_t name_len = 1;
        push(&name_len, 2);
        push("x", 1);
        const uint8_t dtype = 0, ndim = 1;
        push(&dtype, 1);
        push(&ndim, 1);
        const uint32_t dim0 = 1;
        push(&dim0, 4);
        const float v = 0.0f;
        push(&v, 4);
    }
    const std::string path = temp_path("trunet_dup.truw");
    spit(path, bytes);
    REQUIRE_THROWS_WITH(load_weights(path), doctest::Contains("duplicate tensor name"));
    std::filesystem::remove(path);
}
