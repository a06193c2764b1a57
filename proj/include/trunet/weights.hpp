#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

namespace trunet {

enum class Dtype : uint8_t { f32 = 0, i8 = 1 };

struct Tensor {
    std::string name;
    Dtype dtype = Dtype::f32;
    std::vector<uint32_t> dims;
    std::vector<float> f32;
    std::vector<int8_t> i8;
    double scale = 0.0;  // meaningful for i8 only

    size_t elements() const {
        size_t n = 1;
        for (uint32_t d : dims) n *= d;
        return n;
    }

    static Tensor make_f32(std::string name, std::vector<uint32_t> dims);
    static Tensor make_i8(std::string name, std::vector<uint32_t> dims,
                          std::vector<int8_t> data, double scale);
};

class WeightStore {
public:
    void add(Tensor t);  // rejects duplicate names
    bool has(const std::string& name) const { return index_.count(name) != 0; }
    const Tensor& get(const std::string& name) const;
    Tensor& get_mut(const std::string& name);
    const std::vector<Tensor>& tensors() const { return tensors_; }
    bool any_i8() const;

private:
    std::vector<Tensor> tensors_;
    std::unordered_map<std::string, size_t> index_;
};

// Little-endian container: magic "TRUW", version u32 = 1, tensor count u32,
// then per tensor: name_len u16, name bytes, dtype u8, ndim u8, dims u32 each,
// scale f64 (i8 tensors only), raw payload. No padding anywhere.
void save_weights(const WeightStore& store, const std::string& path);
WeightStore load_weights(const std::string& path);

// Total stored elements across f32 and i8 tensors, excluding calibration
// metadata (qscale.* entries).
uint64_t parameter_count(const WeightStore& store);

}  // namespace trunet
