#include "trunet/weights.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace trunet {

namespace {

constexpr char kMagic[4] = {'T', 'R', 'U', 'W'};
constexpr uint32_t kVersion = 1;

void check_payload(const Tensor& t) {
    if (t.name.empty()) throw std::invalid_argument("tensor: empty name");
    if (t.name.size() > 0xffff) throw std::invalid_argument("tensor: name too long");
    if (t.dims.empty()) throw std::invalid_argument("tensor '" + t.name + "': no dims");
    const size_t n = t.elements();
    if (t.dtype == Dtype::f32) {
        if (t.f32.size() != n)
            throw std::invalid_argument("tensor '" + t.name + "': f32 payload size mismatch");
    } else {
        if (t.i8.size() != n)
            throw std::invalid_argument("tensor '" + t.name + "': i8 payload size mismatch");
    }
}

template <typename T>
void put(std::string& out, const T& v) {
    const char* p = reinterpret_cast<const char*>(&v);
    out.append(p, sizeof(T));
}

class Reader {
public:
    Reader(const std::string& buf, const std::string& path) : buf_(buf), path_(path) {}

    template <typename T>
    T get() {
        T v;
        raw(&v, sizeof(T));
        return v;
    }

    void raw(void* dst, size_t n) {
        if (pos_ + n > buf_.size())
            throw std::runtime_error("truncated weight file: " + path_);
        std::memcpy(dst, buf_.data() + pos_, n);
        pos_ += n;
    }

    bool done() const { return pos_ == buf_.size(); }

private:
    const std::string& buf_;
    std::string path_;
    size_t pos_ = 0;
};

}  // namespace

Tensor Tensor::make_f32(std::string name, std::vector<uint32_t> dims) {
    Tensor t;
    t.name = std::move(name);
    t.dtype = Dtype::f32;
    t.dims = std::move(dims);
    t.f32.assign(t.elements(), 0.0f);
    return t;
}

Tensor Tensor::make_i8(std::string name, std::vector<uint32_t> dims, std::vector<int8_t> data,
                       double scale) {
    Tensor t;
    t.name = std::move(name);
    t.dtype = Dtype::i8;
    t.dims = std::move(dims);
    t.i8 = std::move(data);
    t.scale = scale;
    check_payload(t);
    return t;
}

void WeightStore::add(Tensor t) {
    check_payload(t);
    if (index_.count(t.name))
        throw std::invalid_argument("duplicate tensor name: " + t.name);
    index_.emplace(t.name, tensors_.size());
    tensors_.push_back(std::move(t));
}

const Tensor& WeightStore::get(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw std::out_of_range("missing tensor: " + name);
    return tensors_[it->second];
}

Tensor& WeightStore::get_mut(const std::string& name) {
    auto it = index_.find(name);
    if (it == index_.end()) throw std::out_of_range("missing tensor: " + name);
    return tensors_[it->second];
}

bool WeightStore::any_i8() const {
    for (const Tensor& t : tensors_)
        if (t.dtype == Dtype::i8) return true;
    return false;
}

void save_weights(const WeightStore& store, const std::string& path) {
    std::string out;
    out.append(kMagic, 4);
    put(out, kVersion);
    put(out, static_cast<uint32_t>(store.tensors().size()));
    for (const Tensor& t : store.tensors()) {
        check_payload(t);
        put(out, static_cast<uint16_t>(t.name.size()));
        out.append(t.name);
        put(out, static_cast<uint8_t>(t.dtype));
        put(out, static_cast<uint8_t>(t.dims.size()));
        for (uint32_t d : t.dims) put(out, d);
        if (t.dtype == Dtype::i8) {
            put(out, t.scale);
            out.append(reinterpret_cast<const char*>(t.i8.data()), t.i8.size());
        } else {
            out.append(reinterpret_cast<const char*>(t.f32.data()), t.f32.size() * sizeof(float));
        }
    }
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) throw std::runtime_error("write failed: " + path);
}

WeightStore load_weights(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open weight file: " + path);
    std::string buf((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());

    Reader r(buf, path);
    char magic[4];
    r.raw(magic, 4);
    if (std::memcmp(magic, kMagic, 4) != 0)
        throw std::runtime_error("bad magic in weight file: " + path);
    const uint32_t version = r.get<uint32_t>();
    if (version != kVersion)
        throw std::runtime_error("unsupported weight file version " + std::to_string(version) +
                                 ": " + path);
    const uint32_t count = r.get<uint32_t>();

    WeightStore store;
    for (uint32_t i = 0; i < count; ++i) {
        Tensor t;
        const uint16_t name_len = r.get<uint16_t>();
        t.name.resize(name_len);
        r.raw(t.name.data(), name_len);
        const uint8_t dtype = r.get<uint8_t>();
        if (dtype > 1)
            throw std::runtime_error("unknown dtype in weight file: " + t.name);
        t.dtype = static_cast<Dtype>(dtype);
        const uint8_t ndim = r.get<uint8_t>();
        if (ndim == 0) throw std::runtime_error("tensor with no dims: " + t.name);
        t.dims.resize(ndim);
        for (uint8_t d = 0; d < ndim; ++d) t.dims[d] = r.get<uint32_t>();
        const size_t n = t.elements();
        if (t.dtype == Dtype::i8) {
            t.scale = r.get<double>();
            t.i8.resize(n);
            r.raw(t.i8.data(), n);
        } else {
            t.f32.resize(n);
            r.raw(t.f32.data(), n * sizeof(float));
        }
        if (store.has(t.name))
            throw std::runtime_error("duplicate tensor name in weight file: " + t.name);
        store.add(std::move(t));
    }
    if (!r.done()) throw std::runtime_error("trailing bytes in weight file: " + path);
    return store;
}

uint64_t parameter_count(const WeightStore& store) {
    uint64_t n = 0;
    for (const Tensor& t : store.tensors()) {
        if (t.name.rfind("qscale.", 0) == 0) continue;
        n += t.elements();
    }
    return n;
}

}  // namespace trunet
