#include "trunet/wav_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace trunet {

namespace {

template <typename T>
void put(std::string& out, const T& v) {
    const char* p = reinterpret_cast<const char*>(&v);
    out.append(p, sizeof(T));
}

struct Cursor {
    const std::string& buf;
    const std::string& path;
    size_t pos = 0;

    void need(size_t n) const {
        if (pos + n > buf.size()) throw std::runtime_error("truncated wav file: " + path);
    }
    template <typename T>
    T get() {
        need(sizeof(T));
        T v;
        std::memcpy(&v, buf.data() + pos, sizeof(T));
        pos += sizeof(T);
        return v;
    }
    std::string tag() {
        need(4);
        std::string t = buf.substr(pos, 4);
        pos += 4;
        return t;
    }
    void skip(size_t n) {
        need(n);
        pos += n;
    }
};

}  // namespace

AudioBuffer wav_read(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open wav file: " + path);
    std::string buf((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());

    Cursor c{buf, path};
    if (c.tag() != "RIFF") throw std::runtime_error("not a RIFF file: " + path);
    c.get<uint32_t>();  // riff size, unreliable in the wild
    if (c.tag() != "WAVE") throw std::runtime_error("not a WAVE file: " + path);

    uint16_t format = 0, channels = 0, bits = 0;
    uint32_t rate = 0;
    bool have_fmt = false;
    AudioBuffer out;
    bool have_data = false;

    while (c.pos + 8 <= buf.size()) {
        const std::string id = c.tag();
        const uint32_t size = c.get<uint32_t>();
        if (id == "fmt ") {
            c.need(size);
            const size_t base = c.pos;
            format = c.get<uint16_t>();
            channels = c.get<uint16_t>();
            rate = c.get<uint32_t>();
            c.get<uint32_t>();  // byte rate
            c.get<uint16_t>();  // block align
            bits = c.get<uint16_t>();
            c.pos = base + size;
            have_fmt = true;
        } else if (id == "data") {
            if (!have_fmt) throw std::runtime_error("wav data before fmt chunk: " + path);
            c.need(size);
            if (channels != 1)
                throw std::runtime_error("wav is not mono (" + std::to_string(channels) +
                                         " channels); downmix to mono first: " + path);
            if (rate != 16000)
                throw std::runtime_error("wav sample rate is " + std::to_string(rate) +
                                         " Hz; resample to 16000 Hz first: " + path);
            if (format == 1 && bits == 16) {
                const size_t n = size / 2;
                out.samples.resize(n);
                for (size_t i = 0; i < n; ++i) {
                    int16_t v;
                    std::memcpy(&v, buf.data() + c.pos + 2 * i, 2);
                    out.samples[i] = v / 32768.0;
                }
            } else if (format == 3 && bits == 32) {
                const size_t n = size / 4;
                out.samples.resize(n);
                for (size_t i = 0; i < n; ++i) {
                    float v;
                    std::memcpy(&v, buf.data() + c.pos + 4 * i, 4);
                    out.samples[i] = v;
                }
            } else {
                throw std::runtime_error("unsupported wav encoding (format " +
                                         std::to_string(format) + ", " + std::to_string(bits) +
                                         " bit); use 16-bit PCM or 32-bit float: " + path);
            }
            out.sample_rate = static_cast<int>(rate);
            have_data = true;
            c.skip(size);
        } else {
            c.skip(size);
        }
        if (size % 2 == 1 && c.pos < buf.size()) c.skip(1);  // chunk padding
    }
    if (!have_data) throw std::runtime_error("wav file has no data chunk: " + path);
    return out;
}

void wav_write(const std::string& path, const AudioBuffer& audio, WavFormat format) {
    if (audio.sample_rate <= 0) throw std::invalid_argument("wav_write: bad sample rate");
    const uint32_t rate = static_cast<uint32_t>(audio.sample_rate);
    const uint16_t bits = format == WavFormat::pcm16 ? 16 : 32;
    const uint16_t block = bits / 8;
    const uint32_t data_size = static_cast<uint32_t>(audio.samples.size() * block);

    std::string out;
    out.append("RIFF");
    put(out, static_cast<uint32_t>(4 + 24 + 8 + data_size));
    out.append("WAVE");
    out.append("fmt ");
    put(out, static_cast<uint32_t>(16));
    put(out, static_cast<uint16_t>(format == WavFormat::pcm16 ? 1 : 3));
    put(out, static_cast<uint16_t>(1));
    put(out, rate);
    put(out, rate * block);
    put(out, block);
    put(out, bits);
    out.append("data");
    put(out, data_size);
    if (format == WavFormat::pcm16) {
        for (double s : audio.samples) {
            const double scaled = std::round(s * 32768.0);
            put(out, static_cast<int16_t>(std::clamp(scaled, -32768.0, 32767.0)));
        }
    } else {
        for (double s : audio.samples) put(out, static_cast<float>(s));
    }

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) throw std::runtime_error("write failed: " + path);
}

}  // namespace trunet
