#include "uspresence/pcm.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

namespace uspres {

namespace {

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v & 0xff));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v & 0xff));
    out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xff));
    out.push_back(static_cast<std::uint8_t>((v >> 16) & 0xff));
    out.push_back(static_cast<std::uint8_t>((v >> 24) & 0xff));
}

std::uint16_t get_u16(const std::uint8_t* p) {
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

std::uint32_t get_u32(const std::uint8_t* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::int16_t quantize(double x) {
    double clamped = std::clamp(x, -1.0, 1.0);
    return static_cast<std::int16_t>(std::lround(clamped * 32767.0));
}

} // namespace

std::vector<std::uint8_t> write_wav(const PcmFrame& pcm) {
    const std::uint32_t data_bytes = static_cast<std::uint32_t>(pcm.samples.size() * 2);
    const std::uint32_t rate = static_cast<std::uint32_t>(pcm.sample_rate);

    std::vector<std::uint8_t> out;
    out.reserve(44 + data_bytes);

    out.insert(out.end(), {'R', 'I', 'F', 'F'});
    put_u32(out, 36 + data_bytes);
    out.insert(out.end(), {'W', 'A', 'V', 'E'});

    out.insert(out.end(), {'f', 'm', 't', ' '});
    put_u32(out, 16);
    put_u16(out, 1);  // PCM
    put_u16(out, 1);  // mono
    put_u32(out, rate);
    put_u32(out, rate * 2);  // byte rate
    put_u16(out, 2);         // block align
    put_u16(out, 16);        // bits per sample

    out.insert(out.end(), {'d', 'a', 't', 'a'});
    put_u32(out, data_bytes);
    for (double s : pcm.samples) {
        put_u16(out, static_cast<std::uint16_t>(quantize(s)));
    }
    return out;
}

PcmFrame read_wav(const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
        std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
        throw WavError("not a RIFF/WAVE stream");
    }

    PcmFrame pcm;
    bool have_fmt = false;
    const std::uint8_t* data = nullptr;
    std::uint32_t data_len = 0;

    std::size_t pos = 12;
    while (pos + 8 <= bytes.size()) {
        const std::uint8_t* hdr = bytes.data() + pos;
        std::uint32_t chunk_len = get_u32(hdr + 4);
        if (pos + 8 + chunk_len > bytes.size()) {
            throw WavError("truncated chunk");
        }
        const std::uint8_t* body = hdr + 8;
        if (std::memcmp(hdr, "fmt ", 4) == 0) {
            if (chunk_len < 16) throw WavError("fmt chunk too short");
            std::uint16_t format = get_u16(body);
            std::uint16_t channels = get_u16(body + 2);
            std::uint32_t rate = get_u32(body + 4);
            std::uint16_t bits = get_u16(body + 14);
            if (format != 1 || channels != 1 || bits != 16) {
                throw WavError("unsupported format: need 16-bit mono PCM");
            }
            pcm.sample_rate = static_cast<int>(rate);
            have_fmt = true;
        } else if (std::memcmp(hdr, "data", 4) == 0) {
            data = body;
            data_len = chunk_len;
        }
        pos += 8 + chunk_len + (chunk_len & 1);  // chunks are word-aligned
    }

    if (!have_fmt) throw WavError("missing fmt chunk");
    if (data == nullptr) throw WavError("missing data chunk");
    if (data_len % 2 != 0) throw WavError("odd data chunk length");

    pcm.samples.resize(data_len / 2);
    for (std::size_t i = 0; i < pcm.samples.size(); ++i) {
        auto v = static_cast<std::int16_t>(get_u16(data + 2 * i));
        pcm.samples[i] = static_cast<double>(v) / 32767.0;
    }
    return pcm;
}

void write_wav_file(const PcmFrame& pcm, const std::string& path) {
    auto bytes = write_wav(pcm);
    std::ofstream f(path, std::ios::binary);
    if (!f) throw WavError("cannot open for writing: " + path);
    f.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
    if (!f) throw WavError("write failed: " + path);
}

PcmFrame read_wav_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw WavError("cannot open: " + path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                                    std::istreambuf_iterator<char>());
    return read_wav(bytes);
}

} // namespace uspres
