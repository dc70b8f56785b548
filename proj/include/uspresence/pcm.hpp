#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace uspres {

// Mono audio buffer. Samples are amplitudes in [-1.0, +1.0].
struct PcmFrame {
    int sample_rate = 48000;
    std::vector<double> samples;

    std::size_t size() const { return samples.size(); }
    double duration_s() const {
        return static_cast<double>(samples.size()) / sample_rate;
    }
};

struct WavError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Canonical RIFF/WAVE, 16-bit signed little-endian mono PCM.
// Round-trip error is at most 1/32767 per sample.
std::vector<std::uint8_t> write_wav(const PcmFrame& pcm);
PcmFrame read_wav(const std::vector<std::uint8_t>& bytes);

void write_wav_file(const PcmFrame& pcm, const std::string& path);
PcmFrame read_wav_file(const std::string& path);

} // namespace uspres
