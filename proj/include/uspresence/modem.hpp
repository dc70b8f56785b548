#pragma once

#include "uspresence/pcm.hpp"

#include <array>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace uspres::modem {

struct InvalidFrame : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct InvalidChannel : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Open 4-FSK scheme, 2 bits per symbol. Tone k of channel c sits at
// channel_base_hz + c*channel_spacing_hz + k*tone_spacing_hz. With the
// defaults every tone offset is a multiple of the 100 Hz analysis bin
// (sample_rate/symbol_len), so symbol-aligned Goertzel detection is
// orthogonal across tones and channels without a window function.
struct ModemParams {
    int sample_rate = 48000;
    int symbol_len = 480;  // 10 ms symbols
    double channel_base_hz = 20000.0;
    double channel_spacing_hz = 900.0;
    double tone_spacing_hz = 200.0;
    int tones_per_channel = 4;
    int channel_count = 4;
    std::array<int, 4> preamble = {3, 0, 3, 0};
    double detection_snr_db = 6.0;    // preamble tone must beat its channel
                                      // neighbours by this much
    double noise_floor_dbfs = -55.0;  // squelch: symbols whose winning tone
                                      // maps to an amplitude below this are
                                      // not accepted
    int ramp_len = 48;                // 1 ms raised-cosine symbol edges

    double tone_hz(int channel, int tone) const {
        return channel_base_hz + channel * channel_spacing_hz + tone * tone_spacing_hz;
    }
    double max_tone_hz() const {
        return tone_hz(channel_count - 1, tones_per_channel - 1);
    }
    bool nyquist_safe() const { return max_tone_hz() < sample_rate / 2.0; }

    // Inaudible band, Nyquist headroom, and bin alignment of every tone.
    void validate() const;
};

inline constexpr int kMaxPayloadChars = 16;

// CRC-8, polynomial 0x07, init 0x00, no reflection, no final XOR.
std::uint8_t crc8(std::span<const std::uint8_t> bytes);

// A framed ultrasonic message. Payload is 1..16 hex characters; the CRC
// covers the byte sequence [len-1] ++ packed payload nibbles (first nibble
// high, odd tail padded with a zero low nibble).
struct UsFrame {
    int channel = 0;
    std::string payload;  // hex characters, stored lowercase

    std::uint8_t crc() const;
};

bool is_hex_payload(const std::string& payload);
std::vector<std::uint8_t> pack_nibbles(const std::string& hex_payload);

// On-air layout: preamble (4 symbols) | length-1 (2 symbols) | payload
// (2 symbols per hex char) | crc (4 symbols).
std::size_t frame_samples(std::size_t payload_chars, const ModemParams& params = {});

PcmFrame encode(const UsFrame& frame, const ModemParams& params = {},
                double amplitude = 1.0);

// DFT magnitude |sum x[n] e^(-2*pi*i*freq*n/fs)| of the window via the
// Goertzel recurrence; freq_hz need not be bin-aligned.
double goertzel_mag(const PcmFrame& pcm, std::size_t start, std::size_t len,
                    double freq_hz);

struct DecodedFrame {
    std::string payload;
    std::size_t start_sample = 0;
};

// Scans the stream with a hop of symbol_len/4. Total: candidates that fail
// sync, squelch, or CRC are skipped silently.
std::vector<DecodedFrame> decode(const PcmFrame& pcm, const ModemParams& params,
                                 int channel);

} // namespace uspres::modem
