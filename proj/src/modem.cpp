#include "uspresence/modem.hpp"

#include <cctype>
#include <cmath>
#include <numbers>

namespace uspres::modem {

namespace {

constexpr double kPi = std::numbers::pi;

int hex_value(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}

char hex_char(int v) { return v < 10 ? static_cast<char>('0' + v) : static_cast<char>('a' + v - 10); }

// One symbol = 2 bits, most significant pair first.
void append_symbols(std::vector<int>& out, unsigned value, int bits) {
    for (int shift = bits - 2; shift >= 0; shift -= 2) {
        out.push_back(static_cast<int>((value >> shift) & 0x3));
    }
}

std::vector<int> frame_symbols(const UsFrame& frame, const ModemParams& params) {
    std::vector<int> symbols(params.preamble.begin(), params.preamble.end());
    append_symbols(symbols, static_cast<unsigned>(frame.payload.size() - 1), 4);
    for (char c : frame.payload) {
        append_symbols(symbols, static_cast<unsigned>(hex_value(c)), 4);
    }
    append_symbols(symbols, frame.crc(), 8);
    return symbols;
}

double edge_ramp(std::size_t n, std::size_t len, int ramp) {
    double g = 1.0;
    if (n < static_cast<std::size_t>(ramp)) {
        g = 0.5 * (1.0 - std::cos(kPi * static_cast<double>(n) / ramp));
    }
    std::size_t from_end = len - 1 - n;
    if (from_end < static_cast<std::size_t>(ramp)) {
        g = std::min(g, 0.5 * (1.0 - std::cos(kPi * static_cast<double>(from_end) / ramp)));
    }
    return g;
}

struct SymbolRead {
    int winner = -1;
    double winner_mag = 0.0;
    std::array<double, 4> mags{};
};

SymbolRead read_symbol(const PcmFrame& pcm, std::size_t start, const ModemParams& params,
                       int channel) {
    SymbolRead r;
    for (int tone = 0; tone < params.tones_per_channel; ++tone) {
        double m = goertzel_mag(pcm, start, static_cast<std::size_t>(params.symbol_len),
                                params.tone_hz(channel, tone));
        r.mags[static_cast<std::size_t>(tone)] = m;
        if (m > r.winner_mag || r.winner < 0) {
            r.winner_mag = m;
            r.winner = tone;
        }
    }
    return r;
}

// The squelch compares the winning tone's equivalent amplitude
// (2*mag/symbol_len for a full-window sinusoid) against the configured
// noise floor, both in dBFS.
bool above_squelch(const SymbolRead& r, const ModemParams& params) {
    double equiv_amplitude = 2.0 * r.winner_mag / params.symbol_len;
    return equiv_amplitude >= std::pow(10.0, params.noise_floor_dbfs / 20.0);
}

bool preamble_at(const PcmFrame& pcm, std::size_t pos, const ModemParams& params,
                 int channel) {
    const double ratio = std::pow(10.0, params.detection_snr_db / 20.0);
    for (std::size_t i = 0; i < params.preamble.size(); ++i) {
        SymbolRead r = read_symbol(pcm, pos + i * params.symbol_len, params, channel);
        double expected = r.mags[static_cast<std::size_t>(params.preamble[i])];
        if (expected <= 0.0) return false;
        for (int tone = 0; tone < params.tones_per_channel; ++tone) {
            if (tone == params.preamble[i]) continue;
            if (expected < r.mags[static_cast<std::size_t>(tone)] * ratio) return false;
        }
    }
    return true;
}

double preamble_score(const PcmFrame& pcm, std::size_t pos, const ModemParams& params,
                      int channel) {
    double score = 0.0;
    for (std::size_t i = 0; i < params.preamble.size(); ++i) {
        score += goertzel_mag(pcm, pos + i * params.symbol_len,
                              static_cast<std::size_t>(params.symbol_len),
                              params.tone_hz(channel, params.preamble[i]));
    }
    return score;
}

// A frame ends at an inter-frame gap, the stream end, or the next frame's
// preamble. Tone energy comparable to the frame's own level right behind the
// CRC means the candidate was cut short (a corrupted length field truncates
// the read mid-payload, leaving the real tail there). The level comparison
// keeps leakage from concurrent channels, which sits far below the frame's
// own symbols, from vetoing a good frame.
bool frame_boundary_clear(const PcmFrame& pcm, std::size_t end,
                          double frame_winner_mag, const ModemParams& params,
                          int channel) {
    if (end + params.symbol_len > pcm.samples.size()) return true;
    SymbolRead next = read_symbol(pcm, end, params, channel);
    if (!above_squelch(next, params)) return true;
    if (next.winner_mag < 0.5 * frame_winner_mag) return true;
    if (end + frame_samples(1, params) > pcm.samples.size()) return false;
    return preamble_at(pcm, end, params, channel);
}

} // namespace

void ModemParams::validate() const {
    if (sample_rate <= 0 || symbol_len <= 0 || channel_count <= 0 ||
        tones_per_channel <= 0 || 2 * ramp_len > symbol_len) {
        throw std::invalid_argument("bad modem geometry");
    }
    if (channel_base_hz < 20000.0) {
        throw std::invalid_argument("channel base must stay above the audible band");
    }
    if (!nyquist_safe()) {
        throw std::invalid_argument("highest tone exceeds the Nyquist limit");
    }
    const double bin = static_cast<double>(sample_rate) / symbol_len;
    for (double v : {channel_base_hz, channel_spacing_hz, tone_spacing_hz}) {
        double cycles = v / bin;
        if (std::abs(cycles - std::round(cycles)) > 1e-9) {
            throw std::invalid_argument("tone frequencies must be bin-aligned");
        }
    }
}

std::uint8_t crc8(std::span<const std::uint8_t> bytes) {
    std::uint8_t crc = 0x00;
    for (std::uint8_t b : bytes) {
        crc ^= b;
        for (int i = 0; i < 8; ++i) {
            crc = (crc & 0x80) ? static_cast<std::uint8_t>((crc << 1) ^ 0x07)
                               : static_cast<std::uint8_t>(crc << 1);
        }
    }
    return crc;
}

bool is_hex_payload(const std::string& payload) {
    if (payload.empty() || payload.size() > kMaxPayloadChars) return false;
    for (char c : payload) {
        if (hex_value(c) < 0) return false;
    }
    return true;
}

std::vector<std::uint8_t> pack_nibbles(const std::string& hex_payload) {
    std::vector<std::uint8_t> bytes;
    bytes.reserve((hex_payload.size() + 1) / 2);
    for (std::size_t i = 0; i < hex_payload.size(); i += 2) {
        int hi = hex_value(hex_payload[i]);
        int lo = (i + 1 < hex_payload.size()) ? hex_value(hex_payload[i + 1]) : 0;
        bytes.push_back(static_cast<std::uint8_t>((hi << 4) | lo));
    }
    return bytes;
}

std::uint8_t UsFrame::crc() const {
    std::vector<std::uint8_t> bytes;
    bytes.push_back(static_cast<std::uint8_t>(payload.size() - 1));
    auto packed = pack_nibbles(payload);
    bytes.insert(bytes.end(), packed.begin(), packed.end());
    return crc8(bytes);
}

std::size_t frame_samples(std::size_t payload_chars, const ModemParams& params) {
    return (4 + 2 + 2 * payload_chars + 4) * static_cast<std::size_t>(params.symbol_len);
}

PcmFrame encode(const UsFrame& frame, const ModemParams& params, double amplitude) {
    params.validate();
    if (!is_hex_payload(frame.payload)) {
        throw InvalidFrame("payload must be 1..16 hex characters");
    }
    if (frame.channel < 0 || frame.channel >= params.channel_count) {
        throw InvalidChannel("channel out of range");
    }
    if (amplitude <= 0.0 || amplitude > 1.0) {
        throw InvalidFrame("amplitude must be in (0, 1]");
    }

    const auto symbols = frame_symbols(frame, params);
    const auto sym_len = static_cast<std::size_t>(params.symbol_len);

    PcmFrame pcm;
    pcm.sample_rate = params.sample_rate;
    pcm.samples.resize(symbols.size() * sym_len);

    for (std::size_t s = 0; s < symbols.size(); ++s) {
        double freq = params.tone_hz(frame.channel, symbols[s]);
        double w = 2.0 * kPi * freq / params.sample_rate;
        double* dst = pcm.samples.data() + s * sym_len;
        for (std::size_t n = 0; n < sym_len; ++n) {
            dst[n] = amplitude * edge_ramp(n, sym_len, params.ramp_len) *
                     std::sin(w * static_cast<double>(n));
        }
    }
    return pcm;
}

double goertzel_mag(const PcmFrame& pcm, std::size_t start, std::size_t len,
                    double freq_hz) {
    if (start + len > pcm.samples.size()) {
        throw std::out_of_range("goertzel window out of bounds");
    }
    if (freq_hz >= pcm.sample_rate / 2.0) {
        throw std::out_of_range("frequency above Nyquist");
    }
    const double w = 2.0 * kPi * freq_hz / pcm.sample_rate;
    const double coeff = 2.0 * std::cos(w);
    double s0 = 0.0, s1 = 0.0, s2 = 0.0;
    const double* x = pcm.samples.data() + start;
    for (std::size_t n = 0; n < len; ++n) {
        s0 = x[n] + coeff * s1 - s2;
        s2 = s1;
        s1 = s0;
    }
    // |s1 - e^{-jw} s2| equals the DFT magnitude at freq_hz.
    double re = s1 - s2 * std::cos(w);
    double im = s2 * std::sin(w);
    return std::sqrt(re * re + im * im);
}

std::vector<DecodedFrame> decode(const PcmFrame& pcm, const ModemParams& params,
                                 int channel) {
    params.validate();
    std::vector<DecodedFrame> out;
    if (channel < 0 || channel >= params.channel_count) {
        throw InvalidChannel("channel out of range");
    }
    if (!pcm.samples.empty() && pcm.sample_rate != params.sample_rate) {
        throw std::invalid_argument("stream sample rate does not match the modem");
    }

    const auto sym_len = static_cast<std::size_t>(params.symbol_len);
    const std::size_t hop = sym_len / 4;
    const std::size_t min_frame = frame_samples(1, params);
    if (pcm.samples.size() < min_frame) return out;

    std::size_t pos = 0;
    while (pos + min_frame <= pcm.samples.size()) {
        if (!preamble_at(pcm, pos, params, channel)) {
            pos += hop;
            continue;
        }

        // The gate can open up to a hop early on a partially overlapped
        // window; climb to the alignment with the strongest preamble.
        double score = preamble_score(pcm, pos, params, channel);
        while (pos + hop + min_frame <= pcm.samples.size() &&
               preamble_at(pcm, pos + hop, params, channel)) {
            double next_score = preamble_score(pcm, pos + hop, params, channel);
            if (next_score <= score) break;
            pos += hop;
            score = next_score;
        }

        // Candidate: read length, then payload and CRC, gating every data
        // symbol on the squelch.
        double mean_winner_mag = 0.0;
        std::size_t symbols_read = 0;
        auto read_data_symbol = [&](std::size_t index, int& value) -> bool {
            SymbolRead r = read_symbol(pcm, pos + index * sym_len, params, channel);
            if (!above_squelch(r, params)) return false;
            mean_winner_mag += r.winner_mag;
            ++symbols_read;
            value = r.winner;
            return true;
        };

        bool ok = true;
        unsigned len_bits = 0;
        for (std::size_t i = 0; i < 2 && ok; ++i) {
            int v = 0;
            ok = read_data_symbol(4 + i, v);
            len_bits = (len_bits << 2) | static_cast<unsigned>(v);
        }

        std::size_t payload_chars = len_bits + 1;
        std::size_t total = frame_samples(payload_chars, params);
        if (ok && pos + total <= pcm.samples.size()) {
            std::string payload;
            for (std::size_t c = 0; c < payload_chars && ok; ++c) {
                unsigned nibble = 0;
                for (std::size_t i = 0; i < 2 && ok; ++i) {
                    int v = 0;
                    ok = read_data_symbol(6 + 2 * c + i, v);
                    nibble = (nibble << 2) | static_cast<unsigned>(v);
                }
                if (ok) payload.push_back(hex_char(static_cast<int>(nibble)));
            }
            unsigned crc_bits = 0;
            for (std::size_t i = 0; i < 4 && ok; ++i) {
                int v = 0;
                ok = read_data_symbol(6 + 2 * payload_chars + i, v);
                crc_bits = (crc_bits << 2) | static_cast<unsigned>(v);
            }
            if (ok) {
                UsFrame candidate{channel, payload};
                mean_winner_mag /= static_cast<double>(symbols_read);
                if (candidate.crc() == static_cast<std::uint8_t>(crc_bits) &&
                    frame_boundary_clear(pcm, pos + total, mean_winner_mag, params,
                                         channel)) {
                    out.push_back({std::move(payload), pos});
                    pos += total;
                    continue;
                }
            }
        }
        pos += hop;
    }
    return out;
}

} // namespace uspres::modem
