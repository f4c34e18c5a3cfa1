#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "prosody/errors.hpp"
#include "prosody/fft.hpp"

namespace prosody {

// Mono PCM signal, the I/O currency of the whole pipeline. Samples are
// dimensionless amplitudes in [-1, 1]; out-of-range values only ever appear
// transiently on synthesis output and are clipped on write.
struct AudioBuffer {
    std::vector<double> samples;
    int sample_rate = 0;

    double duration_seconds() const {
        return static_cast<double>(samples.size()) / sample_rate;
    }
};

// Interleaved-free channel-major buffer used between decoding and down-mix.
struct MultiChannelBuffer {
    std::vector<std::vector<double>> channels;
    int sample_rate = 0;
};

inline constexpr int kCanonicalRate = 16000;

namespace detail {

inline constexpr std::uint16_t kFormatPcm = 1;
inline constexpr std::uint16_t kFormatIeeeFloat = 3;

inline std::uint32_t read_u32(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

inline std::uint16_t read_u16(const unsigned char* p) {
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

inline void write_u32(std::ostream& os, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                          static_cast<unsigned char>((v >> 8) & 0xff),
                          static_cast<unsigned char>((v >> 16) & 0xff),
                          static_cast<unsigned char>((v >> 24) & 0xff)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

inline void write_u16(std::ostream& os, std::uint16_t v) {
    unsigned char b[2] = {static_cast<unsigned char>(v & 0xff),
                          static_cast<unsigned char>((v >> 8) & 0xff)};
    os.write(reinterpret_cast<const char*>(b), 2);
}

}  // namespace detail

// Per-sample arithmetic mean of 1 or 2 channels.
inline AudioBuffer to_mono(const MultiChannelBuffer& in) {
    if (in.channels.empty() || in.channels.size() > 2)
        throw UnsupportedEncoding("to_mono: expected 1 or 2 channels, got " +
                                  std::to_string(in.channels.size()));
    AudioBuffer out;
    out.sample_rate = in.sample_rate;
    if (in.channels.size() == 1) {
        out.samples = in.channels[0];
        return out;
    }
    const auto& l = in.channels[0];
    const auto& r = in.channels[1];
    if (l.size() != r.size())
        throw MalformedHeader("to_mono: channel lengths differ");
    out.samples.resize(l.size());
    for (std::size_t i = 0; i < l.size(); ++i) out.samples[i] = 0.5 * (l[i] + r[i]);
    return out;
}

// Reads a RIFF/WAVE file (PCM-16 or IEEE float-32, 1-2 channels), down-mixes
// to mono at the file's native rate. 16-bit samples are scaled by 1/32768.
inline AudioBuffer read_wav(const std::string& path) {
    if (!std::filesystem::exists(path))
        throw MissingFile("read_wav: no such file: " + path);
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoFailure("read_wav: cannot open " + path);

    unsigned char riff[12];
    if (!f.read(reinterpret_cast<char*>(riff), 12))
        throw MalformedHeader("read_wav: file shorter than RIFF header: " + path);
    if (std::memcmp(riff, "RIFF", 4) != 0 || std::memcmp(riff + 8, "WAVE", 4) != 0)
        throw MalformedHeader("read_wav: not a RIFF/WAVE file: " + path);

    std::uint16_t format = 0, channels = 0, bits = 0;
    std::uint32_t rate = 0;
    bool have_fmt = false;
    std::vector<unsigned char> data;
    bool have_data = false;

    // chunk walk: fmt must precede data; unknown chunks are skipped
    unsigned char hdr[8];
    while (f.read(reinterpret_cast<char*>(hdr), 8)) {
        const std::uint32_t size = detail::read_u32(hdr + 4);
        if (std::memcmp(hdr, "fmt ", 4) == 0) {
            if (size < 16) throw MalformedHeader("read_wav: fmt chunk too small");
            std::vector<unsigned char> fmt(size);
            if (!f.read(reinterpret_cast<char*>(fmt.data()), size))
                throw MalformedHeader("read_wav: truncated fmt chunk");
            format = detail::read_u16(fmt.data());
            channels = detail::read_u16(fmt.data() + 2);
            rate = detail::read_u32(fmt.data() + 4);
            bits = detail::read_u16(fmt.data() + 14);
            have_fmt = true;
        } else if (std::memcmp(hdr, "data", 4) == 0) {
            if (!have_fmt) throw MalformedHeader("read_wav: data chunk before fmt");
            data.resize(size);
            if (!f.read(reinterpret_cast<char*>(data.data()), size))
                throw MalformedHeader("read_wav: truncated data chunk in " + path);
            have_data = true;
            break;
        } else {
            f.seekg(size + (size & 1), std::ios::cur);  // chunks are word-aligned
        }
    }
    if (!have_fmt || !have_data)
        throw MalformedHeader("read_wav: missing fmt or data chunk: " + path);
    if (rate == 0) throw MalformedHeader("read_wav: zero sample rate");
    if (channels < 1 || channels > 2)
        throw UnsupportedEncoding("read_wav: " + std::to_string(channels) +
                                  " channels unsupported (want 1 or 2)");

    const bool pcm16 = format == detail::kFormatPcm && bits == 16;
    const bool float32 = format == detail::kFormatIeeeFloat && bits == 32;
    if (!pcm16 && !float32)
        throw UnsupportedEncoding("read_wav: format code " + std::to_string(format) + " at " +
                                  std::to_string(bits) + " bits unsupported (want PCM-16 or float-32)");

    const std::size_t bytes_per_sample = pcm16 ? 2 : 4;
    const std::size_t frame_bytes = bytes_per_sample * channels;
    if (data.size() % frame_bytes != 0)
        throw MalformedHeader("read_wav: data chunk not a whole number of frames");
    const std::size_t n = data.size() / frame_bytes;

    MultiChannelBuffer mc;
    mc.sample_rate = static_cast<int>(rate);
    mc.channels.assign(channels, std::vector<double>(n));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::uint16_t c = 0; c < channels; ++c) {
            const unsigned char* p = data.data() + (i * channels + c) * bytes_per_sample;
            double v;
            if (pcm16) {
                const std::int16_t s = static_cast<std::int16_t>(detail::read_u16(p));
                v = static_cast<double>(s) / 32768.0;
            } else {
                float fv;
                std::memcpy(&fv, p, 4);
                v = static_cast<double>(fv);
                if (!(v >= -1.0 && v <= 1.0))
                    throw UnsupportedEncoding("read_wav: float sample outside [-1, 1] in " + path);
            }
            mc.channels[c][i] = v;
        }
    }
    return to_mono(mc);
}

// Writes mono PCM-16. Samples outside [-1, 1] are hard-clipped; quantization
// is round(x * 32768) clamped to the int16 range, so a second write-read
// round trip is bit-exact.
inline void write_wav(const std::string& path, const AudioBuffer& audio) {
    if (audio.samples.empty())
        throw InvariantViolation("write_wav: refusing to write an empty buffer");
    if (audio.sample_rate <= 0)
        throw InvariantViolation("write_wav: nonpositive sample rate");

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoFailure("write_wav: cannot open " + path + " for writing");

    const std::uint32_t n = static_cast<std::uint32_t>(audio.samples.size());
    const std::uint32_t data_bytes = n * 2;
    const std::uint32_t rate = static_cast<std::uint32_t>(audio.sample_rate);

    f.write("RIFF", 4);
    detail::write_u32(f, 36 + data_bytes);
    f.write("WAVE", 4);
    f.write("fmt ", 4);
    detail::write_u32(f, 16);
    detail::write_u16(f, detail::kFormatPcm);
    detail::write_u16(f, 1);
    detail::write_u32(f, rate);
    detail::write_u32(f, rate * 2);
    detail::write_u16(f, 2);
    detail::write_u16(f, 16);
    f.write("data", 4);
    detail::write_u32(f, data_bytes);

    for (double x : audio.samples) {
        const double clipped = std::clamp(x, -1.0, 1.0);
        const long q = std::lround(clipped * 32768.0);
        const std::int16_t s = static_cast<std::int16_t>(std::clamp<long>(q, -32768, 32767));
        detail::write_u16(f, static_cast<std::uint16_t>(s));
    }
    if (!f) throw IoFailure("write_wav: short write to " + path);
}

// Windowed-sinc rate conversion (16 taps, Hann-windowed kernel). Output
// length is round(len * target / source); the kernel is renormalized per
// output sample, which makes same-rate conversion the exact identity.
inline AudioBuffer resample(const AudioBuffer& audio, int target_rate) {
    if (target_rate <= 0) throw BoundsViolation("resample: target rate must be positive");
    if (audio.sample_rate == target_rate) return audio;

    const double ratio = static_cast<double>(target_rate) / audio.sample_rate;
    const std::size_t out_len = static_cast<std::size_t>(
        std::llround(static_cast<double>(audio.samples.size()) * ratio));
    AudioBuffer out;
    out.sample_rate = target_rate;
    out.samples.resize(out_len);

    constexpr int kHalfTaps = 8;
    const double cutoff = 0.5 * std::min(1.0, ratio);  // anti-alias when decimating
    const auto& x = audio.samples;
    const long len = static_cast<long>(x.size());

    for (std::size_t m = 0; m < out_len; ++m) {
        const double pos = static_cast<double>(m) / ratio;
        const long base = static_cast<long>(std::floor(pos));
        double acc = 0.0, ksum = 0.0;
        for (long j = base - kHalfTaps + 1; j <= base + kHalfTaps; ++j) {
            const double t = static_cast<double>(j) - pos;
            double k;
            if (std::abs(t) < 1e-12) {
                k = 2.0 * cutoff;
            } else {
                const double a = 2.0 * fft::kPi * cutoff * t;
                k = 2.0 * cutoff * std::sin(a) / a;
            }
            k *= 0.5 * (1.0 + std::cos(fft::kPi * t / kHalfTaps));  // Hann taper
            ksum += k;
            if (j >= 0 && j < len) acc += x[static_cast<std::size_t>(j)] * k;
        }
        out.samples[m] = ksum != 0.0 ? acc / ksum : 0.0;
    }
    return out;
}

}  // namespace prosody
