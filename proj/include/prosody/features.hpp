#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "prosody/audio_io.hpp"
#include "prosody/errors.hpp"
#include "prosody/fft.hpp"

namespace prosody {

// Analysis hyperparameters. The defaults assume speech at the canonical
// 16 kHz rate: 5 ms hop, pitch search range 71..800 Hz, 1024-point frames.
struct AnalysisConfig {
    double frame_period_ms = 5.0;
    double f0_floor = 71.0;
    double f0_ceil = 800.0;
    std::size_t fft_size = 1024;

    // Voicing decisions: a frame is voiced when the normalized
    // autocorrelation peak clears the threshold and the frame is not silent.
    double voicing_threshold = 0.45;
    double silence_gate_rms = 1e-4;

    double hop_samples(int sample_rate) const {
        return sample_rate * frame_period_ms / 1000.0;
    }

    void validate(int sample_rate) const {
        if (frame_period_ms <= 0.0)
            throw InvariantViolation("AnalysisConfig: frame_period_ms must be positive");
        if (!(0.0 < f0_floor && f0_floor < f0_ceil && f0_ceil < sample_rate / 2.0))
            throw InvariantViolation("AnalysisConfig: need 0 < f0_floor < f0_ceil < rate/2");
        if (!fft::is_power_of_two(fft_size))
            throw InvariantViolation("AnalysisConfig: fft_size must be a power of two");
        if (static_cast<double>(fft_size) < 2.0 * sample_rate / f0_floor)
            throw InvariantViolation(
                "AnalysisConfig: fft_size must fit two periods of f0_floor");
    }
};

// Frame-aligned prosodic features. f0 of 0 encodes an unvoiced frame; sp is
// a one-sided power spectral envelope (fft_size/2 + 1 bins per frame); ap is
// the per-bin noise fraction in [0, 1], pinned to 1 on unvoiced frames.
struct ProsodicFeatures {
    std::vector<double> f0;
    std::vector<double> periodicity;
    std::vector<std::vector<double>> sp;
    std::vector<std::vector<double>> ap;
    std::vector<double> energy;
    double frame_period_ms = 5.0;
    int sample_rate = 0;
    std::size_t fft_size = 0;

    std::size_t num_frames() const { return f0.size(); }
    bool voiced(std::size_t i) const { return f0[i] > 0.0; }
    std::size_t num_bins() const { return fft_size / 2 + 1; }
};

inline constexpr double kSpectralFloor = 1e-12;

namespace detail {

inline std::size_t frame_count(std::size_t num_samples, double hop) {
    return static_cast<std::size_t>(std::floor(static_cast<double>(num_samples) / hop));
}

// Grabs a window of length `len` centered on sample `center`, zero-padded
// where it runs off either end of the signal.
inline std::vector<double> window_at(const std::vector<double>& x, long center, std::size_t len) {
    std::vector<double> out(len, 0.0);
    const long start = center - static_cast<long>(len) / 2;
    const long n = static_cast<long>(x.size());
    const long lo = std::max<long>(start, 0);
    const long hi = std::min<long>(start + static_cast<long>(len), n);
    for (long i = lo; i < hi; ++i) out[static_cast<std::size_t>(i - start)] = x[static_cast<std::size_t>(i)];
    return out;
}

struct NacResult {
    double f0 = 0.0;
    double peak = 0.0;
};

// Gentle FIR low-pass ahead of the autocorrelation. Bright signals have
// sinc-sharp correlation peaks that integer-lag sampling misses whenever the
// true period is fractional; band-limiting widens the peaks so the lag grid
// samples them faithfully.
inline std::vector<double> lowpass_for_pitch(const std::vector<double>& x, int rate,
                                             double f0_ceil) {
    const double cutoff = std::min(std::max(2000.0, 2.5 * f0_ceil), 0.45 * rate);
    const double fc = cutoff / rate;
    constexpr int kHalf = 8;
    double kernel[2 * kHalf + 1];
    double ksum = 0.0;
    for (int j = -kHalf; j <= kHalf; ++j) {
        const double t = static_cast<double>(j);
        double v = j == 0 ? 2.0 * fc : std::sin(2.0 * fft::kPi * fc * t) / (fft::kPi * t);
        v *= 0.5 * (1.0 + std::cos(fft::kPi * t / (kHalf + 1)));
        kernel[j + kHalf] = v;
        ksum += v;
    }
    for (double& v : kernel) v /= ksum;

    const long n = static_cast<long>(x.size());
    std::vector<double> out(x.size(), 0.0);
    for (long i = 0; i < n; ++i) {
        double acc = 0.0;
        for (int j = -kHalf; j <= kHalf; ++j) {
            const long src = i + j;
            if (src >= 0 && src < n) acc += kernel[j + kHalf] * x[static_cast<std::size_t>(src)];
        }
        out[static_cast<std::size_t>(i)] = acc;
    }
    return out;
}

// Normalized autocorrelation pitch candidate for one frame. Peaks are
// refined by parabolic interpolation; a small per-octave bias breaks ties
// between a period and its multiples in favor of the shorter lag.
inline NacResult nac_candidate(const std::vector<double>& raw_frame, int rate, double f0_floor,
                               double f0_ceil) {
    const std::vector<double> frame = lowpass_for_pitch(raw_frame, rate, f0_ceil);
    const std::size_t w = frame.size();
    const std::size_t padded = fft::next_power_of_two(2 * w);

    std::vector<std::complex<double>> buf(padded, {0.0, 0.0});
    for (std::size_t i = 0; i < w; ++i) buf[i] = {frame[i], 0.0};
    fft::transform(buf, false);
    for (auto& c : buf) c = {std::norm(c), 0.0};
    fft::transform(buf, true);
    // buf[tau].real() is now sum_n x[n] x[n+tau]

    std::vector<double> sumsq(w + 1, 0.0);
    for (std::size_t i = 0; i < w; ++i) sumsq[i + 1] = sumsq[i] + frame[i] * frame[i];

    const std::size_t tau_min = std::max<std::size_t>(2, static_cast<std::size_t>(rate / f0_ceil));
    const std::size_t tau_max =
        std::min(w - 2, static_cast<std::size_t>(std::ceil(rate / f0_floor)));
    if (tau_min + 1 >= tau_max) return {};

    std::vector<double> r(tau_max + 2, 0.0);
    for (std::size_t tau = tau_min - 1; tau <= tau_max + 1; ++tau) {
        const double e1 = sumsq[w - tau];                 // sum of x[0 .. w-tau)
        const double e2 = sumsq[w] - sumsq[tau];          // sum of x[tau .. w)
        const double denom = std::sqrt(e1 * e2);
        r[tau] = denom > 0.0 ? buf[tau].real() / denom : 0.0;
    }

    double best_score = -1e9;
    double best_peak = 0.0;
    double best_lag = 0.0;
    for (std::size_t tau = tau_min; tau <= tau_max; ++tau) {
        if (!(r[tau] >= r[tau - 1] && r[tau] >= r[tau + 1])) continue;
        const double denom = r[tau - 1] - 2.0 * r[tau] + r[tau + 1];
        double delta = 0.0;
        if (std::abs(denom) > 1e-15)
            delta = std::clamp(0.5 * (r[tau - 1] - r[tau + 1]) / denom, -0.5, 0.5);
        const double peak = r[tau] - 0.25 * (r[tau - 1] - r[tau + 1]) * delta;
        const double lag = static_cast<double>(tau) + delta;
        const double score =
            peak - 0.01 * std::log2(lag / static_cast<double>(tau_min));
        if (score > best_score) {
            best_score = score;
            best_peak = peak;
            best_lag = lag;
        }
    }
    if (best_lag <= 0.0) return {};

    NacResult res;
    res.peak = std::clamp(best_peak, 0.0, 1.0);
    res.f0 = std::clamp(static_cast<double>(rate) / best_lag, f0_floor, f0_ceil);
    return res;
}

}  // namespace detail

// F0 and voicing-confidence tracks, one value per frame. Unvoiced frames
// carry f0 = 0; periodicity is the clamped autocorrelation peak.
inline std::pair<std::vector<double>, std::vector<double>> estimate_f0(const AudioBuffer& audio,
                                                                       const AnalysisConfig& cfg) {
    cfg.validate(audio.sample_rate);
    const double hop = cfg.hop_samples(audio.sample_rate);
    const std::size_t n = detail::frame_count(audio.samples.size(), hop);
    if (n == 0) throw BufferTooShort("estimate_f0: audio shorter than one frame");

    std::vector<double> f0(n, 0.0), periodicity(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const long center = std::lround(static_cast<double>(i) * hop);
        std::vector<double> frame = detail::window_at(audio.samples, center, cfg.fft_size);

        double mean = 0.0;
        for (double v : frame) mean += v;
        mean /= static_cast<double>(frame.size());
        double power = 0.0;
        for (double& v : frame) {
            v -= mean;
            power += v * v;
        }
        const double rms = std::sqrt(power / static_cast<double>(frame.size()));
        if (rms < cfg.silence_gate_rms) continue;

        const detail::NacResult c =
            detail::nac_candidate(frame, audio.sample_rate, cfg.f0_floor, cfg.f0_ceil);
        periodicity[i] = c.peak;
        if (c.peak >= cfg.voicing_threshold) f0[i] = c.f0;
    }
    return {std::move(f0), std::move(periodicity)};
}

// Per-frame RMS of a Hann-windowed slice of length 2*hop centered on the
// frame instant, zero-padded at the edges.
inline std::vector<double> frame_energy(const AudioBuffer& audio, const AnalysisConfig& cfg) {
    cfg.validate(audio.sample_rate);
    const double hop = cfg.hop_samples(audio.sample_rate);
    const std::size_t n = detail::frame_count(audio.samples.size(), hop);
    if (n == 0) throw BufferTooShort("frame_energy: audio shorter than one frame");

    const std::size_t wlen = static_cast<std::size_t>(std::lround(2.0 * hop));
    const std::vector<double> win = fft::hann_window(wlen);

    std::vector<double> energy(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const long center = std::lround(static_cast<double>(i) * hop);
        const std::vector<double> frame = detail::window_at(audio.samples, center, wlen);
        double acc = 0.0;
        for (std::size_t j = 0; j < wlen; ++j) {
            const double v = win[j] * frame[j];
            acc += v * v;
        }
        energy[i] = std::sqrt(acc / static_cast<double>(wlen));
    }
    return energy;
}

// Smoothed short-time power spectrum, one row per frame. Each frame is the
// Hann-windowed periodogram |FFT|^2 / fft_size averaged over a bandwidth of
// max(f0, f0_floor) Hz, so harmonic combs flatten into an envelope whose
// integral tracks the frame power. All bins are floored at 1e-12.
inline std::vector<std::vector<double>> spectral_envelope(const AudioBuffer& audio,
                                                          const std::vector<double>& f0,
                                                          const AnalysisConfig& cfg) {
    cfg.validate(audio.sample_rate);
    const double hop = cfg.hop_samples(audio.sample_rate);
    const std::size_t n = detail::frame_count(audio.samples.size(), hop);
    if (n == 0) throw BufferTooShort("spectral_envelope: audio shorter than one frame");
    if (f0.size() != n)
        throw FrameMismatch("spectral_envelope: f0 track has " + std::to_string(f0.size()) +
                            " frames, expected " + std::to_string(n));

    const std::size_t fftn = cfg.fft_size;
    const std::size_t bins = fftn / 2 + 1;
    const std::vector<double> win = fft::hann_window(fftn);

    std::vector<std::vector<double>> sp(n, std::vector<double>(bins, 0.0));
    std::vector<double> raw(bins), prefix(bins + 1);

    for (std::size_t i = 0; i < n; ++i) {
        const long center = std::lround(static_cast<double>(i) * hop);
        std::vector<double> frame = detail::window_at(audio.samples, center, fftn);
        for (std::size_t j = 0; j < fftn; ++j) frame[j] *= win[j];

        const auto spec = fft::real_forward(frame);
        for (std::size_t k = 0; k < bins; ++k)
            raw[k] = std::norm(spec[k]) / static_cast<double>(fftn);

        // fractional-width boxcar; width tracks the local harmonic spacing
        const double bw_hz = std::max(f0[i], cfg.f0_floor);
        const double width = bw_hz * static_cast<double>(fftn) / audio.sample_rate;
        prefix[0] = 0.0;
        for (std::size_t k = 0; k < bins; ++k) prefix[k + 1] = prefix[k] + raw[k];
        const auto mass = [&](double pos) {
            // integral of the piecewise-constant periodogram over [-0.5, pos]
            pos = std::clamp(pos, -0.5, static_cast<double>(bins) - 0.5);
            const double shifted = pos + 0.5;
            const std::size_t whole = static_cast<std::size_t>(std::floor(shifted));
            const double frac = shifted - static_cast<double>(whole);
            return prefix[std::min(whole, bins)] +
                   (whole < bins ? frac * raw[whole] : 0.0);
        };
        for (std::size_t k = 0; k < bins; ++k) {
            const double lo = std::max(static_cast<double>(k) - width / 2.0, -0.5);
            const double hi =
                std::min(static_cast<double>(k) + width / 2.0, static_cast<double>(bins) - 0.5);
            const double m = mass(hi) - mass(lo);
            sp[i][k] = std::max(m / (hi - lo), kSpectralFloor);
        }
    }
    return sp;
}

// Band-constant noise fraction per frame: voiced frames get
// clamp(1 - periodicity, 0.01, 1), unvoiced frames are all-noise.
inline std::vector<std::vector<double>> aperiodicity(const AudioBuffer& audio,
                                                     const std::vector<double>& f0,
                                                     const std::vector<double>& periodicity,
                                                     const AnalysisConfig& cfg) {
    cfg.validate(audio.sample_rate);
    const double hop = cfg.hop_samples(audio.sample_rate);
    const std::size_t n = detail::frame_count(audio.samples.size(), hop);
    if (n == 0) throw BufferTooShort("aperiodicity: audio shorter than one frame");
    if (f0.size() != n || periodicity.size() != n)
        throw FrameMismatch("aperiodicity: track length does not match frame count");

    const std::size_t bins = cfg.fft_size / 2 + 1;
    std::vector<std::vector<double>> ap(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double v = f0[i] > 0.0 ? std::clamp(1.0 - periodicity[i], 0.01, 1.0) : 1.0;
        ap[i].assign(bins, v);
    }
    return ap;
}

// Runs the four extractors and bundles the result. Deterministic for a
// fixed input and config.
inline ProsodicFeatures extract_features(const AudioBuffer& audio, const AnalysisConfig& cfg) {
    ProsodicFeatures f;
    auto [f0, periodicity] = estimate_f0(audio, cfg);
    f.energy = frame_energy(audio, cfg);
    f.sp = spectral_envelope(audio, f0, cfg);
    f.ap = aperiodicity(audio, f0, periodicity, cfg);
    f.f0 = std::move(f0);
    f.periodicity = std::move(periodicity);
    f.frame_period_ms = cfg.frame_period_ms;
    f.sample_rate = audio.sample_rate;
    f.fft_size = cfg.fft_size;

    for (std::size_t i = 0; i < f.num_frames(); ++i)
        if (!std::isfinite(f.f0[i]) || !std::isfinite(f.energy[i]))
            throw InvariantViolation("extract_features: non-finite value in output");
    return f;
}

inline nlohmann::json to_json(const ProsodicFeatures& f) {
    return nlohmann::json{{"f0", f.f0},
                          {"periodicity", f.periodicity},
                          {"energy", f.energy},
                          {"sp", f.sp},
                          {"ap", f.ap},
                          {"frame_period_ms", f.frame_period_ms},
                          {"sample_rate", f.sample_rate},
                          {"fft_size", f.fft_size}};
}

inline ProsodicFeatures features_from_json(const nlohmann::json& j) {
    ProsodicFeatures f;
    try {
        j.at("f0").get_to(f.f0);
        j.at("periodicity").get_to(f.periodicity);
        j.at("energy").get_to(f.energy);
        j.at("sp").get_to(f.sp);
        j.at("ap").get_to(f.ap);
        f.frame_period_ms = j.at("frame_period_ms").get<double>();
        f.sample_rate = j.at("sample_rate").get<int>();
        f.fft_size = j.at("fft_size").get<std::size_t>();
    } catch (const nlohmann::json::exception& e) {
        throw SchemaViolation(std::string("features: bad JSON: ") + e.what());
    }
    const std::size_t n = f.f0.size();
    if (f.periodicity.size() != n || f.energy.size() != n || f.sp.size() != n ||
        f.ap.size() != n || n == 0)
        throw InvariantViolation("features: track lengths disagree");
    return f;
}

inline void save_features(const std::string& path, const ProsodicFeatures& f) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw IoFailure("save_features: cannot open " + path);
    os << to_json(f).dump() << '\n';
    if (!os) throw IoFailure("save_features: short write to " + path);
}

inline ProsodicFeatures load_features(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw MissingFile("load_features: cannot open " + path);
    nlohmann::json j;
    try {
        is >> j;
    } catch (const nlohmann::json::exception& e) {
        throw SchemaViolation(std::string("load_features: ") + e.what());
    }
    return features_from_json(j);
}

}  // namespace prosody
