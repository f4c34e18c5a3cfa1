#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "prosody/audio_io.hpp"
#include "prosody/errors.hpp"
#include "prosody/features.hpp"
#include "prosody/manipulate.hpp"

namespace prosody {

struct SynthConfig {
    std::uint32_t noise_seed = 0;
};

namespace detail {

// Unit-variance uniform white noise. Scaled by hand from raw mt19937 words
// so the sample sequence is pinned by the engine spec, not by a library's
// distribution implementation.
class NoiseSource {
public:
    explicit NoiseSource(std::uint32_t seed) : engine_(seed) {}
    double operator()() {
        const double u = (static_cast<double>(engine_()) + 0.5) * (1.0 / 4294967296.0);
        return (2.0 * u - 1.0) * 1.7320508075688772;  // sqrt(3): unit variance
    }

private:
    std::mt19937 engine_;
};

// Minimum-phase spectrum with the given half-spectrum log magnitude,
// computed by cepstral folding: even-symmetric log spectrum -> cepstrum ->
// double the positive quefrencies -> back to a complex spectrum -> exp.
inline std::vector<std::complex<double>> minimum_phase_spectrum(
    const std::vector<double>& log_magnitude, std::size_t fft_size) {
    const std::size_t bins = fft_size / 2 + 1;
    std::vector<std::complex<double>> buf(fft_size);
    for (std::size_t k = 0; k < bins; ++k) buf[k] = {log_magnitude[k], 0.0};
    for (std::size_t k = bins; k < fft_size; ++k) buf[k] = buf[fft_size - k];
    fft::transform(buf, true);  // real even spectrum -> real even cepstrum

    buf[0] = {buf[0].real(), 0.0};
    for (std::size_t n = 1; n < fft_size / 2; ++n) buf[n] = {2.0 * buf[n].real(), 0.0};
    buf[fft_size / 2] = {buf[fft_size / 2].real(), 0.0};
    for (std::size_t n = fft_size / 2 + 1; n < fft_size; ++n) buf[n] = {0.0, 0.0};

    fft::transform(buf, false);
    std::vector<std::complex<double>> out(bins);
    for (std::size_t k = 0; k < bins; ++k) out[k] = std::exp(buf[k]);
    return out;
}

inline void validate_for_synthesis(const ProsodicFeatures& f) {
    const std::size_t n = f.num_frames();
    if (n == 0) throw InvariantViolation("synthesize: empty feature set");
    if (f.periodicity.size() != n || f.energy.size() != n || f.sp.size() != n ||
        f.ap.size() != n)
        throw InvariantViolation("synthesize: track lengths disagree");
    if (!fft::is_power_of_two(f.fft_size))
        throw InvariantViolation("synthesize: fft_size must be a power of two");
    if (f.sample_rate <= 0 || f.frame_period_ms <= 0.0)
        throw InvariantViolation("synthesize: bad sample rate or frame period");
    const std::size_t bins = f.num_bins();
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(f.f0[i]) || f.f0[i] < 0.0)
            throw InvariantViolation("synthesize: bad f0 value");
        if (f.sp[i].size() != bins || f.ap[i].size() != bins)
            throw InvariantViolation("synthesize: spectral row width mismatch");
        for (std::size_t k = 0; k < bins; ++k) {
            if (!(f.sp[i][k] >= 0.0) || !std::isfinite(f.sp[i][k]))
                throw InvariantViolation("synthesize: negative or non-finite spectral power");
            if (!(f.ap[i][k] >= 0.0 && f.ap[i][k] <= 1.0))
                throw InvariantViolation("synthesize: aperiodicity outside [0, 1]");
        }
    }
}

}  // namespace detail

// Pulse-plus-noise source-filter synthesis. Per frame the envelope sqrt(sp)
// is given minimum phase and excited by a mix of a pulse train (weight
// 1 - ap in power) and white noise (weight ap); frames are Hann-windowed and
// overlap-added at the hop with exact coverage normalization. The pulse
// train's phase is the running integral of f0, so pitch stays continuous
// across frame boundaries; unvoiced stretches freeze the phase and emit
// noise only.
inline AudioBuffer synthesize(const ProsodicFeatures& f, const SynthConfig& cfg = {}) {
    detail::validate_for_synthesis(f);

    const std::size_t n = f.num_frames();
    const std::size_t fftn = f.fft_size;
    const std::size_t bins = f.num_bins();
    const double hop = f.frame_period_ms * f.sample_rate / 1000.0;
    const std::size_t out_len =
        static_cast<std::size_t>(std::llround(static_cast<double>(n) * hop));

    const std::vector<double> win = fft::hann_window(fftn);
    double win_sumsq = 0.0;
    for (double w : win) win_sumsq += w * w;
    // analysis used |FFT(w.x)|^2 / fft_size; invert that normalization here
    const double envelope_gain = std::sqrt(static_cast<double>(fftn) / win_sumsq);

    // excitation streams, padded half a window on both sides so edge frames
    // see real content; index 0 of the stream is output sample -fftn/2
    const std::size_t half = fftn / 2;
    const std::size_t exc_len = out_len + fftn;
    std::vector<double> exc_pulse(exc_len, 0.0), exc_noise(exc_len, 0.0);

    detail::NoiseSource noise(cfg.noise_seed);
    for (std::size_t i = 0; i < exc_len; ++i) exc_noise[i] = noise();

    double phase = 0.0;
    for (std::size_t i = 0; i < exc_len; ++i) {
        const long sample = static_cast<long>(i) - static_cast<long>(half);
        const long frame = std::clamp<long>(std::lround(static_cast<double>(sample) / hop), 0,
                                            static_cast<long>(n) - 1);
        const double f0 = f.f0[static_cast<std::size_t>(frame)];
        if (f0 <= 0.0) continue;
        const double step = 2.0 * fft::kPi * f0 / f.sample_rate;
        phase += step;
        if (phase >= 2.0 * fft::kPi) {
            phase -= 2.0 * fft::kPi;
            // place the pulse at the exact wrap instant: a two-tap split
            // keeps pulse timing sub-sample accurate, which the pitch
            // tracker needs to see clean correlation at the true lag
            const double frac = phase / step;  // wrap happened frac samples ago
            const double amp = std::sqrt(static_cast<double>(f.sample_rate) / f0);
            exc_pulse[i] += amp * (1.0 - frac);
            if (i > 0) exc_pulse[i - 1] += amp * frac;
        }
    }

    std::vector<double> out(out_len, 0.0), cover(out_len, 0.0);
    std::vector<double> seg_pulse(fftn), seg_noise(fftn), log_mag(bins);

    for (std::size_t i = 0; i < n; ++i) {
        const long center = std::lround(static_cast<double>(i) * hop);
        const long start = center - static_cast<long>(half);

        for (std::size_t j = 0; j < fftn; ++j) {
            const std::size_t src = static_cast<std::size_t>(start + static_cast<long>(j)) + half;
            seg_pulse[j] = win[j] * exc_pulse[src];
            seg_noise[j] = win[j] * exc_noise[src];
        }
        auto spec_pulse = fft::real_forward(seg_pulse);
        const auto spec_noise = fft::real_forward(seg_noise);

        for (std::size_t k = 0; k < bins; ++k)
            log_mag[k] = 0.5 * std::log(std::max(f.sp[i][k], kSpectralFloor)) +
                         std::log(envelope_gain);
        const auto envelope = detail::minimum_phase_spectrum(log_mag, fftn);

        for (std::size_t k = 0; k < bins; ++k) {
            const double wn = std::sqrt(f.ap[i][k]);
            const double wh = std::sqrt(1.0 - f.ap[i][k]);
            spec_pulse[k] = envelope[k] * (wh * spec_pulse[k] + wn * spec_noise[k]);
        }
        spec_pulse[0] = 0.0;  // no DC drift

        const std::vector<double> y = fft::real_inverse(spec_pulse, fftn);
        for (std::size_t j = 0; j < fftn; ++j) {
            const long idx = start + static_cast<long>(j);
            if (idx < 0 || idx >= static_cast<long>(out_len)) continue;
            out[static_cast<std::size_t>(idx)] += y[j];
            cover[static_cast<std::size_t>(idx)] += win[j];
        }
    }

    for (std::size_t i = 0; i < out_len; ++i)
        if (cover[i] > 1e-9) out[i] /= cover[i];

    AudioBuffer audio;
    audio.sample_rate = f.sample_rate;
    audio.samples = std::move(out);
    return audio;
}

// Analysis -> manipulation -> synthesis, the single-file application path.
inline AudioBuffer resynthesize(const AudioBuffer& audio, const ManipulationParams& params,
                                const SynthConfig& scfg = {}, const AnalysisConfig& acfg = {}) {
    const ProsodicFeatures f = extract_features(audio, acfg);
    const ProsodicFeatures manipulated = manipulate_features(f, params, acfg);
    return synthesize(manipulated, scfg);
}

}  // namespace prosody
