#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include <json.hpp>

#include "prosody/errors.hpp"
#include "prosody/features.hpp"

namespace prosody {

// The three corpus-level discrepancy scalars plus alignment diagnostics.
// Orientation is human-relative throughout: positive pitch_diff_hz means the
// human speaks higher, duration_ratio > 1 means the human clip is longer,
// energy_ratio > 1 means the human clip is louder.
struct ComparisonReport {
    double pitch_diff_hz = 0.0;
    double duration_ratio = 1.0;
    double energy_ratio = 1.0;
    std::size_t voiced_frames_human = 0;
    std::size_t voiced_frames_tts = 0;
    double aligned_f0_rmse_hz = 0.0;
};

// Log-domain summary statistics used for scale-free loss terms.
struct NormalizedStats {
    double f0_log_mean = 0.0;
    double f0_log_std = 0.0;
    double energy_log_mean = 0.0;
    double energy_log_std = 0.0;
};

inline constexpr double kSilentMeanEnergy = 1e-10;
inline constexpr double kFrameSilenceFloor = 1e-6;

// Resamples every track to target_frames. Continuous tracks interpolate
// linearly; f0 interpolates only inside voiced runs, with the voicing flag
// itself carried by nearest neighbor so no frame blends 0 Hz with a real
// pitch value.
inline ProsodicFeatures align_length(const ProsodicFeatures& f, std::size_t target_frames) {
    if (target_frames == 0)
        throw BoundsViolation("align_length: target_frames must be >= 1");
    const std::size_t n = f.num_frames();
    if (n == 0) throw BufferTooShort("align_length: empty feature set");

    ProsodicFeatures out;
    out.frame_period_ms = f.frame_period_ms;
    out.sample_rate = f.sample_rate;
    out.fft_size = f.fft_size;
    out.f0.resize(target_frames);
    out.periodicity.resize(target_frames);
    out.energy.resize(target_frames);
    out.sp.resize(target_frames);
    out.ap.resize(target_frames);

    const std::size_t bins = f.sp.empty() ? 0 : f.sp[0].size();
    const double stride = (target_frames > 1 && n > 1)
                              ? static_cast<double>(n - 1) / static_cast<double>(target_frames - 1)
                              : 0.0;

    for (std::size_t i = 0; i < target_frames; ++i) {
        const double pos = stride * static_cast<double>(i);
        const std::size_t j0 = std::min(static_cast<std::size_t>(pos), n - 1);
        const std::size_t j1 = std::min(j0 + 1, n - 1);
        const double t = pos - static_cast<double>(j0);
        const std::size_t nearest = t < 0.5 ? j0 : j1;

        out.energy[i] = (1.0 - t) * f.energy[j0] + t * f.energy[j1];
        out.periodicity[i] = (1.0 - t) * f.periodicity[j0] + t * f.periodicity[j1];

        out.sp[i].resize(bins);
        out.ap[i].resize(bins);
        for (std::size_t k = 0; k < bins; ++k) {
            out.sp[i][k] = (1.0 - t) * f.sp[j0][k] + t * f.sp[j1][k];
            out.ap[i][k] = (1.0 - t) * f.ap[j0][k] + t * f.ap[j1][k];
        }

        if (!f.voiced(nearest)) {
            out.f0[i] = 0.0;
            std::fill(out.ap[i].begin(), out.ap[i].end(), 1.0);
        } else if (f.voiced(j0) && f.voiced(j1)) {
            out.f0[i] = (1.0 - t) * f.f0[j0] + t * f.f0[j1];
        } else {
            out.f0[i] = f.f0[nearest];
        }
    }
    return out;
}

// Discrepancy metrics between a human and a TTS feature set. Mean F0 runs
// over voiced frames only; mean energy runs over every frame.
inline ComparisonReport compare_features(const ProsodicFeatures& human,
                                         const ProsodicFeatures& tts) {
    if (human.frame_period_ms != tts.frame_period_ms || human.sample_rate != tts.sample_rate)
        throw ConfigMismatch("compare_features: inputs disagree on frame period or sample rate");
    if (human.num_frames() == 0 || tts.num_frames() == 0)
        throw BufferTooShort("compare_features: empty feature set");

    ComparisonReport rep;
    double f0_sum_h = 0.0, f0_sum_t = 0.0;
    for (std::size_t i = 0; i < human.num_frames(); ++i)
        if (human.voiced(i)) {
            f0_sum_h += human.f0[i];
            ++rep.voiced_frames_human;
        }
    for (std::size_t i = 0; i < tts.num_frames(); ++i)
        if (tts.voiced(i)) {
            f0_sum_t += tts.f0[i];
            ++rep.voiced_frames_tts;
        }
    if (rep.voiced_frames_human == 0 || rep.voiced_frames_tts == 0)
        throw NoVoicedFrames("compare_features: an input has no voiced frames");

    double e_h = 0.0, e_t = 0.0;
    for (double e : human.energy) e_h += e;
    for (double e : tts.energy) e_t += e;
    e_h /= static_cast<double>(human.num_frames());
    e_t /= static_cast<double>(tts.num_frames());
    if (e_h < kSilentMeanEnergy || e_t < kSilentMeanEnergy)
        throw SilentInput("compare_features: mean energy below the silence floor");

    rep.pitch_diff_hz = f0_sum_h / static_cast<double>(rep.voiced_frames_human) -
                        f0_sum_t / static_cast<double>(rep.voiced_frames_tts);
    rep.duration_ratio =
        static_cast<double>(human.num_frames()) / static_cast<double>(tts.num_frames());
    rep.energy_ratio = e_h / e_t;

    const ProsodicFeatures aligned = align_length(tts, human.num_frames());
    double acc = 0.0;
    std::size_t common = 0;
    for (std::size_t i = 0; i < human.num_frames(); ++i)
        if (human.voiced(i) && aligned.voiced(i)) {
            const double d = human.f0[i] - aligned.f0[i];
            acc += d * d;
            ++common;
        }
    rep.aligned_f0_rmse_hz = common > 0 ? std::sqrt(acc / static_cast<double>(common)) : 0.0;
    return rep;
}

// Mean/std of log-F0 over voiced frames and of log-energy over non-silent
// frames. Std of a constant track is 0.
inline NormalizedStats normalize_for_loss(const ProsodicFeatures& f) {
    std::vector<double> logf0, loge;
    for (std::size_t i = 0; i < f.num_frames(); ++i) {
        if (f.voiced(i)) logf0.push_back(std::log(f.f0[i]));
        if (f.energy[i] > kFrameSilenceFloor) loge.push_back(std::log(f.energy[i]));
    }
    if (logf0.empty()) throw NoVoicedFrames("normalize_for_loss: no voiced frames");
    if (loge.empty()) throw SilentInput("normalize_for_loss: no non-silent frames");

    const auto stats = [](const std::vector<double>& v) {
        const auto [mn, mx] = std::minmax_element(v.begin(), v.end());
        if (*mn == *mx) return std::pair<double, double>(*mn, 0.0);
        double mean = 0.0;
        for (double x : v) mean += x;
        mean /= static_cast<double>(v.size());
        double var = 0.0;
        for (double x : v) var += (x - mean) * (x - mean);
        return std::pair<double, double>(mean, std::sqrt(var / static_cast<double>(v.size())));
    };
    NormalizedStats s;
    std::tie(s.f0_log_mean, s.f0_log_std) = stats(logf0);
    std::tie(s.energy_log_mean, s.energy_log_std) = stats(loge);
    return s;
}

inline nlohmann::json to_json(const ComparisonReport& r) {
    return nlohmann::json{{"pitch_diff_hz", r.pitch_diff_hz},
                          {"duration_ratio", r.duration_ratio},
                          {"energy_ratio", r.energy_ratio},
                          {"voiced_frames_human", r.voiced_frames_human},
                          {"voiced_frames_tts", r.voiced_frames_tts},
                          {"aligned_f0_rmse_hz", r.aligned_f0_rmse_hz}};
}

inline ComparisonReport report_from_json(const nlohmann::json& j) {
    ComparisonReport r;
    try {
        r.pitch_diff_hz = j.at("pitch_diff_hz").get<double>();
        r.duration_ratio = j.at("duration_ratio").get<double>();
        r.energy_ratio = j.at("energy_ratio").get<double>();
        r.voiced_frames_human = j.at("voiced_frames_human").get<std::size_t>();
        r.voiced_frames_tts = j.at("voiced_frames_tts").get<std::size_t>();
        r.aligned_f0_rmse_hz = j.at("aligned_f0_rmse_hz").get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw SchemaViolation(std::string("report: bad JSON: ") + e.what());
    }
    return r;
}

}  // namespace prosody
