#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include <json.hpp>

#include "prosody/compare.hpp"
#include "prosody/errors.hpp"
#include "prosody/features.hpp"

namespace prosody {

// The learnable correction triple. pitch_shift_hz adds to voiced F0;
// duration_ratio rescales the frame count; energy_scale is the RMS gain
// applied to the clip (the spectral envelope, being power, gets its square).
// (0, 1, 1) is the identity.
struct ManipulationParams {
    double pitch_shift_hz = 0.0;
    double duration_ratio = 1.0;
    double energy_scale = 1.0;

    static constexpr double kDurationMin = 0.1, kDurationMax = 10.0;
    static constexpr double kEnergyMin = 1e-4, kEnergyMax = 1e4;

    void validate() const {
        if (!std::isfinite(pitch_shift_hz))
            throw BoundsViolation("ManipulationParams: pitch_shift_hz not finite");
        if (!(duration_ratio > kDurationMin && duration_ratio < kDurationMax))
            throw BoundsViolation("ManipulationParams: duration_ratio outside (0.1, 10)");
        if (!(energy_scale > kEnergyMin && energy_scale < kEnergyMax))
            throw BoundsViolation("ManipulationParams: energy_scale outside (1e-4, 1e4)");
    }
};

// Additive F0 shift on voiced frames, clamped to [f0_floor, f0_ceil].
// Unvoiced frames stay at 0, so the voicing pattern never changes and all
// pairwise voiced differences are preserved wherever no clamp fires.
inline std::vector<double> shift_pitch(const std::vector<double>& f0, double delta_hz,
                                       double f0_floor, double f0_ceil) {
    std::vector<double> out(f0.size());
    for (std::size_t i = 0; i < f0.size(); ++i)
        out[i] = f0[i] > 0.0 ? std::clamp(f0[i] + delta_hz, f0_floor, f0_ceil) : 0.0;
    return out;
}

// Multiplicative (semitone) variant, exposed as a CLI mode.
inline std::vector<double> shift_pitch_semitones(const std::vector<double>& f0, double semitones,
                                                 double f0_floor, double f0_ceil) {
    const double factor = std::pow(2.0, semitones / 12.0);
    std::vector<double> out(f0.size());
    for (std::size_t i = 0; i < f0.size(); ++i)
        out[i] = f0[i] > 0.0 ? std::clamp(f0[i] * factor, f0_floor, f0_ceil) : 0.0;
    return out;
}

// Time-scales the feature grid: N' = max(1, round(N * ratio)) frames, all
// tracks resampled exactly as align_length does. The hop stays fixed, so
// audible duration scales by the ratio.
inline ProsodicFeatures modify_duration(const ProsodicFeatures& f, double ratio) {
    if (!(ratio > ManipulationParams::kDurationMin && ratio < ManipulationParams::kDurationMax))
        throw BoundsViolation("modify_duration: ratio outside (0.1, 10)");
    const std::size_t target = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::llround(static_cast<double>(f.num_frames()) * ratio)));
    if (target == f.num_frames()) return f;
    return align_length(f, target);
}

// Uniform power-domain gain on the spectral envelope; synthesized RMS scales
// by sqrt(scale).
inline std::vector<std::vector<double>> scale_energy(const std::vector<std::vector<double>>& sp,
                                                     double scale) {
    if (!(scale > ManipulationParams::kEnergyMin && scale < ManipulationParams::kEnergyMax))
        throw BoundsViolation("scale_energy: scale outside (1e-4, 1e4)");
    std::vector<std::vector<double>> out(sp.size());
    for (std::size_t i = 0; i < sp.size(); ++i) {
        out[i].resize(sp[i].size());
        for (std::size_t k = 0; k < sp[i].size(); ++k) {
            if (sp[i][k] < 0.0)
                throw InvariantViolation("scale_energy: negative spectral power");
            out[i][k] = sp[i][k] * scale;
        }
    }
    return out;
}

// In-place RMS gain: the envelope is power, so it takes the square; the
// energy track scales linearly.
inline void apply_energy_gain(ProsodicFeatures& f, double rms_gain) {
    if (rms_gain == 1.0) return;
    const double power_gain = rms_gain * rms_gain;
    for (auto& row : f.sp)
        for (double& v : row) v *= power_gain;
    for (double& e : f.energy) e *= rms_gain;
}

// Full transform: duration first (pitch and energy are pointwise, so they
// must act on the final frame grid), then pitch, then energy. Identity
// params return the input bit-exactly.
inline ProsodicFeatures manipulate_features(const ProsodicFeatures& f,
                                            const ManipulationParams& params,
                                            const AnalysisConfig& cfg = {}) {
    params.validate();
    ProsodicFeatures out = modify_duration(f, params.duration_ratio);
    if (params.pitch_shift_hz != 0.0)
        out.f0 = shift_pitch(out.f0, params.pitch_shift_hz, cfg.f0_floor, cfg.f0_ceil);
    apply_energy_gain(out, params.energy_scale);
    return out;
}

inline nlohmann::json to_json(const ManipulationParams& p) {
    return nlohmann::json{{"pitch_shift_hz", p.pitch_shift_hz},
                          {"duration_ratio", p.duration_ratio},
                          {"energy_scale", p.energy_scale}};
}

inline ManipulationParams params_from_json(const nlohmann::json& j) {
    ManipulationParams p;
    try {
        p.pitch_shift_hz = j.at("pitch_shift_hz").get<double>();
        p.duration_ratio = j.at("duration_ratio").get<double>();
        p.energy_scale = j.at("energy_scale").get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw SchemaViolation(std::string("params: bad JSON: ") + e.what());
    }
    p.validate();
    return p;
}

}  // namespace prosody
