#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "prosody/compare.hpp"
#include "prosody/errors.hpp"
#include "prosody/manipulate.hpp"

namespace prosody {

struct LossWeights {
    double w_pitch = 1.0;
    double w_duration = 1.0;
    double w_energy = 1.0;

    void validate() const {
        if (w_pitch < 0.0 || w_duration < 0.0 || w_energy < 0.0)
            throw BoundsViolation("LossWeights: weights must be nonnegative");
        if (w_pitch + w_duration + w_energy <= 0.0)
            throw BoundsViolation("LossWeights: at least one weight must be positive");
    }
};

struct TrainingConfig {
    std::size_t epochs = 5;
    double learning_rate = 0.3;
    LossWeights weights;
    double f0_scale = 100.0;  // Hz normalizer putting the pitch term on ratio scale

    void validate() const {
        if (epochs < 1) throw BoundsViolation("TrainingConfig: epochs must be >= 1");
        if (!(learning_rate > 0.0))
            throw BoundsViolation("TrainingConfig: learning_rate must be positive");
        if (!(f0_scale > 0.0)) throw BoundsViolation("TrainingConfig: f0_scale must be positive");
        weights.validate();
    }
};

struct EpochStats {
    std::size_t epoch = 0;
    double avg_loss = 0.0;
};

struct ParamGradient {
    double d_pitch = 0.0;
    double d_duration = 0.0;
    double d_energy = 0.0;
};

namespace detail {
inline void check_positive_ratios(const ManipulationParams& p) {
    if (!(p.duration_ratio > 0.0) || !(p.energy_scale > 0.0))
        throw BoundsViolation("loss: duration_ratio and energy_scale must be positive");
}
}  // namespace detail

// Squared mismatch between the params and the measured pair discrepancies:
//   w_p ((pitch_diff - p) / f0_scale)^2 + w_d (dur/d - 1)^2 + w_e (en/e - 1)^2
// Zero exactly when the params equal the report's triple.
inline double pair_loss(const ManipulationParams& params, const ComparisonReport& report,
                        const LossWeights& w = {}, double f0_scale = 100.0) {
    detail::check_positive_ratios(params);
    w.validate();
    const double pitch = (report.pitch_diff_hz - params.pitch_shift_hz) / f0_scale;
    const double dur = report.duration_ratio / params.duration_ratio - 1.0;
    const double en = report.energy_ratio / params.energy_scale - 1.0;
    return w.w_pitch * pitch * pitch + w.w_duration * dur * dur + w.w_energy * en * en;
}

// Analytic partials of pair_loss with respect to each parameter.
inline ParamGradient loss_gradient(const ManipulationParams& params,
                                   const ComparisonReport& report, const LossWeights& w = {},
                                   double f0_scale = 100.0) {
    detail::check_positive_ratios(params);
    w.validate();
    ParamGradient g;
    g.d_pitch = -2.0 * w.w_pitch * (report.pitch_diff_hz - params.pitch_shift_hz) /
                (f0_scale * f0_scale);
    const double rd = report.duration_ratio;
    g.d_duration = -2.0 * w.w_duration * (rd / params.duration_ratio - 1.0) * rd /
                   (params.duration_ratio * params.duration_ratio);
    const double re = report.energy_ratio;
    g.d_energy = -2.0 * w.w_energy * (re / params.energy_scale - 1.0) * re /
                 (params.energy_scale * params.energy_scale);
    return g;
}

// One full-batch descent step. Each parameter steps in the coordinate its
// loss term is expressed in: pitch in units of f0_scale, the two ratios in
// log domain (which keeps them strictly positive). Returns the updated
// params and the pre-update batch average loss.
inline std::pair<ManipulationParams, double> train_step(const ManipulationParams& params,
                                                        const std::vector<ComparisonReport>& batch,
                                                        double lr, const LossWeights& w = {},
                                                        double f0_scale = 100.0) {
    if (batch.empty()) throw EmptyBatch("train_step: empty batch");
    if (!(lr >= 0.0)) throw BoundsViolation("train_step: negative learning rate");

    double loss = 0.0;
    ParamGradient mean;
    for (const ComparisonReport& rep : batch) {
        loss += pair_loss(params, rep, w, f0_scale);
        const ParamGradient g = loss_gradient(params, rep, w, f0_scale);
        mean.d_pitch += g.d_pitch;
        mean.d_duration += g.d_duration;
        mean.d_energy += g.d_energy;
    }
    const double inv = 1.0 / static_cast<double>(batch.size());
    loss *= inv;
    mean.d_pitch *= inv;
    mean.d_duration *= inv;
    mean.d_energy *= inv;

    ManipulationParams next = params;
    next.pitch_shift_hz -= lr * f0_scale * f0_scale * mean.d_pitch;
    next.duration_ratio *= std::exp(-lr * params.duration_ratio * mean.d_duration);
    next.energy_scale *= std::exp(-lr * params.energy_scale * mean.d_energy);

    // keep iterates inside the params sanity box
    next.duration_ratio = std::clamp(next.duration_ratio, ManipulationParams::kDurationMin * 1.01,
                                     ManipulationParams::kDurationMax * 0.99);
    next.energy_scale = std::clamp(next.energy_scale, ManipulationParams::kEnergyMin * 1.01,
                                   ManipulationParams::kEnergyMax * 0.99);
    return {next, loss};
}

struct TrainingResult {
    ManipulationParams params;
    std::vector<EpochStats> history;
    double final_loss = 0.0;
};

// Full-batch gradient descent from the identity params.
inline TrainingResult train_model(const std::vector<ComparisonReport>& pairs,
                                  const TrainingConfig& cfg = {}) {
    if (pairs.empty()) throw EmptyCorpus("train_model: no pairs");
    cfg.validate();

    TrainingResult res;
    res.params = ManipulationParams{};
    res.history.reserve(cfg.epochs);
    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        auto [next, loss] =
            train_step(res.params, pairs, cfg.learning_rate, cfg.weights, cfg.f0_scale);
        res.params = next;
        res.history.push_back({epoch, loss});
    }
    double final_loss = 0.0;
    for (const ComparisonReport& rep : pairs)
        final_loss += pair_loss(res.params, rep, cfg.weights, cfg.f0_scale);
    res.final_loss = final_loss / static_cast<double>(pairs.size());
    return res;
}

struct GridSpec {
    double pitch_lo = -100.0, pitch_hi = 100.0;
    double ratio_lo = 0.2, ratio_hi = 5.0;
    std::size_t coarse_steps = 33;
    double resolution = 1e-4;
};

// Grid bounds padded around the observed discrepancies of a corpus.
inline GridSpec grid_covering(const std::vector<ComparisonReport>& pairs) {
    if (pairs.empty()) throw EmptyCorpus("grid_covering: no pairs");
    GridSpec g;
    g.pitch_lo = pairs[0].pitch_diff_hz;
    g.pitch_hi = pairs[0].pitch_diff_hz;
    g.ratio_lo = std::min(pairs[0].duration_ratio, pairs[0].energy_ratio);
    g.ratio_hi = std::max(pairs[0].duration_ratio, pairs[0].energy_ratio);
    for (const ComparisonReport& r : pairs) {
        g.pitch_lo = std::min(g.pitch_lo, r.pitch_diff_hz);
        g.pitch_hi = std::max(g.pitch_hi, r.pitch_diff_hz);
        g.ratio_lo = std::min({g.ratio_lo, r.duration_ratio, r.energy_ratio});
        g.ratio_hi = std::max({g.ratio_hi, r.duration_ratio, r.energy_ratio});
    }
    g.pitch_lo -= 5.0;
    g.pitch_hi += 5.0;
    g.ratio_lo *= 0.8;
    g.ratio_hi *= 1.25;
    return g;
}

// Exhaustive coarse grid search over the corpus loss, refined one coordinate
// at a time by interval bisection down to the requested resolution. Serves
// as the optimizer oracle: it never touches the gradient code.
inline ManipulationParams brute_force_optimum(const std::vector<ComparisonReport>& pairs,
                                              const LossWeights& w = {}, double f0_scale = 100.0,
                                              const GridSpec& grid = {}) {
    if (pairs.empty()) throw EmptyCorpus("brute_force_optimum: no pairs");
    if (!(grid.pitch_lo < grid.pitch_hi) || !(0.0 < grid.ratio_lo) ||
        !(grid.ratio_lo < grid.ratio_hi) || grid.coarse_steps < 3 || !(grid.resolution > 0.0))
        throw DegenerateGrid("brute_force_optimum: bad grid spec");

    const auto corpus_loss = [&](const ManipulationParams& p) {
        double acc = 0.0;
        for (const ComparisonReport& r : pairs) acc += pair_loss(p, r, w, f0_scale);
        return acc / static_cast<double>(pairs.size());
    };

    const std::size_t steps = grid.coarse_steps;
    const auto lerp = [](double lo, double hi, double t) { return lo + (hi - lo) * t; };

    ManipulationParams best;
    double best_loss = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < steps; ++a) {
        for (std::size_t b = 0; b < steps; ++b) {
            for (std::size_t c = 0; c < steps; ++c) {
                ManipulationParams p;
                p.pitch_shift_hz =
                    lerp(grid.pitch_lo, grid.pitch_hi, a / static_cast<double>(steps - 1));
                p.duration_ratio =
                    lerp(grid.ratio_lo, grid.ratio_hi, b / static_cast<double>(steps - 1));
                p.energy_scale =
                    lerp(grid.ratio_lo, grid.ratio_hi, c / static_cast<double>(steps - 1));
                const double l = corpus_loss(p);
                if (l < best_loss) {
                    best_loss = l;
                    best = p;
                }
            }
        }
    }

    // per-axis bisection within one coarse cell of the grid optimum
    const auto refine = [&](double center, double halfwidth, double lo_bound,
                            auto&& set_axis) {
        double lo = std::max(center - halfwidth, lo_bound);
        double hi = center + halfwidth;
        while (hi - lo > grid.resolution) {
            const double m1 = lo + (hi - lo) / 3.0;
            const double m2 = hi - (hi - lo) / 3.0;
            ManipulationParams p1 = best, p2 = best;
            set_axis(p1, m1);
            set_axis(p2, m2);
            if (corpus_loss(p1) <= corpus_loss(p2))
                hi = m2;
            else
                lo = m1;
        }
        return 0.5 * (lo + hi);
    };

    const double pitch_cell = (grid.pitch_hi - grid.pitch_lo) / static_cast<double>(steps - 1);
    const double ratio_cell = (grid.ratio_hi - grid.ratio_lo) / static_cast<double>(steps - 1);
    for (int cycle = 0; cycle < 3; ++cycle) {
        best.pitch_shift_hz =
            refine(best.pitch_shift_hz, pitch_cell, grid.pitch_lo,
                   [](ManipulationParams& p, double v) { p.pitch_shift_hz = v; });
        best.duration_ratio =
            refine(best.duration_ratio, ratio_cell, 1e-9,
                   [](ManipulationParams& p, double v) { p.duration_ratio = v; });
        best.energy_scale =
            refine(best.energy_scale, ratio_cell, 1e-9,
                   [](ManipulationParams& p, double v) { p.energy_scale = v; });
    }
    return best;
}

// On-disk trained-model representation.
struct TrainedModel {
    ManipulationParams params;
    LossWeights weights;
    double f0_scale = 100.0;
    std::size_t epochs_run = 0;
    double final_loss = 0.0;
};

inline nlohmann::json to_json(const TrainedModel& m) {
    return nlohmann::json{{"pitch_shift_hz", m.params.pitch_shift_hz},
                          {"duration_ratio", m.params.duration_ratio},
                          {"energy_scale", m.params.energy_scale},
                          {"weights",
                           {{"w_pitch", m.weights.w_pitch},
                            {"w_duration", m.weights.w_duration},
                            {"w_energy", m.weights.w_energy}}},
                          {"f0_scale", m.f0_scale},
                          {"epochs_run", m.epochs_run},
                          {"final_loss", m.final_loss}};
}

inline TrainedModel model_from_json(const nlohmann::json& j) {
    TrainedModel m;
    try {
        m.params.pitch_shift_hz = j.at("pitch_shift_hz").get<double>();
        m.params.duration_ratio = j.at("duration_ratio").get<double>();
        m.params.energy_scale = j.at("energy_scale").get<double>();
        const auto& w = j.at("weights");
        m.weights.w_pitch = w.at("w_pitch").get<double>();
        m.weights.w_duration = w.at("w_duration").get<double>();
        m.weights.w_energy = w.at("w_energy").get<double>();
        m.f0_scale = j.at("f0_scale").get<double>();
        m.epochs_run = j.at("epochs_run").get<std::size_t>();
        m.final_loss = j.at("final_loss").get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw SchemaViolation(std::string("model: bad JSON: ") + e.what());
    }
    m.params.validate();
    return m;
}

inline void save_model(const std::string& path, const TrainedModel& m) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw IoFailure("save_model: cannot open " + path);
    os << to_json(m).dump(2) << '\n';
    if (!os) throw IoFailure("save_model: short write to " + path);
}

inline TrainedModel load_model(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw MissingFile("load_model: cannot open " + path);
    nlohmann::json j;
    try {
        is >> j;
    } catch (const nlohmann::json::exception& e) {
        throw SchemaViolation(std::string("load_model: ") + e.what());
    }
    return model_from_json(j);
}

}  // namespace prosody
