// Command-line surface over the prosody toolkit: feature analysis, pairwise
// comparison, parameter training, application, batch corpus processing, and
// plot-data export.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "prosody/prosody.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitInternal = 3;

struct AnalysisFlags {
    double frame_period_ms = 5.0;
    double f0_floor = 71.0;
    double f0_ceil = 800.0;
    std::size_t fft_size = 1024;

    void attach(CLI::App* cmd) {
        cmd->add_option("--frame-period", frame_period_ms, "Analysis hop in ms")
            ->check(CLI::PositiveNumber);
        cmd->add_option("--f0-floor", f0_floor, "Lowest trackable F0 in Hz")
            ->check(CLI::PositiveNumber);
        cmd->add_option("--f0-ceil", f0_ceil, "Highest trackable F0 in Hz")
            ->check(CLI::PositiveNumber);
        cmd->add_option("--fft-size", fft_size, "Frame length (power of two)");
    }

    prosody::AnalysisConfig config() const {
        prosody::AnalysisConfig cfg;
        cfg.frame_period_ms = frame_period_ms;
        cfg.f0_floor = f0_floor;
        cfg.f0_ceil = f0_ceil;
        cfg.fft_size = fft_size;
        return cfg;
    }
};

prosody::AudioBuffer load_canonical(const std::string& path) {
    return prosody::resample(prosody::read_wav(path), prosody::kCanonicalRate);
}

prosody::ProsodicFeatures analyze_file(const std::string& path,
                                       const prosody::AnalysisConfig& cfg) {
    return prosody::extract_features(load_canonical(path), cfg);
}

std::string csv_safe(std::string s) {
    for (char& c : s)
        if (c == ',' || c == '\n') c = ';';
    return s;
}

void write_loss_csv(const std::string& path, const std::vector<prosody::EpochStats>& history) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw prosody::IoFailure("cannot open " + path);
    os << "epoch,avg_loss\n";
    char buf[64];
    for (const auto& e : history) {
        std::snprintf(buf, sizeof buf, "%zu,%.12g\n", e.epoch, e.avg_loss);
        os << buf;
    }
}

int run(int argc, char** argv) {
    CLI::App app{"prosody: compare, learn, and transfer pitch/duration/energy "
                 "characteristics between paired recordings"};
    app.require_subcommand(1);

    // ---- analyze ----
    auto* analyze = app.add_subcommand("analyze", "Extract prosodic features from a WAV file");
    std::string an_input, an_out;
    AnalysisFlags an_flags;
    analyze->add_option("input", an_input, "Input WAV")->required();
    analyze->add_option("--out", an_out, "Output feature JSON")->required();
    an_flags.attach(analyze);
    analyze->callback([&] {
        prosody::save_features(an_out, analyze_file(an_input, an_flags.config()));
        std::cout << "wrote " << an_out << "\n";
    });

    // ---- compare ----
    auto* compare = app.add_subcommand("compare", "Compare prosody of a human/TTS pair");
    std::string cp_human, cp_tts, cp_out;
    AnalysisFlags cp_flags;
    compare->add_option("human", cp_human, "Human WAV")->required();
    compare->add_option("tts", cp_tts, "TTS WAV")->required();
    compare->add_option("--out", cp_out, "Output report JSON")->required();
    cp_flags.attach(compare);
    compare->callback([&] {
        const auto cfg = cp_flags.config();
        const auto rep =
            prosody::compare_features(analyze_file(cp_human, cfg), analyze_file(cp_tts, cfg));
        std::ofstream os(cp_out, std::ios::trunc);
        if (!os) throw prosody::IoFailure("cannot open " + cp_out);
        os << prosody::to_json(rep).dump(2) << '\n';
        std::cout << "pitch_diff_hz=" << rep.pitch_diff_hz
                  << " duration_ratio=" << rep.duration_ratio
                  << " energy_ratio=" << rep.energy_ratio << "\n";
    });

    // ---- train ----
    auto* train = app.add_subcommand("train", "Learn manipulation parameters from a corpus");
    std::string tr_manifest, tr_out, tr_loss_out;
    AnalysisFlags tr_flags;
    std::size_t tr_epochs = 5;
    double tr_lr = 0.3, tr_f0_scale = 100.0;
    std::vector<double> tr_weights;
    bool tr_verify = false;
    train->add_option("manifest", tr_manifest, "Corpus manifest JSON")->required();
    train->add_option("--out", tr_out, "Output model JSON")->required();
    train->add_option("--loss-out", tr_loss_out, "Per-epoch loss CSV (default <model>_loss.csv)");
    train->add_option("--epochs", tr_epochs, "Training epochs")->check(CLI::PositiveNumber);
    train->add_option("--lr", tr_lr, "Learning rate")->check(CLI::PositiveNumber);
    train->add_option("--weights", tr_weights, "Loss weights: pitch duration energy")
        ->expected(3);
    train->add_option("--f0-scale", tr_f0_scale, "Hz normalizer for the pitch loss term")
        ->check(CLI::PositiveNumber);
    train->add_flag("--verify", tr_verify, "Cross-check the result against the grid-search oracle");
    tr_flags.attach(train);
    train->callback([&] {
        const auto cfg = tr_flags.config();
        const auto manifest = prosody::load_manifest(tr_manifest);

        std::vector<prosody::ComparisonReport> reports;
        for (const auto& pair : manifest.pairs) {
            reports.push_back(prosody::compare_features(analyze_file(pair.human_path, cfg),
                                                        analyze_file(pair.tts_path, cfg)));
            std::cout << pair.id << ": pitch_diff=" << reports.back().pitch_diff_hz
                      << " dur_ratio=" << reports.back().duration_ratio
                      << " energy_ratio=" << reports.back().energy_ratio << "\n";
        }

        prosody::TrainingConfig tcfg;
        tcfg.epochs = tr_epochs;
        tcfg.learning_rate = tr_lr;
        tcfg.f0_scale = tr_f0_scale;
        if (!tr_weights.empty())
            tcfg.weights = {tr_weights[0], tr_weights[1], tr_weights[2]};
        const auto result = prosody::train_model(reports, tcfg);

        for (const auto& e : result.history)
            std::cout << "epoch " << e.epoch << ": avg_loss=" << e.avg_loss << "\n";

        prosody::TrainedModel model{result.params, tcfg.weights, tcfg.f0_scale, tcfg.epochs,
                                    result.final_loss};
        prosody::save_model(tr_out, model);

        std::string loss_path = tr_loss_out;
        if (loss_path.empty()) {
            std::filesystem::path p(tr_out);
            p.replace_extension("");
            loss_path = p.string() + "_loss.csv";
        }
        write_loss_csv(loss_path, result.history);
        std::cout << "wrote " << tr_out << " and " << loss_path << "\n";

        if (tr_verify) {
            const auto oracle = prosody::brute_force_optimum(
                reports, tcfg.weights, tcfg.f0_scale, prosody::grid_covering(reports));
            const double dp = std::abs(oracle.pitch_shift_hz - result.params.pitch_shift_hz);
            const double dd = std::abs(oracle.duration_ratio - result.params.duration_ratio);
            const double de = std::abs(oracle.energy_scale - result.params.energy_scale);
            std::cout << "oracle: pitch=" << oracle.pitch_shift_hz
                      << " duration=" << oracle.duration_ratio
                      << " energy=" << oracle.energy_scale << " (deltas " << dp << ", " << dd
                      << ", " << de << ")\n";
            if (dp > 1e-3 || dd > 1e-3 || de > 1e-3)
                throw prosody::InvariantViolation(
                    "trained parameters disagree with the grid-search oracle; "
                    "raise --epochs or adjust --lr");
        }
    });

    // ---- apply ----
    auto* apply = app.add_subcommand("apply", "Apply a trained model to one TTS file");
    std::string ap_input, ap_model, ap_out;
    AnalysisFlags ap_flags;
    std::uint32_t ap_seed = 0;
    int ap_rate = 0;
    double ap_pitch_st = 0.0;
    bool ap_has_st = false;
    apply->add_option("input", ap_input, "TTS WAV to manipulate")->required();
    apply->add_option("--model", ap_model, "Trained model JSON")->required();
    apply->add_option("--out", ap_out, "Output WAV")->required();
    apply->add_option("--seed", ap_seed, "Noise seed for synthesis");
    apply->add_option("--rate", ap_rate, "Output sample rate (default: keep 16 kHz)");
    apply
        ->add_option("--pitch-st", ap_pitch_st,
                     "Shift pitch by this many semitones instead of the model's Hz offset")
        ->each([&](const std::string&) { ap_has_st = true; });
    ap_flags.attach(apply);
    apply->callback([&] {
        const auto cfg = ap_flags.config();
        const auto params = prosody::load_model(ap_model).params;
        const auto audio = load_canonical(ap_input);

        auto features = prosody::extract_features(audio, cfg);
        auto shaped = prosody::modify_duration(features, params.duration_ratio);
        shaped.f0 = ap_has_st ? prosody::shift_pitch_semitones(shaped.f0, ap_pitch_st,
                                                               cfg.f0_floor, cfg.f0_ceil)
                              : prosody::shift_pitch(shaped.f0, params.pitch_shift_hz,
                                                     cfg.f0_floor, cfg.f0_ceil);
        prosody::apply_energy_gain(shaped, params.energy_scale);

        prosody::AudioBuffer out = prosody::synthesize(shaped, {ap_seed});
        if (ap_rate > 0 && ap_rate != out.sample_rate) out = prosody::resample(out, ap_rate);
        prosody::write_wav(ap_out, out);
        std::cout << "wrote " << ap_out << " (" << out.duration_seconds() << " s)\n";
    });

    // ---- batch ----
    auto* batch = app.add_subcommand("batch", "Apply a trained model to every pair in a corpus");
    std::string ba_manifest, ba_model, ba_outdir;
    AnalysisFlags ba_flags;
    std::uint32_t ba_seed = 0;
    int ba_rate = 0;
    batch->add_option("manifest", ba_manifest, "Corpus manifest JSON")->required();
    batch->add_option("--model", ba_model, "Trained model JSON")->required();
    batch->add_option("--out-dir", ba_outdir, "Output directory")->required();
    batch->add_option("--seed", ba_seed, "Noise seed for synthesis");
    batch->add_option("--rate", ba_rate, "Output sample rate (default: keep 16 kHz)");
    ba_flags.attach(batch);
    batch->callback([&] {
        const auto cfg = ba_flags.config();
        const auto manifest = prosody::load_manifest(ba_manifest);
        const auto params = prosody::load_model(ba_model).params;
        std::filesystem::create_directories(ba_outdir);

        struct Row {
            std::string id, status;
            prosody::ComparisonReport before, after;
            bool ok = false;
        };
        std::vector<Row> rows;
        std::size_t failures = 0;

        for (const auto& pair : manifest.pairs) {
            Row row;
            row.id = pair.id;
            try {
                const auto human = analyze_file(pair.human_path, cfg);
                const auto tts = analyze_file(pair.tts_path, cfg);
                row.before = prosody::compare_features(human, tts);

                const auto shaped = prosody::manipulate_features(tts, params, cfg);
                prosody::AudioBuffer out = prosody::synthesize(shaped, {ba_seed});
                const auto remeasured = prosody::extract_features(out, cfg);
                row.after = prosody::compare_features(human, remeasured);

                if (ba_rate > 0 && ba_rate != out.sample_rate)
                    out = prosody::resample(out, ba_rate);
                prosody::write_wav(
                    (std::filesystem::path(ba_outdir) / (pair.id + ".wav")).string(), out);
                row.status = "ok";
                row.ok = true;
            } catch (const prosody::Error& e) {
                row.status = std::string("failed: ") + e.what();
                ++failures;
                std::cerr << pair.id << " failed: " << e.what() << "\n";
            }
            rows.push_back(std::move(row));
        }

        const std::string summary_path =
            (std::filesystem::path(ba_outdir) / "summary.csv").string();
        std::ofstream os(summary_path, std::ios::trunc);
        if (!os) throw prosody::IoFailure("cannot open " + summary_path);
        os << "id,status,pitch_diff_before_hz,duration_ratio_before,energy_ratio_before,"
              "pitch_diff_after_hz,duration_ratio_after,energy_ratio_after\n";
        char buf[256];
        double m[6] = {0, 0, 0, 0, 0, 0};
        std::size_t n_ok = 0;
        for (const Row& r : rows) {
            if (!r.ok) {
                os << r.id << ',' << csv_safe(r.status) << ",,,,,,\n";
                continue;
            }
            std::snprintf(buf, sizeof buf, "%s,ok,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g\n",
                          r.id.c_str(), r.before.pitch_diff_hz, r.before.duration_ratio,
                          r.before.energy_ratio, r.after.pitch_diff_hz, r.after.duration_ratio,
                          r.after.energy_ratio);
            os << buf;
            const double vals[6] = {r.before.pitch_diff_hz, r.before.duration_ratio,
                                    r.before.energy_ratio,  r.after.pitch_diff_hz,
                                    r.after.duration_ratio, r.after.energy_ratio};
            for (int i = 0; i < 6; ++i) m[i] += vals[i];
            ++n_ok;
        }
        if (n_ok > 0) {
            for (double& v : m) v /= static_cast<double>(n_ok);
            std::snprintf(buf, sizeof buf, "mean,ok,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g\n", m[0], m[1],
                          m[2], m[3], m[4], m[5]);
            os << buf;
        }
        os.close();
        std::cout << "processed " << n_ok << "/" << rows.size() << " pairs, summary at "
                  << summary_path << "\n";
        if (failures > 0)
            throw prosody::IoFailure(std::to_string(failures) + " pair(s) failed; see summary");
    });

    // ---- report ----
    auto* report = app.add_subcommand("report", "Export plot-ready comparison CSVs");
    std::string rp_a, rp_b, rp_outdir;
    report->add_option("features_a", rp_a, "First feature JSON")->required();
    report->add_option("features_b", rp_b, "Second feature JSON")->required();
    report->add_option("--out-dir", rp_outdir, "Output directory")->required();
    report->callback([&] {
        const auto fa = prosody::load_features(rp_a);
        const auto fb = prosody::load_features(rp_b);
        std::filesystem::create_directories(rp_outdir);

        const std::string f0_path =
            (std::filesystem::path(rp_outdir) / "f0_comparison.csv").string();
        std::ofstream f0os(f0_path, std::ios::trunc);
        if (!f0os) throw prosody::IoFailure("cannot open " + f0_path);
        f0os << "time_s,f0_a_hz,f0_b_hz\n";
        const std::size_t rows = std::max(fa.num_frames(), fb.num_frames());
        char buf[128];
        for (std::size_t i = 0; i < rows; ++i) {
            std::snprintf(buf, sizeof buf, "%.9g,", static_cast<double>(i) *
                                                        fa.frame_period_ms / 1000.0);
            f0os << buf;
            if (i < fa.num_frames()) {
                std::snprintf(buf, sizeof buf, "%.9g", fa.f0[i]);
                f0os << buf;
            }
            f0os << ',';
            if (i < fb.num_frames()) {
                std::snprintf(buf, sizeof buf, "%.9g", fb.f0[i]);
                f0os << buf;
            }
            f0os << '\n';
        }
        f0os.close();

        if (fa.fft_size != fb.fft_size || fa.sample_rate != fb.sample_rate)
            throw prosody::ConfigMismatch(
                "report: envelope export needs matching fft_size and sample_rate");
        const std::string env_path =
            (std::filesystem::path(rp_outdir) / "envelope_comparison.csv").string();
        std::ofstream envos(env_path, std::ios::trunc);
        if (!envos) throw prosody::IoFailure("cannot open " + env_path);
        envos << "freq_hz,log_power_a,log_power_b\n";
        const auto mean_log = [](const prosody::ProsodicFeatures& f, std::size_t k) {
            double acc = 0.0;
            for (std::size_t i = 0; i < f.num_frames(); ++i) acc += std::log10(f.sp[i][k]);
            return acc / static_cast<double>(f.num_frames());
        };
        for (std::size_t k = 0; k < fa.num_bins(); ++k) {
            const double freq = static_cast<double>(k) * fa.sample_rate /
                                static_cast<double>(fa.fft_size);
            std::snprintf(buf, sizeof buf, "%.9g,%.9g,%.9g\n", freq, mean_log(fa, k),
                          mean_log(fb, k));
            envos << buf;
        }
        std::cout << "wrote " << f0_path << " and " << env_path << "\n";
    });

    // ---- fixture ----
    auto* fixture = app.add_subcommand("fixture", "Generate a synthetic paired test corpus");
    std::string fx_outdir;
    std::uint32_t fx_seed = 42;
    prosody::FixtureSpec fx_spec;
    fixture->add_option("--out-dir", fx_outdir, "Output directory")->required();
    fixture->add_option("--seed", fx_seed, "Generator seed");
    fixture->add_option("--pairs", fx_spec.num_pairs, "Number of pairs");
    fixture->add_option("--pitch-offset", fx_spec.pitch_offset_hz,
                        "Hz by which each TTS clip is detuned down");
    fixture->add_option("--duration-factor", fx_spec.duration_factor,
                        "TTS duration relative to human");
    fixture->add_option("--energy-factor", fx_spec.energy_factor,
                        "TTS amplitude relative to human");
    fixture->callback([&] {
        const auto manifest = prosody::generate_fixture_corpus(fx_outdir, fx_seed, fx_spec);
        std::cout << "wrote " << manifest.pairs.size() << " pairs under " << fx_outdir << "\n";
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitUsage;
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const prosody::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return kExitInternal;
    }
}
