#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "prosody/audio_io.hpp"
#include "prosody/errors.hpp"

namespace prosody {

struct PairEntry {
    std::string id;
    std::string human_path;
    std::string tts_path;
    std::string annotation_id;  // empty when absent
};

// Paired human/TTS registry. Pairing is one-to-one: ids are unique and no
// audio file appears in two pairs.
struct CorpusManifest {
    std::vector<PairEntry> pairs;
    std::string language_tag;
};

struct StressAnnotation {
    std::string filename;
    std::size_t word_count = 0;
    std::size_t label_count = 0;
    std::size_t correct_count = 0;
    std::vector<std::string> word_labels;

    void validate() const {
        if (correct_count > label_count)
            throw InvariantViolation("annotation " + filename + ": correct_count " +
                                     std::to_string(correct_count) + " exceeds label_count " +
                                     std::to_string(label_count));
        if (!word_labels.empty() && word_labels.size() != word_count)
            throw InvariantViolation("annotation " + filename +
                                     ": word_labels length does not match word_count");
    }
};

// Loads and eagerly validates a manifest. Relative audio paths are resolved
// against the manifest's own directory.
inline CorpusManifest load_manifest(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw MissingFile("load_manifest: cannot open " + path);
    nlohmann::json j;
    try {
        is >> j;
    } catch (const nlohmann::json::exception& e) {
        throw SchemaViolation(std::string("load_manifest: ") + e.what());
    }

    CorpusManifest m;
    const std::filesystem::path base = std::filesystem::path(path).parent_path();
    const auto resolve = [&](const std::string& p) {
        std::filesystem::path fp(p);
        return fp.is_absolute() ? fp.string() : (base / fp).string();
    };

    try {
        m.language_tag = j.at("language_tag").get<std::string>();
        for (const auto& pj : j.at("pairs")) {
            PairEntry e;
            e.id = pj.at("id").get<std::string>();
            e.human_path = resolve(pj.at("human_path").get<std::string>());
            e.tts_path = resolve(pj.at("tts_path").get<std::string>());
            if (pj.contains("annotation_id"))
                e.annotation_id = pj.at("annotation_id").get<std::string>();
            m.pairs.push_back(std::move(e));
        }
    } catch (const nlohmann::json::exception& e) {
        throw SchemaViolation(std::string("load_manifest: bad manifest shape: ") + e.what());
    }

    std::set<std::string> ids, paths;
    for (const PairEntry& e : m.pairs) {
        if (!ids.insert(e.id).second)
            throw DuplicateId("load_manifest: duplicate pair id " + e.id);
        if (!paths.insert(e.human_path).second)
            throw BrokenPairing("load_manifest: " + e.human_path + " appears in two pairs");
        if (!paths.insert(e.tts_path).second)
            throw BrokenPairing("load_manifest: " + e.tts_path + " appears in two pairs");
        if (!std::filesystem::exists(e.human_path))
            throw MissingFile("load_manifest: missing audio file " + e.human_path);
        if (!std::filesystem::exists(e.tts_path))
            throw MissingFile("load_manifest: missing audio file " + e.tts_path);
    }
    return m;
}

inline void save_manifest(const std::string& path, const CorpusManifest& m) {
    nlohmann::json pairs = nlohmann::json::array();
    for (const PairEntry& e : m.pairs) {
        nlohmann::json pj{{"id", e.id}, {"human_path", e.human_path}, {"tts_path", e.tts_path}};
        if (!e.annotation_id.empty()) pj["annotation_id"] = e.annotation_id;
        pairs.push_back(std::move(pj));
    }
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw IoFailure("save_manifest: cannot open " + path);
    os << nlohmann::json{{"language_tag", m.language_tag}, {"pairs", pairs}}.dump(2) << '\n';
    if (!os) throw IoFailure("save_manifest: short write to " + path);
}

inline constexpr const char* kAnnotationHeader =
    "filename,word_count,label_count,correct_count,word_labels";

// Parses the stress-annotation CSV. word_labels is a |-delimited list
// inside the last cell.
inline std::vector<StressAnnotation> load_annotations(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw MissingFile("load_annotations: cannot open " + path);

    std::string line;
    if (!std::getline(is, line)) throw HeaderMismatch("load_annotations: empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kAnnotationHeader)
        throw HeaderMismatch("load_annotations: expected header '" +
                             std::string(kAnnotationHeader) + "', got '" + line + "'");

    const auto parse_count = [](const std::string& cell, std::size_t row) {
        try {
            std::size_t used = 0;
            const long v = std::stol(cell, &used);
            if (used != cell.size() || v < 0) throw std::invalid_argument(cell);
            return static_cast<std::size_t>(v);
        } catch (const std::exception&) {
            throw SchemaViolation("load_annotations: row " + std::to_string(row) +
                                  ": '" + cell + "' is not a nonnegative integer");
        }
    };

    std::vector<StressAnnotation> out;
    std::size_t row = 1;
    while (std::getline(is, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;

        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (line.back() == ',') cells.push_back("");
        if (cells.size() != 5)
            throw RowArity("load_annotations: row " + std::to_string(row) + " has " +
                           std::to_string(cells.size()) + " cells, expected 5");

        StressAnnotation a;
        a.filename = cells[0];
        a.word_count = parse_count(cells[1], row);
        a.label_count = parse_count(cells[2], row);
        a.correct_count = parse_count(cells[3], row);
        if (!cells[4].empty()) {
            std::stringstream ls(cells[4]);
            std::string label;
            while (std::getline(ls, label, '|')) a.word_labels.push_back(label);
        }
        a.validate();
        out.push_back(std::move(a));
    }
    return out;
}

inline void save_annotations(const std::string& path, const std::vector<StressAnnotation>& rows) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw IoFailure("save_annotations: cannot open " + path);
    os << kAnnotationHeader << '\n';
    for (const StressAnnotation& a : rows) {
        a.validate();
        os << a.filename << ',' << a.word_count << ',' << a.label_count << ','
           << a.correct_count << ',';
        for (std::size_t i = 0; i < a.word_labels.size(); ++i)
            os << (i ? "|" : "") << a.word_labels[i];
        os << '\n';
    }
    if (!os) throw IoFailure("save_annotations: short write to " + path);
}

// Synthetic paired corpus standing in for recorded speech. Each "human"
// clip is a vowel-like harmonic tone (sawtooth partials shaped by three
// fixed resonances); its "TTS" counterpart is the same recipe detuned down
// by pitch_offset_hz, time-scaled by duration_factor, and scaled in
// amplitude by energy_factor, so the corpus carries known discrepancies.
struct FixtureSpec {
    std::size_t num_pairs = 8;
    double pitch_offset_hz = 30.0;
    double duration_factor = 1.0 / 0.85;
    double energy_factor = 0.8;
    double human_duration_s = 1.0;
    double f0_lo = 150.0;
    double f0_hi = 300.0;
    double human_rms = 0.12;
    int sample_rate = kCanonicalRate;
};

namespace detail {

// vowel-ish weighting: three resonances over a gentle floor
inline double resonance_weight(double freq_hz) {
    constexpr double centers[3] = {500.0, 1500.0, 2500.0};
    constexpr double widths[3] = {80.0, 120.0, 240.0};
    constexpr double gains[3] = {1.0, 0.63, 0.4};
    double w = 0.1;
    for (int j = 0; j < 3; ++j) {
        const double d = freq_hz - centers[j];
        w += gains[j] * widths[j] * widths[j] / (widths[j] * widths[j] + d * d);
    }
    return w;
}

inline AudioBuffer fixture_tone(double f0, double duration_s, double target_rms, int rate) {
    AudioBuffer buf;
    buf.sample_rate = rate;
    const std::size_t len = static_cast<std::size_t>(std::llround(duration_s * rate));
    buf.samples.assign(len, 0.0);

    const int partials = static_cast<int>(0.45 * rate / f0);
    for (int h = 1; h <= partials; ++h) {
        const double amp = resonance_weight(h * f0) / h;
        const double omega = 2.0 * fft::kPi * h * f0 / rate;
        for (std::size_t i = 0; i < len; ++i)
            buf.samples[i] += amp * std::sin(omega * static_cast<double>(i));
    }

    double power = 0.0;
    for (double s : buf.samples) power += s * s;
    const double rms = std::sqrt(power / static_cast<double>(len));
    const double gain = rms > 0.0 ? target_rms / rms : 0.0;
    for (double& s : buf.samples) s *= gain;
    return buf;
}

}  // namespace detail

// Writes the paired WAVs plus a manifest.json into out_dir; returns the
// loaded (validated, path-resolved) manifest. Deterministic per seed.
inline CorpusManifest generate_fixture_corpus(const std::string& out_dir, std::uint32_t seed,
                                              const FixtureSpec& spec = {}) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw IoFailure("generate_fixture_corpus: cannot create " + out_dir);

    std::mt19937 rng(seed);
    const auto uniform = [&rng](double lo, double hi) {
        const double u = (static_cast<double>(rng()) + 0.5) / 4294967296.0;
        return lo + (hi - lo) * u;
    };

    CorpusManifest m;
    m.language_tag = "FIX";
    for (std::size_t p = 0; p < spec.num_pairs; ++p) {
        const double f0 = uniform(spec.f0_lo, spec.f0_hi);
        char idbuf[16];
        std::snprintf(idbuf, sizeof idbuf, "pair_%03zu", p);
        const std::string id(idbuf);
        const std::string human_name = id + "_human.wav";
        const std::string tts_name = id + "_tts.wav";

        const AudioBuffer human = detail::fixture_tone(f0, spec.human_duration_s, spec.human_rms,
                                                       spec.sample_rate);
        const AudioBuffer tts = detail::fixture_tone(
            f0 - spec.pitch_offset_hz, spec.human_duration_s * spec.duration_factor,
            spec.human_rms * spec.energy_factor, spec.sample_rate);

        const std::filesystem::path dir(out_dir);
        write_wav((dir / human_name).string(), human);
        write_wav((dir / tts_name).string(), tts);
        m.pairs.push_back({id, human_name, tts_name, ""});
    }

    const std::string manifest_path = (std::filesystem::path(out_dir) / "manifest.json").string();
    save_manifest(manifest_path, m);
    return load_manifest(manifest_path);
}

}  // namespace prosody
