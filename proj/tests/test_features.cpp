#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "prosody/features.hpp"
#include "test_support.hpp"

using namespace prosody;
namespace ts = testsupport;

namespace {
constexpr int kRate = 16000;

double mean_voiced_f0(const std::vector<double>& f0) {
    double acc = 0.0;
    std::size_t n = 0;
    for (double v : f0)
        if (v > 0.0) {
            acc += v;
            ++n;
        }
    return n ? acc / static_cast<double>(n) : 0.0;
}

double voiced_fraction(const std::vector<double>& f0) {
    std::size_t n = 0;
    for (double v : f0)
        if (v > 0.0) ++n;
    return static_cast<double>(n) / static_cast<double>(f0.size());
}
}  // namespace

TEST_CASE("estimate_f0 tracks a 220 Hz sawtooth") {
    const AudioBuffer b = ts::make_sawtooth(220.0, 1.0, kRate, 0.5);
    // cross-check the fixture itself with the independent spectral oracle
    REQUIRE(ts::dominant_frequency_hz(b, 100.0, 300.0) == Catch::Approx(220.0).margin(3.0));

    const auto [f0, periodicity] = estimate_f0(b, {});
    REQUIRE(f0.size() == 200);
    for (std::size_t i = 10; i + 10 < f0.size(); ++i) {
        REQUIRE(f0[i] > 0.0);
        REQUIRE(std::abs(f0[i] - 220.0) <= 220.0 * 0.03);
        REQUIRE(periodicity[i] >= 0.45);
    }
}

TEST_CASE("estimate_f0 leaves white noise unvoiced") {
    const AudioBuffer b = ts::make_noise(1.0, kRate, 0.1, 99);  // -20 dBFS
    const auto [f0, periodicity] = estimate_f0(b, {});
    std::size_t unvoiced = 0;
    for (double v : f0)
        if (v == 0.0) ++unvoiced;
    REQUIRE(static_cast<double>(unvoiced) >= 0.95 * static_cast<double>(f0.size()));
}

TEST_CASE("estimate_f0 on digital silence") {
    AudioBuffer b;
    b.sample_rate = kRate;
    b.samples.assign(16000, 0.0);
    const auto [f0, periodicity] = estimate_f0(b, {});
    for (std::size_t i = 0; i < f0.size(); ++i) {
        REQUIRE(f0[i] == 0.0);
        REQUIRE(periodicity[i] == 0.0);
    }
}

TEST_CASE("estimate_f0 rejects too-short buffers") {
    AudioBuffer b;
    b.sample_rate = kRate;
    b.samples.assign(10, 0.1);
    REQUIRE_THROWS_AS(estimate_f0(b, {}), BufferTooShort);
}

TEST_CASE("no octave errors across the tracking range") {
    for (double truth : {100.0, 150.0, 200.0, 250.0, 300.0, 350.0, 400.0}) {
        const AudioBuffer b = ts::make_sawtooth(truth, 0.6, kRate, 0.5);
        const auto [f0, periodicity] = estimate_f0(b, {});
        double acc = 0.0;
        std::size_t n = 0;
        for (double v : f0) {
            if (v <= 0.0) continue;
            // any octave slip would land far outside +-25%
            REQUIRE(std::abs(v / truth - 1.0) < 0.25);
            acc += v;
            ++n;
        }
        REQUIRE(n > 0);
        REQUIRE(std::abs(acc / static_cast<double>(n) - truth) <= 0.03 * truth);
    }
}

TEST_CASE("frame_energy basics") {
    SECTION("silence is all-zero") {
        AudioBuffer b;
        b.sample_rate = kRate;
        b.samples.assign(8000, 0.0);
        for (double e : frame_energy(b, {})) REQUIRE(e == 0.0);
    }
    SECTION("full-scale square wave matches the windowed-RMS oracle") {
        const AudioBuffer b = ts::make_square(100.0, 1.0, kRate, 1.0);
        const auto energy = frame_energy(b, {});
        // |x| = 1 everywhere, so the windowed RMS is sqrt(mean(w^2)) exactly
        double wsq = 0.0;
        for (std::size_t j = 0; j < 160; ++j) {
            const double w = 0.5 * (1.0 - std::cos(ts::kTau * static_cast<double>(j) / 160.0));
            wsq += w * w;
        }
        const double expected = std::sqrt(wsq / 160.0);
        for (std::size_t i = 2; i + 2 < energy.size(); ++i)
            REQUIRE(energy[i] == Catch::Approx(expected).margin(1e-12));
    }
    SECTION("doubling the samples doubles every energy value") {
        AudioBuffer b = ts::make_sawtooth(200.0, 0.5, kRate, 0.3);
        const auto e1 = frame_energy(b, {});
        for (double& s : b.samples) s *= 2.0;
        const auto e2 = frame_energy(b, {});
        for (std::size_t i = 0; i < e1.size(); ++i)
            REQUIRE(e2[i] == Catch::Approx(2.0 * e1[i]).margin(1e-12));
    }
}

TEST_CASE("spectral_envelope contracts") {
    const AnalysisConfig cfg;

    SECTION("silence hits the floor everywhere") {
        AudioBuffer b;
        b.sample_rate = kRate;
        b.samples.assign(8000, 0.0);
        const auto f0 = std::vector<double>(100, 0.0);
        for (const auto& row : spectral_envelope(b, f0, cfg))
            for (double v : row) REQUIRE(v == kSpectralFloor);
    }

    SECTION("sine envelope integrates to the frame power and peaks near the tone") {
        const double amp = 0.5, freq = 440.0;
        const AudioBuffer b = ts::make_sine(freq, 1.0, kRate, amp);
        const auto [f0, periodicity] = estimate_f0(b, cfg);
        const auto sp = spectral_envelope(b, f0, cfg);

        // independent oracle: Hann-window the same slice and sum squares
        const std::size_t i = 100;  // interior frame
        const long center = 100 * 80;
        double frame_power = 0.0;
        for (std::size_t j = 0; j < cfg.fft_size; ++j) {
            const double w = 0.5 * (1.0 - std::cos(ts::kTau * static_cast<double>(j) /
                                                   static_cast<double>(cfg.fft_size)));
            const double x =
                b.samples[static_cast<std::size_t>(center - 512 + static_cast<long>(j))];
            frame_power += (w * x) * (w * x);
        }
        double integral = sp[i][0] + sp[i][cfg.fft_size / 2];
        for (std::size_t k = 1; k < cfg.fft_size / 2; ++k) integral += 2.0 * sp[i][k];
        REQUIRE(integral == Catch::Approx(frame_power).epsilon(0.10));

        std::size_t argmax = 0;
        for (std::size_t k = 1; k <= cfg.fft_size / 2; ++k)
            if (sp[i][k] > sp[i][argmax]) argmax = k;
        const double peak_hz = static_cast<double>(argmax) * kRate / cfg.fft_size;
        const double bandwidth = std::max(f0[i], cfg.f0_floor);
        REQUIRE(std::abs(peak_hz - freq) <= bandwidth);
    }

    SECTION("amplitude scaling by 2 scales power by 4") {
        AudioBuffer b = ts::make_sawtooth(200.0, 0.5, kRate, 0.3);
        const auto [f0, periodicity] = estimate_f0(b, cfg);
        const auto sp1 = spectral_envelope(b, f0, cfg);
        for (double& s : b.samples) s *= 2.0;
        const auto sp2 = spectral_envelope(b, f0, cfg);
        for (std::size_t i = 0; i < sp1.size(); ++i)
            for (std::size_t k = 0; k < sp1[i].size(); ++k)
                if (sp1[i][k] > 1e-10)
                    REQUIRE(sp2[i][k] == Catch::Approx(4.0 * sp1[i][k]).epsilon(1e-9));
    }

    SECTION("frame mismatch rejected") {
        const AudioBuffer b = ts::make_sine(200.0, 0.5, kRate, 0.3);
        REQUIRE_THROWS_AS(spectral_envelope(b, std::vector<double>(3, 100.0), cfg),
                          FrameMismatch);
    }
}

TEST_CASE("aperiodicity mapping") {
    const AnalysisConfig cfg;

    SECTION("clean sawtooth is mostly periodic") {
        const AudioBuffer b = ts::make_sawtooth(220.0, 0.5, kRate, 0.5);
        const auto [f0, periodicity] = estimate_f0(b, cfg);
        const auto ap = aperiodicity(b, f0, periodicity, cfg);
        for (std::size_t i = 5; i + 5 < ap.size(); ++i) {
            if (f0[i] <= 0.0) continue;
            for (double v : ap[i]) REQUIRE(v <= 0.15);
        }
    }
    SECTION("white noise is all-noise") {
        const AudioBuffer b = ts::make_noise(0.5, kRate, 0.1, 3);
        const auto [f0, periodicity] = estimate_f0(b, cfg);
        const auto ap = aperiodicity(b, f0, periodicity, cfg);
        for (std::size_t i = 0; i < ap.size(); ++i) {
            if (f0[i] > 0.0) continue;  // (rare) voiced flukes excluded
            for (double v : ap[i]) REQUIRE(v == 1.0);
        }
    }
    SECTION("perfect periodicity clamps at 0.01") {
        const AudioBuffer b = ts::make_sine(200.0, 0.1, kRate, 0.3);
        const std::size_t n = frame_energy(b, cfg).size();
        const std::vector<double> f0(n, 200.0), periodicity(n, 1.0);
        const auto ap = aperiodicity(b, f0, periodicity, cfg);
        for (const auto& row : ap)
            for (double v : row) REQUIRE(v == 0.01);
    }
}

TEST_CASE("extract_features bundles consistent tracks") {
    const AudioBuffer b = ts::make_sawtooth(220.0, 1.0, kRate, 0.5);
    const ProsodicFeatures f = extract_features(b, {});

    SECTION("frame arithmetic: 1 s at 5 ms hop is 200 frames") {
        REQUIRE(f.num_frames() == 200);
        REQUIRE(f.periodicity.size() == 200);
        REQUIRE(f.energy.size() == 200);
        REQUIRE(f.sp.size() == 200);
        REQUIRE(f.ap.size() == 200);
        REQUIRE(f.sp[0].size() == 513);
    }
    SECTION("deterministic") {
        const ProsodicFeatures g = extract_features(b, {});
        REQUIRE(f.f0 == g.f0);
        REQUIRE(f.energy == g.energy);
        REQUIRE(f.sp == g.sp);
        REQUIRE(f.ap == g.ap);
    }
    SECTION("fixture accuracy") {
        REQUIRE(voiced_fraction(f.f0) >= 0.9);
        REQUIRE(std::abs(mean_voiced_f0(f.f0) - 220.0) <= 0.03 * 220.0);
    }
    SECTION("unvoiced frames have ap pinned to 1") {
        for (std::size_t i = 0; i < f.num_frames(); ++i) {
            if (f.voiced(i)) continue;
            for (double v : f.ap[i]) REQUIRE(v == 1.0);
        }
    }
    SECTION("no NaN or Inf anywhere") {
        for (std::size_t i = 0; i < f.num_frames(); ++i) {
            REQUIRE(std::isfinite(f.f0[i]));
            REQUIRE(std::isfinite(f.energy[i]));
            for (double v : f.sp[i]) REQUIRE(std::isfinite(v));
            for (double v : f.ap[i]) REQUIRE(std::isfinite(v));
        }
    }
}

TEST_CASE("amplitude scaling leaves pitch and voicing alone") {
    const AudioBuffer base = ts::make_sawtooth(180.0, 0.5, kRate, 0.2);
    const ProsodicFeatures f1 = extract_features(base, {});
    for (double k : {0.25, 4.0}) {
        AudioBuffer scaled = base;
        for (double& s : scaled.samples) s *= k;
        const ProsodicFeatures f2 = extract_features(scaled, {});
        REQUIRE(f1.f0 == f2.f0);
        for (std::size_t i = 0; i < f1.num_frames(); ++i)
            REQUIRE(f2.energy[i] == Catch::Approx(k * f1.energy[i]).margin(1e-12));
    }
}

TEST_CASE("frame-count formula across random lengths") {
    std::mt19937 rng(11);
    std::uniform_int_distribution<std::size_t> len_dist(400, 24000);
    for (int trial = 0; trial < 10; ++trial) {
        const std::size_t len = len_dist(rng);
        AudioBuffer b;
        b.sample_rate = kRate;
        b.samples.assign(len, 0.0);
        for (std::size_t i = 0; i < len; ++i)
            b.samples[i] = 0.3 * std::sin(ts::kTau * 150.0 * static_cast<double>(i) / kRate);
        const ProsodicFeatures f = extract_features(b, {});
        REQUIRE(f.num_frames() == len / 80);
    }
}

TEST_CASE("AnalysisConfig invariants") {
    const AudioBuffer b = ts::make_sine(200.0, 0.2, kRate, 0.3);
    SECTION("fft too small for the pitch floor") {
        AnalysisConfig cfg;
        cfg.fft_size = 256;  // 2 * 16000/71 = 450 does not fit
        REQUIRE_THROWS_AS(extract_features(b, cfg), InvariantViolation);
    }
    SECTION("floor above ceiling") {
        AnalysisConfig cfg;
        cfg.f0_floor = 900.0;
        REQUIRE_THROWS_AS(extract_features(b, cfg), InvariantViolation);
    }
    SECTION("non-power-of-two fft") {
        AnalysisConfig cfg;
        cfg.fft_size = 1000;
        REQUIRE_THROWS_AS(extract_features(b, cfg), InvariantViolation);
    }
}

TEST_CASE("feature JSON round trip is parse-identical") {
    const AudioBuffer b = ts::make_sawtooth(250.0, 0.2, kRate, 0.4);
    const ProsodicFeatures f = extract_features(b, {});
    const auto j1 = to_json(f);
    const ProsodicFeatures g = features_from_json(j1);
    REQUIRE(to_json(g) == j1);
    REQUIRE(g.f0 == f.f0);
    REQUIRE(g.sp == f.sp);

    ts::TempDir dir;
    save_features(dir.file("f.json"), f);
    const ProsodicFeatures h = load_features(dir.file("f.json"));
    REQUIRE(h.f0 == f.f0);
    REQUIRE(h.ap == f.ap);
    REQUIRE(h.energy == f.energy);
}
