#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "prosody/synth.hpp"
#include "test_support.hpp"

using namespace prosody;
namespace ts = testsupport;

namespace {
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
}  // namespace

TEST_CASE("stationary noise synthesis has stable level") {
    const auto f = ts::flat_features(200, 0.0, 0.1, 0.01);  // unvoiced, flat envelope
    const AudioBuffer out = synthesize(f, {7});
    REQUIRE(out.samples.size() == 16000);

    // sp is a Hann periodogram (power * sum(w^2)/N = 3/8 power), so a flat
    // envelope at 0.01 encodes signal RMS sqrt(0.01 * 8/3)
    const double r_all = ts::rms(out.samples);
    REQUIRE(r_all == Catch::Approx(std::sqrt(0.01 * 8.0 / 3.0)).epsilon(0.15));
    const double r1 = ts::rms(out.samples, 0, 5333);
    const double r2 = ts::rms(out.samples, 5333, 10666);
    const double r3 = ts::rms(out.samples, 10666, 16000);
    for (double r : {r1, r2, r3}) {
        REQUIRE(r / r_all > 0.8);
        REQUIRE(r / r_all < 1.2);
    }
}

TEST_CASE("synthesis is deterministic per seed") {
    const auto f = ts::flat_features(80, 180.0, 0.1);
    const AudioBuffer a = synthesize(f, {42});
    const AudioBuffer b = synthesize(f, {42});
    REQUIRE(a.samples == b.samples);
    const AudioBuffer c = synthesize(f, {43});
    REQUIRE(a.samples != c.samples);
}

TEST_CASE("constant 220 Hz features synthesize to a 220 Hz tone") {
    const auto f = ts::flat_features(200, 220.0, 0.1);
    const AudioBuffer out = synthesize(f, {});
    const auto analyzed = extract_features(out, {});

    std::size_t voiced = 0;
    for (double v : analyzed.f0)
        if (v > 0.0) ++voiced;
    REQUIRE(static_cast<double>(voiced) >= 0.9 * static_cast<double>(analyzed.num_frames()));
    REQUIRE(mean_voiced_f0(analyzed.f0) == Catch::Approx(220.0).margin(5.0));

    // independent spectral probe agrees on the fundamental
    REQUIRE(ts::dominant_frequency_hz(out, 100.0, 330.0) == Catch::Approx(220.0).margin(5.0));
}

TEST_CASE("scaling sp by 4 doubles the output RMS") {
    auto f = ts::flat_features(150, 200.0, 0.1);
    const AudioBuffer base = synthesize(f, {5});
    for (auto& row : f.sp)
        for (double& v : row) v *= 4.0;
    const AudioBuffer loud = synthesize(f, {5});
    const double ratio = ts::rms(loud.samples) / ts::rms(base.samples);
    REQUIRE(ratio == Catch::Approx(2.0).epsilon(0.10));
}

TEST_CASE("output is finite and within the pre-clip bound") {
    const auto f = ts::flat_features(120, 250.0, 0.1);
    const AudioBuffer out = synthesize(f, {});
    for (double s : out.samples) {
        REQUIRE(std::isfinite(s));
        REQUIRE(std::abs(s) <= 4.0);
    }
}

TEST_CASE("unvoiced-only input re-analyzes as unvoiced") {
    const auto f = ts::flat_features(150, 0.0, 0.1, 0.005);
    const AudioBuffer out = synthesize(f, {11});
    const auto analyzed = extract_features(out, {});
    std::size_t unvoiced = 0;
    for (double v : analyzed.f0)
        if (v == 0.0) ++unvoiced;
    REQUIRE(static_cast<double>(unvoiced) >=
            0.95 * static_cast<double>(analyzed.num_frames()));
}

TEST_CASE("synthesize validates its input") {
    auto f = ts::flat_features(20, 200.0, 0.1);

    SECTION("negative spectral power") {
        f.sp[3][7] = -0.5;
        REQUIRE_THROWS_AS(synthesize(f, {}), InvariantViolation);
    }
    SECTION("NaN f0") {
        f.f0[2] = std::nan("");
        REQUIRE_THROWS_AS(synthesize(f, {}), InvariantViolation);
    }
    SECTION("mismatched track lengths") {
        f.energy.pop_back();
        REQUIRE_THROWS_AS(synthesize(f, {}), InvariantViolation);
    }
    SECTION("aperiodicity out of range") {
        f.ap[1][1] = 1.5;
        REQUIRE_THROWS_AS(synthesize(f, {}), InvariantViolation);
    }
}

TEST_CASE("analysis-synthesis round trip preserves prosody") {
    const AudioBuffer src = ts::make_sawtooth(220.0, 1.0, 16000, 0.4);
    const ProsodicFeatures f = extract_features(src, {});
    const AudioBuffer out = resynthesize(src, ManipulationParams{}, {}, {});

    SECTION("duration is exact to the frame grid") {
        REQUIRE(out.samples.size() == f.num_frames() * 80);
    }
    SECTION("voiced F0 RMSE within 5 Hz") {
        const ProsodicFeatures g = extract_features(out, {});
        REQUIRE(g.num_frames() == f.num_frames());
        double acc = 0.0;
        std::size_t n = 0;
        for (std::size_t i = 0; i < f.num_frames(); ++i)
            if (f.voiced(i) && g.voiced(i)) {
                acc += (f.f0[i] - g.f0[i]) * (f.f0[i] - g.f0[i]);
                ++n;
            }
        REQUIRE(n > 0);
        REQUIRE(std::sqrt(acc / static_cast<double>(n)) <= 5.0);
    }
    SECTION("energy within 10 percent") {
        const double ratio = ts::rms(out.samples) / ts::rms(src.samples);
        REQUIRE(ratio >= 0.9);
        REQUIRE(ratio <= 1.1);
    }
}

TEST_CASE("resynthesize applies the duration ratio") {
    const AudioBuffer src = ts::make_sawtooth(200.0, 1.0, 16000, 0.4);
    ManipulationParams params;
    params.duration_ratio = 2.0;
    const AudioBuffer out = resynthesize(src, params, {}, {});
    REQUIRE(std::abs(out.duration_seconds() - 2.0) <= 0.005);
}

TEST_CASE("resynthesize applies the pitch shift") {
    const AudioBuffer src = ts::make_sawtooth(200.0, 1.0, 16000, 0.4);
    ManipulationParams params;
    params.pitch_shift_hz = 30.0;
    const AudioBuffer out = resynthesize(src, params, {}, {});
    const auto analyzed = extract_features(out, {});
    REQUIRE(mean_voiced_f0(analyzed.f0) == Catch::Approx(230.0).margin(5.0));
}
