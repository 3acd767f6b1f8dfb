#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "liftguard/errors.hpp"
#include "liftguard/synthetic.hpp"
#include "support/fixtures.hpp"

using namespace liftguard;

namespace {

double peak_trunk(const std::vector<PoseFrame>& clip) {
    double peak = 0.0;
    for (const auto& f : clip) peak = std::max(peak, trunk_flexion_deg(f));
    return peak;
}

bool same_frames(const std::vector<PoseFrame>& a, const std::vector<PoseFrame>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i].timestamp_ms != b[i].timestamp_ms) return false;
        for (std::size_t k = 0; k < kLandmarkCount; ++k) {
            const auto& p = a[i].landmarks[k];
            const auto& q = b[i].landmarks[k];
            if (p.x != q.x || p.y != q.y || p.z != q.z || p.visibility != q.visibility) return false;
        }
    }
    return true;
}

double agreement(double noise, std::size_t n, std::uint64_t seed) {
    SyntheticConfig cfg;
    cfg.n_sequences = n;
    cfg.noise_std = noise;
    cfg.seed = seed;
    std::size_t agree = 0;
    for (const auto& clip : generate_synthetic(cfg)) {
        agree += oracle_label(clip.frames) == style_posture(clip.style);
    }
    return static_cast<double>(agree) / static_cast<double>(n);
}

}  // namespace

TEST_CASE("squat keeps the trunk upright, stoop flexes it") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto squat = render_lift(sample_kinematics(LiftStyle::Squat, 0.0, 1.0, 0.0, seed));
        const auto stoop = render_lift(sample_kinematics(LiftStyle::Stoop, 0.0, 1.0, 0.0, seed));
        CHECK(peak_trunk(squat) < 25.0);
        CHECK(peak_trunk(stoop) > 60.0);
        CHECK(oracle_label(squat) == Posture::Good);
        CHECK(oracle_label(stoop) == Posture::Bad);
    }
}

TEST_CASE("rendered angles follow the kinematic parameters") {
    const auto k = sample_kinematics(LiftStyle::Stoop, 0.0, 1.0, 0.0, 7);
    const auto clip = render_lift(k);
    CHECK(peak_trunk(clip) == doctest::Approx(k.peak_trunk_flexion).epsilon(1e-6));
    double peak_knee = 0.0;
    for (const auto& f : clip) peak_knee = std::max(peak_knee, knee_flexion_deg(f));
    // Knees sit 1 cm wider than hips, which adds a small out-of-plane bend.
    CHECK(std::abs(peak_knee - k.peak_knee_flexion) < 0.5);
}

TEST_CASE("upright standing skeleton is good") {
    const auto f = testing::standing_frame();
    CHECK(trunk_flexion_deg(f) < 1e-9);
    CHECK(knee_flexion_deg(f) < 1.5);
    CHECK(oracle_label(std::vector{f, f, f}) == Posture::Good);
}

TEST_CASE("oracle thresholds are configurable") {
    const auto squat = render_lift(sample_kinematics(LiftStyle::Squat, 0.0, 1.0, 0.0, 3));
    CHECK(oracle_label(squat, {5.0, 150.0}) == Posture::Bad);
    CHECK_THROWS_AS(oracle_label(std::vector<PoseFrame>{}), ValidationError);
}

TEST_CASE("generation is deterministic per seed") {
    SyntheticConfig cfg;
    cfg.n_sequences = 12;
    cfg.noise_std = 0.01;
    cfg.seed = 17;
    const auto a = generate_synthetic(cfg);
    const auto b = generate_synthetic(cfg);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].style == b[i].style);
        CHECK(same_frames(a[i].frames, b[i].frames));
    }
    cfg.seed = 18;
    CHECK_FALSE(same_frames(generate_synthetic(cfg)[0].frames, a[0].frames));
}

TEST_CASE("style mix sets exact class counts") {
    SyntheticConfig cfg;
    cfg.n_sequences = 62;
    cfg.seed = 4;
    const auto clips = generate_synthetic(cfg);
    const auto squats = std::count_if(clips.begin(), clips.end(),
                                      [](const auto& c) { return c.style == LiftStyle::Squat; });
    CHECK(squats == 31);
    cfg.style_mix = 0.0;
    cfg.n_sequences = 5;
    for (const auto& c : generate_synthetic(cfg)) CHECK(c.style == LiftStyle::Stoop);
    cfg.n_sequences = 0;
    CHECK(generate_synthetic(cfg).empty());
}

TEST_CASE("generated frames satisfy the frame invariants") {
    SyntheticConfig cfg;
    cfg.n_sequences = 40;
    cfg.noise_std = 0.01;
    cfg.seed = 2;
    for (const auto& clip : generate_synthetic(cfg)) {
        REQUIRE(clip.frames.size() == kWindowLength);
        for (const auto& f : clip.frames) {
            CHECK_NOTHROW(validate(f));
            CHECK(f.landmarks.size() == kLandmarkCount);
        }
        for (std::size_t i = 1; i < clip.frames.size(); ++i) {
            CHECK(clip.frames[i].timestamp_ms > clip.frames[i - 1].timestamp_ms);
        }
    }
}

TEST_CASE("oracle agrees with the style tag") {
    CHECK(agreement(0.0, 1000, 100) == 1.0);
    CHECK(agreement(0.01, 1000, 200) >= 0.99);
}

TEST_CASE("invalid synthetic configs are rejected") {
    SyntheticConfig cfg;
    cfg.style_mix = 1.5;
    CHECK_THROWS_AS(generate_synthetic(cfg), ConfigError);
    cfg = {};
    cfg.noise_std = -1.0;
    CHECK_THROWS_AS(generate_synthetic(cfg), ConfigError);
    cfg = {};
    cfg.camera_yaw_deg = {10.0, -10.0};
    CHECK_THROWS_AS(generate_synthetic(cfg), ConfigError);
    cfg = {};
    cfg.subject_scale = {0.0, 1.0};
    CHECK_THROWS_AS(generate_synthetic(cfg), ConfigError);
}
