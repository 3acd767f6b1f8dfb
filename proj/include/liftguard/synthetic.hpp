#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "liftguard/pose.hpp"

namespace liftguard {

enum class LiftStyle { Squat, Stoop };

struct SyntheticConfig {
    std::size_t n_sequences = 62;
    double style_mix = 0.5;  // fraction of squat clips
    std::pair<double, double> camera_yaw_deg{-30.0, 30.0};
    std::pair<double, double> subject_scale{0.85, 1.15};
    double noise_std = 0.0;  // normalized image units
    std::uint64_t seed = 0;

    void validate() const;
};

/// Per-clip pose parameters. Angles in degrees.
struct LiftKinematics {
    LiftStyle style = LiftStyle::Squat;
    double peak_trunk_flexion = 15.0;
    double peak_knee_flexion = 95.0;
    double peak_shank_lean = 35.0;
    std::size_t descend_start = 4;  // first frame of the descent
    double yaw_deg = 0.0;           // 0 is a side view, subject facing +x
    double scale = 1.0;
    double noise_std = 0.0;
};

struct SyntheticClip {
    std::vector<PoseFrame> frames;
    LiftStyle style = LiftStyle::Squat;
    LiftKinematics kinematics;
};

/// Draws style-dependent kinematics from `rng_seed`.
LiftKinematics sample_kinematics(LiftStyle style, double yaw_deg, double scale, double noise_std,
                                 std::uint64_t rng_seed);

/// Animates a 30-frame lift (stand, descend, grasp, ascend, stand).
/// Noise is drawn from `noise_seed` when kinematics.noise_std > 0.
std::vector<PoseFrame> render_lift(const LiftKinematics& k, std::uint64_t noise_seed = 0);

/// round(n * style_mix) squat clips, the rest stoop, in seeded order. Clip i
/// draws from seed + i.
std::vector<SyntheticClip> generate_synthetic(const SyntheticConfig& cfg);

struct OracleThresholds {
    double trunk_deg = 45.0;
    double knee_deg = 30.0;
};

/// Angle between the hip-midpoint-to-shoulder-midpoint segment and vertical.
double trunk_flexion_deg(const PoseFrame& frame);
/// Mean over both legs of the angle between thigh and shank (0 when straight).
double knee_flexion_deg(const PoseFrame& frame);

/// Bad iff some frame has trunk flexion above the trunk threshold while knee
/// flexion is below the knee threshold.
Posture oracle_label(std::span<const PoseFrame> clip, const OracleThresholds& th = {});

Posture style_posture(LiftStyle style);

}  // namespace liftguard
