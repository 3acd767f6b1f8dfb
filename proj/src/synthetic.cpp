#include "liftguard/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include <fmt/format.h>

#include "liftguard/errors.hpp"

namespace liftguard {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

// Body frame in metres: x lateral (subject's left positive), y up, z forward.
struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    double norm() const { return std::sqrt(x * x + y * y + z * z); }
    double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
};

// Unit vector in the sagittal plane tilted `deg` forward from straight up.
Vec3 sagittal_up(double deg) { return {0.0, std::cos(deg * kDeg), std::sin(deg * kDeg)}; }
Vec3 lateral(double x) { return {x, 0.0, 0.0}; }

constexpr double kShank = 0.45;
constexpr double kThigh = 0.45;
constexpr double kTrunk = 0.52;
constexpr double kUpperArm = 0.30;
constexpr double kForearm = 0.27;
constexpr double kAnkleHeight = 0.08;

constexpr std::size_t kDescendFrames = 8;
constexpr std::size_t kGraspFrames = 4;
constexpr std::size_t kAscendFrames = 8;

double smoothstep(double s) { return 0.5 - 0.5 * std::cos(std::numbers::pi * std::clamp(s, 0.0, 1.0)); }

// Lift depth in [0, 1] at frame f.
double lift_depth(std::size_t f, std::size_t start) {
    if (f < start) return 0.0;
    std::size_t k = f - start;
    if (k < kDescendFrames) return smoothstep(static_cast<double>(k) / kDescendFrames);
    k -= kDescendFrames;
    if (k < kGraspFrames) return 1.0;
    k -= kGraspFrames;
    if (k < kAscendFrames) return smoothstep(1.0 - static_cast<double>(k) / kAscendFrames);
    return 0.0;
}

std::array<Vec3, kLandmarkCount> pose_at(const LiftKinematics& k, double depth) {
    const double shank_lean = depth * k.peak_shank_lean;
    const double knee_flex = depth * k.peak_knee_flexion;
    const double trunk = depth * k.peak_trunk_flexion;

    std::array<Vec3, kLandmarkCount> p{};
    const Vec3 ankle_mid{0.0, kAnkleHeight, 0.0};
    const Vec3 knee_mid = ankle_mid + sagittal_up(shank_lean) * kShank;
    const Vec3 hip_mid = knee_mid + sagittal_up(shank_lean - knee_flex) * kThigh;
    const Vec3 up = sagittal_up(trunk);
    const Vec3 fwd{0.0, -std::sin(trunk * kDeg), std::cos(trunk * kDeg)};
    const Vec3 shoulder_mid = hip_mid + up * kTrunk;

    // Arms hang down, swinging forward toward the load as the lift deepens.
    const double arm = 8.0 + 15.0 * depth;
    const Vec3 upper_dir{0.0, -std::cos(arm * kDeg), std::sin(arm * kDeg)};
    const Vec3 fore_dir{0.0, -std::cos((arm + 12.0) * kDeg), std::sin((arm + 12.0) * kDeg)};

    for (int side = 0; side < 2; ++side) {
        const double s = side == 0 ? 1.0 : -1.0;  // left, right
        const auto pick = [side](std::size_t left, std::size_t right) {
            return side == 0 ? left : right;
        };
        const Vec3 shoulder = shoulder_mid + lateral(0.19 * s);
        const Vec3 elbow = shoulder + upper_dir * kUpperArm + lateral(-0.01 * s);
        const Vec3 wrist = elbow + fore_dir * kForearm + lateral(-0.01 * s);
        p[pick(kLeftShoulder, kRightShoulder)] = shoulder;
        p[pick(kLeftElbow, kRightElbow)] = elbow;
        p[pick(kLeftWrist, kRightWrist)] = wrist;
        p[pick(kLeftPinky, kRightPinky)] = wrist + fore_dir * 0.08 + lateral(0.02 * s);
        p[pick(kLeftIndex, kRightIndex)] = wrist + fore_dir * 0.09;
        p[pick(kLeftThumb, kRightThumb)] = wrist + fore_dir * 0.05 + lateral(-0.02 * s);

        const Vec3 hip = hip_mid + lateral(0.10 * s);
        const Vec3 knee = knee_mid + lateral(0.11 * s);
        const Vec3 ankle = ankle_mid + lateral(0.11 * s);
        p[pick(kLeftHip, kRightHip)] = hip;
        p[pick(kLeftKnee, kRightKnee)] = knee;
        p[pick(kLeftAnkle, kRightAnkle)] = ankle;
        p[pick(kLeftHeel, kRightHeel)] = ankle + Vec3{0.0, -0.06, -0.05};
        p[pick(kLeftFootIndex, kRightFootIndex)] = ankle + Vec3{0.0, -0.07, 0.16};

        p[pick(kLeftEyeInner, kRightEyeInner)] = shoulder_mid + up * 0.25 + fwd * 0.08 + lateral(0.015 * s);
        p[pick(kLeftEye, kRightEye)] = shoulder_mid + up * 0.25 + fwd * 0.08 + lateral(0.03 * s);
        p[pick(kLeftEyeOuter, kRightEyeOuter)] = shoulder_mid + up * 0.25 + fwd * 0.075 + lateral(0.045 * s);
        p[pick(kLeftEar, kRightEar)] = shoulder_mid + up * 0.23 - fwd * 0.01 + lateral(0.075 * s);
        p[pick(kMouthLeft, kMouthRight)] = shoulder_mid + up * 0.18 + fwd * 0.09 + lateral(0.025 * s);
    }
    p[kNose] = shoulder_mid + up * 0.22 + fwd * 0.10;
    return p;
}

double visibility_of(std::size_t idx) {
    if (idx < kHeadLandmarkCount) return 0.99;
    return idx % 2 == 1 ? 0.97 : 0.88;  // odd body indices are the left side
}

Vec3 image_vec(const PoseFrame& f, std::size_t a, std::size_t b) {
    // Image y points down; flip it so "up" is positive.
    const Landmark& p = f.landmarks[a];
    const Landmark& q = f.landmarks[b];
    return {q.x - p.x, -(q.y - p.y), q.z - p.z};
}

Vec3 midpoint(const PoseFrame& f, std::size_t a, std::size_t b) {
    const Landmark& p = f.landmarks[a];
    const Landmark& q = f.landmarks[b];
    return {(p.x + q.x) / 2.0, -(p.y + q.y) / 2.0, (p.z + q.z) / 2.0};
}

double angle_deg(const Vec3& a, const Vec3& b) {
    const double na = a.norm();
    const double nb = b.norm();
    if (na < 1e-9 || nb < 1e-9) throw DegeneracyError("zero-length limb segment");
    const double c = std::clamp(a.dot(b) / (na * nb), -1.0, 1.0);
    return std::acos(c) / kDeg;
}

}  // namespace

void SyntheticConfig::validate() const {
    if (!(style_mix >= 0.0 && style_mix <= 1.0)) throw ConfigError("style mix must lie in [0, 1]");
    if (!(camera_yaw_deg.first <= camera_yaw_deg.second)) {
        throw ConfigError("camera yaw range is not ordered");
    }
    if (!(subject_scale.first <= subject_scale.second) || !(subject_scale.first > 0.0)) {
        throw ConfigError("subject scale range must be ordered and positive");
    }
    if (!(noise_std >= 0.0)) throw ConfigError("noise standard deviation must be non-negative");
}

Posture style_posture(LiftStyle style) {
    return style == LiftStyle::Squat ? Posture::Good : Posture::Bad;
}

LiftKinematics sample_kinematics(LiftStyle style, double yaw_deg, double scale, double noise_std,
                                 std::uint64_t rng_seed) {
    std::mt19937_64 rng(rng_seed);
    auto uniform = [&rng](double lo, double hi) {
        return std::uniform_real_distribution<double>(lo, hi)(rng);
    };
    LiftKinematics k;
    k.style = style;
    if (style == LiftStyle::Squat) {
        k.peak_trunk_flexion = uniform(10.0, 22.0);
        k.peak_knee_flexion = uniform(85.0, 110.0);
        k.peak_shank_lean = uniform(28.0, 42.0);
    } else {
        k.peak_trunk_flexion = uniform(65.0, 85.0);
        k.peak_knee_flexion = uniform(4.0, 16.0);
        k.peak_shank_lean = uniform(0.0, 6.0);
    }
    k.descend_start = std::uniform_int_distribution<std::size_t>(3, 5)(rng);
    k.yaw_deg = yaw_deg;
    k.scale = scale;
    k.noise_std = noise_std;
    return k;
}

std::vector<PoseFrame> render_lift(const LiftKinematics& k, std::uint64_t noise_seed) {
    std::mt19937_64 rng(noise_seed);
    std::normal_distribution<double> noise(0.0, 1.0);
    const double pixels_per_metre = 0.42 * k.scale;
    const double cos_yaw = std::cos(k.yaw_deg * kDeg);
    const double sin_yaw = std::sin(k.yaw_deg * kDeg);

    std::vector<PoseFrame> frames;
    frames.reserve(kWindowLength);
    for (std::size_t f = 0; f < kWindowLength; ++f) {
        const auto body = pose_at(k, lift_depth(f, k.descend_start));
        const Vec3 hip_mid = (body[kLeftHip] + body[kRightHip]) * 0.5;
        const double hip_depth = hip_mid.z * sin_yaw + hip_mid.x * cos_yaw;

        PoseFrame frame;
        frame.timestamp_ms = static_cast<std::int64_t>(std::llround(static_cast<double>(f) * 1000.0 / 30.0));
        frame.landmarks.resize(kLandmarkCount);
        for (std::size_t i = 0; i < kLandmarkCount; ++i) {
            const Vec3& b = body[i];
            const double across = b.z * cos_yaw - b.x * sin_yaw;
            const double depth = b.z * sin_yaw + b.x * cos_yaw;
            Landmark lm{0.4 + pixels_per_metre * across, 0.92 - pixels_per_metre * b.y,
                        pixels_per_metre * (depth - hip_depth), visibility_of(i)};
            if (k.noise_std > 0.0) {
                lm.x += k.noise_std * noise(rng);
                lm.y += k.noise_std * noise(rng);
                lm.z += k.noise_std * noise(rng);
            }
            frame.landmarks[i] = lm;
        }
        frames.push_back(std::move(frame));
    }
    return frames;
}

std::vector<SyntheticClip> generate_synthetic(const SyntheticConfig& cfg) {
    cfg.validate();
    const auto n_squat = static_cast<std::size_t>(
        std::llround(static_cast<double>(cfg.n_sequences) * cfg.style_mix));
    std::vector<LiftStyle> styles(cfg.n_sequences, LiftStyle::Stoop);
    std::fill_n(styles.begin(), std::min(n_squat, styles.size()), LiftStyle::Squat);
    std::mt19937_64 order_rng(cfg.seed);
    std::shuffle(styles.begin(), styles.end(), order_rng);

    std::vector<SyntheticClip> clips;
    clips.reserve(cfg.n_sequences);
    for (std::size_t i = 0; i < cfg.n_sequences; ++i) {
        std::mt19937_64 rng(cfg.seed + i);
        const double yaw =
            std::uniform_real_distribution<double>(cfg.camera_yaw_deg.first, cfg.camera_yaw_deg.second)(rng);
        const double scale =
            std::uniform_real_distribution<double>(cfg.subject_scale.first, cfg.subject_scale.second)(rng);
        const std::uint64_t kin_seed = rng();
        const std::uint64_t noise_seed = rng();
        SyntheticClip clip;
        clip.style = styles[i];
        clip.kinematics = sample_kinematics(styles[i], yaw, scale, cfg.noise_std, kin_seed);
        clip.frames = render_lift(clip.kinematics, noise_seed);
        clips.push_back(std::move(clip));
    }
    return clips;
}

double trunk_flexion_deg(const PoseFrame& frame) {
    validate(frame);
    const Vec3 trunk = midpoint(frame, kLeftShoulder, kRightShoulder) - midpoint(frame, kLeftHip, kRightHip);
    if (trunk.norm() < 1e-9) throw DegeneracyError("hip and shoulder midpoints coincide");
    return angle_deg(trunk, {0.0, 1.0, 0.0});
}

double knee_flexion_deg(const PoseFrame& frame) {
    validate(frame);
    const double left = angle_deg(image_vec(frame, kLeftHip, kLeftKnee), image_vec(frame, kLeftKnee, kLeftAnkle));
    const double right =
        angle_deg(image_vec(frame, kRightHip, kRightKnee), image_vec(frame, kRightKnee, kRightAnkle));
    return (left + right) / 2.0;
}

Posture oracle_label(std::span<const PoseFrame> clip, const OracleThresholds& th) {
    if (clip.empty()) throw ValidationError("oracle needs at least one frame");
    for (const auto& f : clip) {
        if (trunk_flexion_deg(f) > th.trunk_deg && knee_flexion_deg(f) < th.knee_deg) {
            return Posture::Bad;
        }
    }
    return Posture::Good;
}

}  // namespace liftguard
