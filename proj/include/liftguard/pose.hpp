#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace liftguard {

inline constexpr std::size_t kLandmarkCount = 33;
inline constexpr std::size_t kHeadLandmarkCount = 11;  // indices 0-10
inline constexpr std::size_t kValuesPerLandmark = 4;   // x, y, z, visibility
inline constexpr std::size_t kFullFeatureWidth = kLandmarkCount * kValuesPerLandmark;
inline constexpr std::size_t kBodyFeatureWidth =
    (kLandmarkCount - kHeadLandmarkCount) * kValuesPerLandmark;
inline constexpr std::size_t kWindowLength = 30;

// Full-body landmark topology (33 points).
enum LandmarkIndex : std::size_t {
    kNose = 0,
    kLeftEyeInner,
    kLeftEye,
    kLeftEyeOuter,
    kRightEyeInner,
    kRightEye,
    kRightEyeOuter,
    kLeftEar,
    kRightEar,
    kMouthLeft,
    kMouthRight,
    kLeftShoulder,  // 11
    kRightShoulder,
    kLeftElbow,
    kRightElbow,
    kLeftWrist,
    kRightWrist,
    kLeftPinky,
    kRightPinky,
    kLeftIndex,
    kRightIndex,
    kLeftThumb,
    kRightThumb,
    kLeftHip,  // 23
    kRightHip,
    kLeftKnee,
    kRightKnee,
    kLeftAnkle,
    kRightAnkle,
    kLeftHeel,
    kRightHeel,
    kLeftFootIndex,
    kRightFootIndex,  // 32
};

enum class Posture : int { Good = 0, Bad = 1 };
inline constexpr std::size_t kClassCount = 2;

std::string_view to_string(Posture p);
/// Accepts "good"/"bad" (case-sensitive, as used in folders and on the wire).
Posture posture_from_string(std::string_view s);

struct Landmark {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;
    double visibility = 0.0;

    bool operator==(const Landmark&) const = default;
};

struct PoseFrame {
    std::int64_t timestamp_ms = 0;
    std::vector<Landmark> landmarks;

    bool operator==(const PoseFrame&) const = default;
};

/// Throws ValidationError naming the first offending landmark.
void validate(const PoseFrame& frame);

struct FeatureVector {
    std::vector<double> values;

    std::size_t size() const { return values.size(); }
    bool operator==(const FeatureVector&) const = default;
};

/// Landmark-major (x, y, z, visibility); 132 values, or 88 when the 11 head
/// landmarks are dropped.
FeatureVector extract_features(const PoseFrame& frame, bool filter_head);

struct SequenceWindow {
    std::vector<FeatureVector> frames;
    std::string source_id;
    std::size_t start_index = 0;

    std::size_t feature_width() const { return frames.empty() ? 0 : frames.front().size(); }
    /// Feature-by-time matrix, one column per frame.
    Eigen::MatrixXd as_matrix() const;
};

struct LabeledSequence {
    SequenceWindow window;
    Posture label = Posture::Good;
};

/// Complete windows only, starting at 0, stride, 2*stride, ...
std::vector<SequenceWindow> build_windows(std::span<const FeatureVector> frames,
                                          std::size_t window_len, std::size_t stride,
                                          std::string_view source_id = {});

/// Moves the hip midpoint to the origin and divides x, y, z by the
/// shoulder-midpoint to hip-midpoint distance. Visibility is kept.
PoseFrame canonicalize(const PoseFrame& frame);

}  // namespace liftguard
