#include "liftguard/pose.hpp"

#include <cmath>
#include <string>

#include <fmt/format.h>

#include "liftguard/errors.hpp"

namespace liftguard {

std::string_view to_string(Posture p) { return p == Posture::Good ? "good" : "bad"; }

Posture posture_from_string(std::string_view s) {
    if (s == "good") return Posture::Good;
    if (s == "bad") return Posture::Bad;
    throw ValidationError(fmt::format("unknown posture class '{}'", s));
}

void validate(const PoseFrame& frame) {
    if (frame.landmarks.size() != kLandmarkCount) {
        throw ValidationError(fmt::format("frame has {} landmarks, expected {}",
                                          frame.landmarks.size(), kLandmarkCount));
    }
    for (std::size_t i = 0; i < frame.landmarks.size(); ++i) {
        const Landmark& lm = frame.landmarks[i];
        if (!std::isfinite(lm.x) || !std::isfinite(lm.y) || !std::isfinite(lm.z) ||
            !std::isfinite(lm.visibility)) {
            throw ValidationError(fmt::format("landmark {} has a non-finite component", i));
        }
        if (lm.visibility < 0.0 || lm.visibility > 1.0) {
            throw ValidationError(
                fmt::format("landmark {} visibility {} outside [0, 1]", i, lm.visibility));
        }
    }
}

FeatureVector extract_features(const PoseFrame& frame, bool filter_head) {
    validate(frame);
    const std::size_t first = filter_head ? kHeadLandmarkCount : 0;
    FeatureVector out;
    out.values.reserve((kLandmarkCount - first) * kValuesPerLandmark);
    for (std::size_t i = first; i < kLandmarkCount; ++i) {
        const Landmark& lm = frame.landmarks[i];
        out.values.insert(out.values.end(), {lm.x, lm.y, lm.z, lm.visibility});
    }
    return out;
}

Eigen::MatrixXd SequenceWindow::as_matrix() const {
    const auto width = static_cast<Eigen::Index>(feature_width());
    Eigen::MatrixXd m(width, static_cast<Eigen::Index>(frames.size()));
    for (std::size_t t = 0; t < frames.size(); ++t) {
        if (frames[t].size() != static_cast<std::size_t>(width)) {
            throw DimensionError(fmt::format("window frame {} has width {}, expected {}", t,
                                             frames[t].size(), width));
        }
        for (Eigen::Index r = 0; r < width; ++r) {
            m(r, static_cast<Eigen::Index>(t)) = frames[t].values[static_cast<std::size_t>(r)];
        }
    }
    return m;
}

std::vector<SequenceWindow> build_windows(std::span<const FeatureVector> frames,
                                          std::size_t window_len, std::size_t stride,
                                          std::string_view source_id) {
    if (window_len < 1 || stride < 1) {
        throw ConfigError("window length and stride must both be at least 1");
    }
    for (std::size_t i = 1; i < frames.size(); ++i) {
        if (frames[i].size() != frames.front().size()) {
            throw DimensionError(fmt::format("feature vector {} has width {}, expected {}", i,
                                             frames[i].size(), frames.front().size()));
        }
    }
    std::vector<SequenceWindow> windows;
    for (std::size_t start = 0; start + window_len <= frames.size(); start += stride) {
        SequenceWindow w;
        w.frames.assign(frames.begin() + static_cast<std::ptrdiff_t>(start),
                        frames.begin() + static_cast<std::ptrdiff_t>(start + window_len));
        w.source_id = std::string(source_id);
        w.start_index = start;
        windows.push_back(std::move(w));
    }
    return windows;
}

PoseFrame canonicalize(const PoseFrame& frame) {
    validate(frame);
    const auto& lm = frame.landmarks;
    auto mid = [&](std::size_t a, std::size_t b) {
        return std::array<double, 3>{(lm[a].x + lm[b].x) / 2.0, (lm[a].y + lm[b].y) / 2.0,
                                     (lm[a].z + lm[b].z) / 2.0};
    };
    const auto hip = mid(kLeftHip, kRightHip);
    const auto shoulder = mid(kLeftShoulder, kRightShoulder);
    const double torso = std::hypot(shoulder[0] - hip[0], shoulder[1] - hip[1],
                                    shoulder[2] - hip[2]);
    if (!(torso >= 1e-6)) {
        throw DegeneracyError(
            fmt::format("hip-to-shoulder distance {} too small to canonicalize", torso));
    }
    PoseFrame out = frame;
    for (Landmark& p : out.landmarks) {
        p.x = (p.x - hip[0]) / torso;
        p.y = (p.y - hip[1]) / torso;
        p.z = (p.z - hip[2]) / torso;
    }
    return out;
}

}  // namespace liftguard
