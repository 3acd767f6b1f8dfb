#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <unistd.h>
#include <vector>

#include <fmt/format.h>

#include "liftguard/lstm.hpp"
#include "liftguard/pose.hpp"
#include "liftguard/synthetic.hpp"

namespace liftguard::testing {

/// Scratch directory removed on destruction.
class TempDir {
public:
    TempDir() {
        static std::atomic<int> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                fmt::format("liftguard-test-{}-{}", ::getpid(), counter++);
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& s) const { return path_ / s; }

private:
    std::filesystem::path path_;
};

/// A standing pose from the generator with no noise, side view.
inline PoseFrame standing_frame(std::int64_t t = 0) {
    LiftKinematics k;
    k.descend_start = 100;  // never descends
    auto frames = render_lift(k);
    frames.front().timestamp_ms = t;
    return frames.front();
}

inline PoseFrame random_frame(std::mt19937_64& rng, std::int64_t t = 0) {
    std::uniform_real_distribution<double> coord(-0.1, 1.1);
    std::uniform_real_distribution<double> vis(0.0, 1.0);
    PoseFrame f;
    f.timestamp_ms = t;
    for (std::size_t i = 0; i < kLandmarkCount; ++i) {
        f.landmarks.push_back({coord(rng), coord(rng), coord(rng) - 0.5, vis(rng)});
    }
    return f;
}

/// Small random model: `features` inputs, one or more LSTM layers.
inline ModelParams toy_model(std::size_t features, std::vector<std::size_t> lstm,
                             std::vector<std::size_t> dense, std::uint64_t seed) {
    ArchitectureConfig arch;
    arch.input_width = features;
    arch.lstm_units = std::move(lstm);
    arch.dense_units = std::move(dense);
    return init_model(arch, seed);
}

inline LabeledSequence random_sequence(std::mt19937_64& rng, std::size_t features,
                                       std::size_t steps, Posture label) {
    std::normal_distribution<double> n(0.0, 1.0);
    LabeledSequence s;
    s.label = label;
    for (std::size_t t = 0; t < steps; ++t) {
        FeatureVector v;
        for (std::size_t k = 0; k < features; ++k) v.values.push_back(n(rng));
        s.window.frames.push_back(std::move(v));
    }
    s.window.source_id = "random";
    return s;
}

/// Noise-free 30-frame clips, `per_class` of each style, in alternating order.
inline std::vector<LabeledSequence> separable_sequences(std::size_t per_class, std::uint64_t seed,
                                                        bool filter_head = true) {
    std::vector<LabeledSequence> out;
    for (std::size_t i = 0; i < 2 * per_class; ++i) {
        const LiftStyle style = i % 2 == 0 ? LiftStyle::Squat : LiftStyle::Stoop;
        const auto k = sample_kinematics(style, 0.0, 1.0, 0.0, seed + i);
        const auto frames = render_lift(k);
        std::vector<FeatureVector> feats;
        for (const auto& f : frames) feats.push_back(extract_features(f, filter_head));
        LabeledSequence s;
        s.window = build_windows(feats, kWindowLength, kWindowLength, fmt::format("sep{}", i)).front();
        s.label = style_posture(style);
        out.push_back(std::move(s));
    }
    return out;
}

}  // namespace liftguard::testing
