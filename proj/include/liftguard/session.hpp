#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "liftguard/lstm.hpp"
#include "liftguard/pose.hpp"

namespace liftguard {

enum class RiskLevel { Low, Medium, High };

std::string_view to_string(RiskLevel level);

struct RiskConfig {
    double low_below = 0.3;   // score < low_below is Low
    double high_above = 0.7;  // score > high_above is High
    std::size_t log_length = 10;

    void validate() const;
};

struct Prediction {
    Posture label = Posture::Good;
    ClassProbs probs;
    std::int64_t window_end_ms = 0;
    double confidence = 0.0;  // max(probs)
};

struct RiskAssessment {
    RiskLevel level = RiskLevel::Low;
    double score = 0.0;  // confidence-weighted fraction of Bad predictions
    std::size_t basis = 0;

    bool operator==(const RiskAssessment&) const = default;
};

RiskLevel risk_level(double score, const RiskConfig& cfg = {});

/// Empty log means warm-up: no assessment.
std::optional<RiskAssessment> assess_risk(std::span<const Prediction> log,
                                          const RiskConfig& cfg = {});

struct SessionOptions {
    std::size_t stride = 1;
    RiskConfig risk;

    void validate() const;
};

struct SessionUpdate {
    Prediction prediction;
    RiskAssessment risk;
};

/// Sliding-window classifier over one live frame stream. Single writer.
class Session {
public:
    Session(std::string id, std::shared_ptr<const ModelParams> model, SessionOptions options = {});

    /// Nothing until 30 frames are buffered, then one update every `stride`
    /// frames.
    std::optional<SessionUpdate> push_frame(const PoseFrame& frame);

    const std::string& id() const { return id_; }
    std::size_t buffered() const { return buffer_.size(); }
    std::size_t frames_seen() const { return frames_seen_; }
    const std::deque<Prediction>& prediction_log() const { return log_; }

private:
    std::string id_;
    std::shared_ptr<const ModelParams> model_;
    SessionOptions options_;
    std::deque<FeatureVector> buffer_;
    std::deque<Prediction> log_;
    std::size_t frames_seen_ = 0;
};

}  // namespace liftguard
