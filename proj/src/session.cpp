#include "liftguard/session.hpp"

#include <vector>

#include <fmt/format.h>

#include "liftguard/errors.hpp"

namespace liftguard {

std::string_view to_string(RiskLevel level) {
    switch (level) {
        case RiskLevel::Low: return "low";
        case RiskLevel::Medium: return "medium";
        case RiskLevel::High: return "high";
    }
    return "?";
}

void RiskConfig::validate() const {
    if (!(0.0 <= low_below && low_below <= high_above && high_above <= 1.0)) {
        throw ConfigError("risk thresholds must satisfy 0 <= low <= high <= 1");
    }
    if (log_length < 1) throw ConfigError("prediction log length must be at least 1");
}

RiskLevel risk_level(double score, const RiskConfig& cfg) {
    if (score < cfg.low_below) return RiskLevel::Low;
    if (score > cfg.high_above) return RiskLevel::High;
    return RiskLevel::Medium;
}

std::optional<RiskAssessment> assess_risk(std::span<const Prediction> log, const RiskConfig& cfg) {
    if (log.empty()) return std::nullopt;
    double weight = 0.0;
    double bad = 0.0;
    for (const auto& p : log) {
        weight += p.confidence;
        if (p.label == Posture::Bad) bad += p.confidence;
    }
    RiskAssessment r;
    r.score = weight > 0.0 ? bad / weight : 0.0;
    r.level = risk_level(r.score, cfg);
    r.basis = log.size();
    return r;
}

void SessionOptions::validate() const {
    if (stride < 1) throw ConfigError("prediction stride must be at least 1");
    risk.validate();
}

Session::Session(std::string id, std::shared_ptr<const ModelParams> model, SessionOptions options)
    : id_(std::move(id)), model_(std::move(model)), options_(options) {
    if (!model_) throw SessionError("session needs a loaded model");
    options_.validate();
}

std::optional<SessionUpdate> Session::push_frame(const PoseFrame& frame) {
    FeatureVector features = model_->arch.canonicalize
                                  ? extract_features(canonicalize(frame), model_->arch.filter_head)
                                  : extract_features(frame, model_->arch.filter_head);
    if (features.size() != model_->input_width()) {
        throw SessionError(fmt::format("frame yields {} features, model expects {}",
                                       features.size(), model_->input_width()));
    }
    buffer_.push_back(std::move(features));
    if (buffer_.size() > kWindowLength) buffer_.pop_front();
    ++frames_seen_;

    if (buffer_.size() < kWindowLength) return std::nullopt;
    if ((frames_seen_ - kWindowLength) % options_.stride != 0) return std::nullopt;

    SequenceWindow window;
    window.frames.assign(buffer_.begin(), buffer_.end());
    window.source_id = id_;
    window.start_index = frames_seen_ - kWindowLength;

    Prediction p;
    p.probs = model_forward(*model_, window);
    p.label = p.probs.predicted();
    p.confidence = p.probs.confidence();
    p.window_end_ms = frame.timestamp_ms;

    log_.push_back(p);
    if (log_.size() > options_.risk.log_length) log_.pop_front();
    const std::vector<Prediction> recent(log_.begin(), log_.end());
    return SessionUpdate{p, *assess_risk(recent, options_.risk)};
}

}  // namespace liftguard
