#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include <json.hpp>

#include "liftguard/pose.hpp"

namespace liftguard {

/// counts[actual][predicted], class order (Good, Bad). Bad is the positive class.
struct ConfusionMatrix {
    std::array<std::array<std::size_t, kClassCount>, kClassCount> counts{};

    std::size_t at(Posture actual, Posture predicted) const {
        return counts[static_cast<std::size_t>(actual)][static_cast<std::size_t>(predicted)];
    }
    std::size_t total() const;
    std::size_t correct() const;

    bool operator==(const ConfusionMatrix&) const = default;
};

ConfusionMatrix confusion_matrix(std::span<const Posture> predicted,
                                 std::span<const Posture> actual);

double accuracy(const ConfusionMatrix& cm);

struct RocPoint {
    double fpr = 0.0;
    double tpr = 0.0;

    bool operator==(const RocPoint&) const = default;
};

/// Threshold sweep over the distinct P(Bad) scores, highest first. Tied scores
/// produce a single point. Starts at (0,0) and ends at (1,1).
std::vector<RocPoint> roc_curve(std::span<const double> scores, std::span<const Posture> actual);

/// Trapezoidal area under a ROC polyline.
double auc(std::span<const RocPoint> points);

struct EvalReport {
    ConfusionMatrix confusion;
    double accuracy = 0.0;
    std::vector<RocPoint> roc;
    double auc = 0.0;
};

/// {"confusion":[[..],[..]],"accuracy":x,"roc":[[fpr,tpr],...],"auc":x}
nlohmann::json to_json(const EvalReport& r);
EvalReport eval_report_from_json(const nlohmann::json& j);

/// `fpr,tpr` CSV for plotting.
void write_roc_csv(std::ostream& os, std::span<const RocPoint> points);

}  // namespace liftguard
