#include "liftguard/metrics.hpp"

#include <algorithm>
#include <numeric>
#include <ostream>

#include <fmt/format.h>

#include "liftguard/errors.hpp"

namespace liftguard {

std::size_t ConfusionMatrix::total() const {
    std::size_t n = 0;
    for (const auto& row : counts) n += std::accumulate(row.begin(), row.end(), std::size_t{0});
    return n;
}

std::size_t ConfusionMatrix::correct() const {
    std::size_t n = 0;
    for (std::size_t k = 0; k < kClassCount; ++k) n += counts[k][k];
    return n;
}

ConfusionMatrix confusion_matrix(std::span<const Posture> predicted,
                                 std::span<const Posture> actual) {
    if (predicted.size() != actual.size()) {
        throw DimensionError(fmt::format("{} predictions for {} labels", predicted.size(),
                                         actual.size()));
    }
    if (predicted.empty()) throw ValidationError("confusion matrix over zero samples");
    ConfusionMatrix cm;
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        cm.counts[static_cast<std::size_t>(actual[i])][static_cast<std::size_t>(predicted[i])] += 1;
    }
    return cm;
}

double accuracy(const ConfusionMatrix& cm) {
    const std::size_t n = cm.total();
    if (n == 0) throw ValidationError("accuracy of an empty confusion matrix");
    return static_cast<double>(cm.correct()) / static_cast<double>(n);
}

std::vector<RocPoint> roc_curve(std::span<const double> scores, std::span<const Posture> actual) {
    if (scores.size() != actual.size()) {
        throw DimensionError(fmt::format("{} scores for {} labels", scores.size(), actual.size()));
    }
    const auto positives = static_cast<std::size_t>(
        std::count(actual.begin(), actual.end(), Posture::Bad));
    const std::size_t negatives = actual.size() - positives;
    if (positives == 0 || negatives == 0) {
        throw UndefinedRocError("ROC needs both good and bad samples");
    }

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    std::vector<RocPoint> points{{0.0, 0.0}};
    std::size_t tp = 0;
    std::size_t fp = 0;
    for (std::size_t k = 0; k < order.size(); ++k) {
        (actual[order[k]] == Posture::Bad ? tp : fp) += 1;
        const bool group_ends = k + 1 == order.size() || scores[order[k + 1]] != scores[order[k]];
        if (group_ends) {
            points.push_back({static_cast<double>(fp) / static_cast<double>(negatives),
                              static_cast<double>(tp) / static_cast<double>(positives)});
        }
    }
    if (points.back() != RocPoint{1.0, 1.0}) points.push_back({1.0, 1.0});
    return points;
}

double auc(std::span<const RocPoint> points) {
    double area = 0.0;
    for (std::size_t k = 1; k < points.size(); ++k) {
        area += (points[k].fpr - points[k - 1].fpr) * (points[k].tpr + points[k - 1].tpr) / 2.0;
    }
    return area;
}

nlohmann::json to_json(const EvalReport& r) {
    nlohmann::json roc = nlohmann::json::array();
    for (const auto& p : r.roc) roc.push_back({p.fpr, p.tpr});
    nlohmann::json confusion = nlohmann::json::array();
    for (const auto& row : r.confusion.counts) confusion.push_back(row);
    return {{"confusion", confusion}, {"accuracy", r.accuracy}, {"roc", roc}, {"auc", r.auc}};
}

EvalReport eval_report_from_json(const nlohmann::json& j) {
    EvalReport r;
    const auto& confusion = j.at("confusion");
    for (std::size_t a = 0; a < kClassCount; ++a) {
        for (std::size_t p = 0; p < kClassCount; ++p) {
            r.confusion.counts[a][p] = confusion.at(a).at(p).get<std::size_t>();
        }
    }
    r.accuracy = j.at("accuracy").get<double>();
    for (const auto& p : j.at("roc")) r.roc.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
    r.auc = j.at("auc").get<double>();
    return r;
}

void write_roc_csv(std::ostream& os, std::span<const RocPoint> points) {
    os << "fpr,tpr\n";
    for (const auto& p : points) os << fmt::format("{:.17g},{:.17g}\n", p.fpr, p.tpr);
}

}  // namespace liftguard
