#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <utility>
#include <vector>

#include "liftguard/lstm.hpp"
#include "liftguard/metrics.hpp"
#include "liftguard/pose.hpp"

namespace liftguard {

struct TrainingConfig {
    std::size_t epochs = 150;
    double learning_rate = 0.001;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_epsilon = 1e-8;
    double early_stop_threshold = 0.95;
    std::size_t early_stop_patience = 5;
    double test_fraction = 0.25;
    std::uint64_t seed = 0;
    double grad_clip_norm = 5.0;  // <= 0 disables clipping
    std::size_t batch_size = 0;   // 0 means full batch

    void validate() const;
};

struct AdamState {
    Gradients m;
    Gradients v;
    std::uint64_t t = 0;

    static AdamState fresh(const ModelParams& model);
};

enum class StopReason { EpochsExhausted, EarlyStopped };

struct EpochRecord {
    std::size_t epoch = 0;  // 1-based
    double mean_loss = 0.0;
    double categorical_accuracy = 0.0;
};

struct TrainingHistory {
    std::vector<EpochRecord> epochs;
    StopReason stop_reason = StopReason::EpochsExhausted;

    /// CSV with header `epoch,loss,categorical_accuracy`.
    void write_csv(std::ostream& os) const;
};

/// -sum_k label_k * ln(max(p_k, 1e-12)).
double cross_entropy(std::span<const double> probs, std::span<const double> one_hot);

struct BatchGradient {
    Gradients grad;
    double mean_loss = 0.0;
    std::size_t correct = 0;  // argmax hits during the same forward passes
};

/// Exact mean gradient of the batch cross-entropy via backpropagation through
/// time. Per-sample gradients are reduced in batch order.
BatchGradient backward(const ModelParams& m, std::span<const LabeledSequence> batch);

/// Mean loss only, no gradient.
double batch_loss(const ModelParams& m, std::span<const LabeledSequence> batch);

/// Rescales `g` in place to the given global L2 norm if it exceeds it;
/// returns the norm before clipping.
double clip_global_norm(Gradients& g, double max_norm);

/// One Adam update after global-norm clipping of `g`.
void adam_step(ModelParams& m, Gradients g, AdamState& st, const TrainingConfig& cfg);

struct DatasetSplit {
    std::vector<LabeledSequence> train;
    std::vector<LabeledSequence> test;
};

/// Seeded stratified split; the test part has ceil(N * test_fraction) items.
DatasetSplit split_dataset(std::span<const LabeledSequence> data, const TrainingConfig& cfg);

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Trains on exactly the given sequences (no split).
std::pair<ModelParams, TrainingHistory> fit(std::span<const LabeledSequence> train_set,
                                            const ArchitectureConfig& arch,
                                            const TrainingConfig& cfg,
                                            const EpochCallback& on_epoch = {});

struct TrainResult {
    ModelParams model;
    TrainingHistory history;
    DatasetSplit split;
};

/// Splits, then fits on the training partition.
TrainResult train(std::span<const LabeledSequence> data, const ArchitectureConfig& arch,
                  const TrainingConfig& cfg, const EpochCallback& on_epoch = {});

/// Runs the model over every sequence and scores it against the labels.
EvalReport evaluate(const ModelParams& m, std::span<const LabeledSequence> data);

}  // namespace liftguard
