#include "liftguard/training.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <random>

#include <fmt/format.h>

#include "liftguard/errors.hpp"

namespace liftguard {

void TrainingConfig::validate() const {
    if (epochs < 1) throw ConfigError("epochs must be at least 1");
    if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
        throw ConfigError("test fraction must lie strictly between 0 and 1");
    }
    if (!(early_stop_threshold > 0.0)) {
        throw ConfigError("early-stop threshold must be positive");
    }
    if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0 && adam_beta2 >= 0.0 && adam_beta2 < 1.0)) {
        throw ConfigError("Adam betas must lie in [0, 1)");
    }
    if (!(adam_epsilon > 0.0)) throw ConfigError("Adam epsilon must be positive");
}

AdamState AdamState::fresh(const ModelParams& model) {
    return AdamState{model.zeros_like(), model.zeros_like(), 0};
}

void TrainingHistory::write_csv(std::ostream& os) const {
    os << "epoch,loss,categorical_accuracy\n";
    for (const auto& r : epochs) {
        os << fmt::format("{},{:.17g},{:.17g}\n", r.epoch, r.mean_loss, r.categorical_accuracy);
    }
}

double cross_entropy(std::span<const double> probs, std::span<const double> one_hot) {
    if (probs.size() != one_hot.size()) {
        throw DimensionError(fmt::format("cross-entropy over {} probabilities and {} labels",
                                         probs.size(), one_hot.size()));
    }
    double loss = 0.0;
    for (std::size_t k = 0; k < probs.size(); ++k) {
        if (one_hot[k] != 0.0) loss -= one_hot[k] * std::log(std::max(probs[k], 1e-12));
    }
    return loss;
}

namespace {

struct SampleResult {
    double loss = 0.0;
    bool correct = false;
};

// Backpropagates one LSTM layer. `d_out` holds dL/dh_t for t = 1..T as
// columns; returns dL/dx_t for the layer's inputs.
Eigen::MatrixXd lstm_layer_backward(const LstmLayerParams& p, const LstmLayerCache& cache,
                                    const Eigen::MatrixXd& d_out, LstmLayerParams& grad) {
    const auto h = static_cast<Eigen::Index>(p.hidden());
    const auto in = static_cast<Eigen::Index>(p.input());
    const Eigen::Index steps = cache.inputs.cols();

    Eigen::MatrixXd dz(4 * h, steps);
    Eigen::MatrixXd d_in(in, steps);
    Eigen::VectorXd dh_next = Eigen::VectorXd::Zero(h);
    Eigen::VectorXd dc_next = Eigen::VectorXd::Zero(h);
    Eigen::VectorXd d_concat(h + in);

    for (Eigen::Index t = steps - 1; t >= 0; --t) {
        const auto gates = cache.gates.col(t);
        const auto i = gates.segment(0, h).array();
        const auto f = gates.segment(h, h).array();
        const auto o = gates.segment(2 * h, h).array();
        const auto g = gates.segment(3 * h, h).array();
        const auto c_prev = cache.cells.col(t).array();
        const Eigen::ArrayXd tanh_c = cache.cells.col(t + 1).array().tanh();

        const Eigen::ArrayXd dh = d_out.col(t).array() + dh_next.array();
        const Eigen::ArrayXd dc = dc_next.array() + dh * o * (1.0 - tanh_c.square());

        dz.col(t).segment(0, h) = (dc * g * i * (1.0 - i)).matrix();
        dz.col(t).segment(h, h) = (dc * c_prev * f * (1.0 - f)).matrix();
        dz.col(t).segment(2 * h, h) = (dh * tanh_c * o * (1.0 - o)).matrix();
        dz.col(t).segment(3 * h, h) = (dc * i * (1.0 - g.square())).matrix();
        dc_next = (dc * f).matrix();

        d_concat.noalias() = p.weights.transpose() * dz.col(t);
        dh_next = d_concat.head(h);
        d_in.col(t) = d_concat.tail(in);
    }

    grad.weights.leftCols(h).noalias() += dz * cache.hidden.leftCols(steps).transpose();
    grad.weights.rightCols(in).noalias() += dz * cache.inputs.transpose();
    grad.bias.noalias() += dz.rowwise().sum();
    return d_in;
}

// Accumulates the gradient of one sample's loss into `grad`.
SampleResult sample_backward(const ModelParams& m, const Eigen::MatrixXd& seq, Posture label,
                             Gradients& grad) {
    ForwardCache cache;
    const ClassProbs probs = model_forward(m, seq, &cache);
    const auto target = static_cast<std::size_t>(label);
    const std::array<double, kClassCount> one_hot{target == 0 ? 1.0 : 0.0,
                                                  target == 1 ? 1.0 : 0.0};
    SampleResult result;
    result.loss = cross_entropy(probs.p, one_hot);
    result.correct = probs.predicted() == label;

    // The clamp in the loss makes it flat below 1e-12.
    if (probs[target] < 1e-12) return result;

    Eigen::VectorXd dz(static_cast<Eigen::Index>(kClassCount));
    for (std::size_t k = 0; k < kClassCount; ++k) {
        dz[static_cast<Eigen::Index>(k)] = probs[k] - one_hot[k];
    }
    for (std::size_t k = m.dense.size(); k-- > 0;) {
        const auto& layer = m.dense[k];
        auto& g = grad.dense[k];
        g.weights.noalias() += dz * cache.dense_inputs[k].transpose();
        g.bias += dz;
        Eigen::VectorXd d_in = layer.weights.transpose() * dz;
        if (k > 0) {
            switch (m.dense[k - 1].activation) {
                case Activation::Relu:
                    d_in = (cache.dense_outputs[k - 1].array() > 0.0).select(d_in, 0.0);
                    break;
                case Activation::Identity: break;
                case Activation::Softmax:
                    throw DimensionError("softmax is only supported as the final layer");
            }
        }
        dz = std::move(d_in);
    }

    const auto& last = cache.lstm.back();
    Eigen::MatrixXd d_out = Eigen::MatrixXd::Zero(last.hidden.rows(), last.inputs.cols());
    d_out.col(d_out.cols() - 1) = dz;
    for (std::size_t k = m.lstm.size(); k-- > 0;) {
        d_out = lstm_layer_backward(m.lstm[k], cache.lstm[k], d_out, grad.lstm[k]);
    }
    return result;
}

void add_into(Gradients& total, const Gradients& part) {
    for (std::size_t k = 0; k < total.lstm.size(); ++k) {
        total.lstm[k].weights += part.lstm[k].weights;
        total.lstm[k].bias += part.lstm[k].bias;
    }
    for (std::size_t k = 0; k < total.dense.size(); ++k) {
        total.dense[k].weights += part.dense[k].weights;
        total.dense[k].bias += part.dense[k].bias;
    }
}

std::array<double, kClassCount> one_hot_of(Posture label) {
    std::array<double, kClassCount> y{};
    y[static_cast<std::size_t>(label)] = 1.0;
    return y;
}

}  // namespace

BatchGradient backward(const ModelParams& m, std::span<const LabeledSequence> batch) {
    if (batch.empty()) throw ConfigError("cannot compute a gradient over an empty batch");
    BatchGradient out;
    out.grad = m.zeros_like();
    Gradients sample = m.zeros_like();
    double loss_sum = 0.0;
    for (std::size_t s = 0; s < batch.size(); ++s) {
        for_each_tensor(sample, [](std::span<double> t) { std::fill(t.begin(), t.end(), 0.0); });
        const SampleResult r = sample_backward(m, batch[s].window.as_matrix(), batch[s].label, sample);
        if (!std::isfinite(r.loss)) {
            throw NumericError(fmt::format("non-finite loss on sample {} ({})", s,
                                           batch[s].window.source_id));
        }
        loss_sum += r.loss;
        out.correct += r.correct ? 1 : 0;
        add_into(out.grad, sample);
    }
    const auto n = static_cast<double>(batch.size());
    for_each_tensor(out.grad, [n](std::span<double> t) {
        for (double& v : t) v /= n;
    });
    out.mean_loss = loss_sum / n;
    return out;
}

double batch_loss(const ModelParams& m, std::span<const LabeledSequence> batch) {
    if (batch.empty()) throw ConfigError("cannot compute a loss over an empty batch");
    double sum = 0.0;
    for (const auto& s : batch) {
        const ClassProbs p = model_forward(m, s.window);
        sum += cross_entropy(p.p, one_hot_of(s.label));
    }
    return sum / static_cast<double>(batch.size());
}

double clip_global_norm(Gradients& g, double max_norm) {
    double sq = 0.0;
    for_each_tensor(g, [&sq](std::span<const double> t) {
        for (double v : t) sq += v * v;
    });
    const double norm = std::sqrt(sq);
    if (max_norm > 0.0 && norm > max_norm) {
        const double scale = max_norm / norm;
        for_each_tensor(g, [scale](std::span<double> t) {
            for (double& v : t) v *= scale;
        });
    }
    return norm;
}

void adam_step(ModelParams& m, Gradients g, AdamState& st, const TrainingConfig& cfg) {
    if (g.parameter_count() != m.parameter_count() ||
        st.m.parameter_count() != m.parameter_count() ||
        st.v.parameter_count() != m.parameter_count()) {
        throw DimensionError("gradient or optimizer state does not match the model");
    }
    clip_global_norm(g, cfg.grad_clip_norm);
    st.t += 1;
    const double b1 = cfg.adam_beta1;
    const double b2 = cfg.adam_beta2;
    const double correction1 = 1.0 - std::pow(b1, static_cast<double>(st.t));
    const double correction2 = 1.0 - std::pow(b2, static_cast<double>(st.t));

    std::vector<std::span<double>> params, grads, firsts, seconds;
    for_each_tensor(m, [&](std::span<double> t) { params.push_back(t); });
    for_each_tensor(g, [&](std::span<double> t) { grads.push_back(t); });
    for_each_tensor(st.m, [&](std::span<double> t) { firsts.push_back(t); });
    for_each_tensor(st.v, [&](std::span<double> t) { seconds.push_back(t); });

    for (std::size_t k = 0; k < params.size(); ++k) {
        if (params[k].size() != grads[k].size()) {
            throw DimensionError("gradient tensor shape does not match the model");
        }
        for (std::size_t j = 0; j < params[k].size(); ++j) {
            const double gj = grads[k][j];
            double& mj = firsts[k][j];
            double& vj = seconds[k][j];
            mj = b1 * mj + (1.0 - b1) * gj;
            vj = b2 * vj + (1.0 - b2) * gj * gj;
            const double m_hat = mj / correction1;
            const double v_hat = vj / correction2;
            params[k][j] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.adam_epsilon);
        }
    }
}

DatasetSplit split_dataset(std::span<const LabeledSequence> data, const TrainingConfig& cfg) {
    cfg.validate();
    if (data.size() < 4) {
        throw ConfigError(fmt::format("need at least 4 sequences to split, got {}", data.size()));
    }
    std::array<std::vector<std::size_t>, kClassCount> by_class;
    for (std::size_t i = 0; i < data.size(); ++i) {
        by_class[static_cast<std::size_t>(data[i].label)].push_back(i);
    }
    for (std::size_t c = 0; c < kClassCount; ++c) {
        if (by_class[c].empty()) {
            throw StratificationError(fmt::format("no '{}' sequences; a stratified split needs both classes",
                                                  to_string(static_cast<Posture>(c))));
        }
    }

    const auto n = static_cast<double>(data.size());
    const auto test_total =
        static_cast<std::size_t>(std::ceil(n * cfg.test_fraction - 1e-9));

    // Largest-remainder apportionment of the test slots.
    std::array<std::size_t, kClassCount> quota{};
    std::array<double, kClassCount> remainder{};
    std::size_t assigned = 0;
    for (std::size_t c = 0; c < kClassCount; ++c) {
        const double exact = static_cast<double>(by_class[c].size()) *
                             static_cast<double>(test_total) / n;
        quota[c] = static_cast<std::size_t>(std::floor(exact));
        remainder[c] = exact - static_cast<double>(quota[c]);
        assigned += quota[c];
    }
    while (assigned < test_total) {
        std::size_t best = 0;
        for (std::size_t c = 1; c < kClassCount; ++c) {
            if (remainder[c] > remainder[best]) best = c;
        }
        quota[best] += 1;
        remainder[best] = -1.0;
        assigned += 1;
    }

    std::mt19937_64 rng(cfg.seed);
    DatasetSplit split;
    for (std::size_t c = 0; c < kClassCount; ++c) {
        auto idx = by_class[c];
        std::shuffle(idx.begin(), idx.end(), rng);
        for (std::size_t k = 0; k < idx.size(); ++k) {
            (k < quota[c] ? split.test : split.train).push_back(data[idx[k]]);
        }
    }
    std::shuffle(split.train.begin(), split.train.end(), rng);
    std::shuffle(split.test.begin(), split.test.end(), rng);
    return split;
}

std::pair<ModelParams, TrainingHistory> fit(std::span<const LabeledSequence> train_set,
                                            const ArchitectureConfig& arch,
                                            const TrainingConfig& cfg,
                                            const EpochCallback& on_epoch) {
    cfg.validate();
    arch.validate();
    if (train_set.empty()) throw ConfigError("training partition is empty");
    for (const auto& s : train_set) {
        if (s.window.feature_width() != arch.input_width) {
            throw ConfigError(fmt::format("sequence '{}' has feature width {}, model expects {}",
                                          s.window.source_id, s.window.feature_width(),
                                          arch.input_width));
        }
    }

    ModelParams model = init_model(arch, cfg.seed);
    AdamState adam = AdamState::fresh(model);
    TrainingHistory history;
    std::vector<LabeledSequence> order(train_set.begin(), train_set.end());
    std::mt19937_64 rng(cfg.seed ^ 0x9E3779B97F4A7C15ULL);
    const std::size_t batch =
        cfg.batch_size == 0 ? order.size() : std::min(cfg.batch_size, order.size());

    std::size_t streak = 0;
    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        if (batch < order.size()) std::shuffle(order.begin(), order.end(), rng);
        double loss_sum = 0.0;
        std::size_t correct = 0;
        for (std::size_t start = 0; start < order.size(); start += batch) {
            const std::size_t len = std::min(batch, order.size() - start);
            BatchGradient bg;
            try {
                bg = backward(model, std::span(order).subspan(start, len));
            } catch (const NumericError& e) {
                throw NumericError(fmt::format("epoch {}: {}", epoch, e.what()));
            }
            loss_sum += bg.mean_loss * static_cast<double>(len);
            correct += bg.correct;
            adam_step(model, std::move(bg.grad), adam, cfg);
        }
        EpochRecord rec{epoch, loss_sum / static_cast<double>(order.size()),
                        static_cast<double>(correct) / static_cast<double>(order.size())};
        history.epochs.push_back(rec);
        if (on_epoch) on_epoch(rec);

        streak = rec.categorical_accuracy >= cfg.early_stop_threshold ? streak + 1 : 0;
        if (streak >= std::max<std::size_t>(cfg.early_stop_patience, 1)) {
            history.stop_reason = StopReason::EarlyStopped;
            break;
        }
    }
    return {std::move(model), std::move(history)};
}

TrainResult train(std::span<const LabeledSequence> data, const ArchitectureConfig& arch,
                  const TrainingConfig& cfg, const EpochCallback& on_epoch) {
    TrainResult result;
    result.split = split_dataset(data, cfg);
    auto [model, history] = fit(result.split.train, arch, cfg, on_epoch);
    result.model = std::move(model);
    result.history = std::move(history);
    return result;
}

EvalReport evaluate(const ModelParams& m, std::span<const LabeledSequence> data) {
    std::vector<Posture> predicted, actual;
    std::vector<double> scores;
    for (const auto& s : data) {
        const ClassProbs p = model_forward(m, s.window);
        predicted.push_back(p.predicted());
        actual.push_back(s.label);
        scores.push_back(p[static_cast<std::size_t>(Posture::Bad)]);
    }
    EvalReport report;
    report.confusion = confusion_matrix(predicted, actual);
    report.accuracy = accuracy(report.confusion);
    const bool both = std::find(actual.begin(), actual.end(), Posture::Good) != actual.end() &&
                      std::find(actual.begin(), actual.end(), Posture::Bad) != actual.end();
    if (both) {
        report.roc = roc_curve(scores, actual);
        report.auc = auc(report.roc);
    }
    return report;
}

}  // namespace liftguard
