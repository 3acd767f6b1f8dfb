#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "liftguard/pose.hpp"

namespace liftguard {

double sigmoid(double x);
double tanh_activation(double x);

enum class Gate : int { Input = 0, Forget = 1, Output = 2, Candidate = 3 };

/// One LSTM layer. The four gate matrices are stacked row-wise in the order
/// input, forget, output, candidate; each acts on the concatenation
/// [h_{t-1}, x_t], so the hidden columns come first.
struct LstmLayerParams {
    Eigen::MatrixXd weights;  // (4 * hidden, hidden + input)
    Eigen::VectorXd bias;     // 4 * hidden

    static LstmLayerParams zeros(std::size_t input, std::size_t hidden);

    std::size_t hidden() const { return static_cast<std::size_t>(weights.rows()) / 4; }
    std::size_t input() const { return static_cast<std::size_t>(weights.cols()) - hidden(); }

    auto gate_weights(Gate g) {
        const auto h = static_cast<Eigen::Index>(hidden());
        return weights.middleRows(static_cast<Eigen::Index>(g) * h, h);
    }
    auto gate_weights(Gate g) const {
        const auto h = static_cast<Eigen::Index>(hidden());
        return weights.middleRows(static_cast<Eigen::Index>(g) * h, h);
    }
    auto gate_bias(Gate g) {
        const auto h = static_cast<Eigen::Index>(hidden());
        return bias.segment(static_cast<Eigen::Index>(g) * h, h);
    }
    auto gate_bias(Gate g) const {
        const auto h = static_cast<Eigen::Index>(hidden());
        return bias.segment(static_cast<Eigen::Index>(g) * h, h);
    }

    bool operator==(const LstmLayerParams& o) const;
};

enum class Activation : int { Relu = 0, Softmax = 1, Identity = 2 };

struct DenseLayerParams {
    Eigen::MatrixXd weights;  // (out, in)
    Eigen::VectorXd bias;     // out
    Activation activation = Activation::Relu;

    static DenseLayerParams zeros(std::size_t in, std::size_t out, Activation act);

    std::size_t in() const { return static_cast<std::size_t>(weights.cols()); }
    std::size_t out() const { return static_cast<std::size_t>(weights.rows()); }

    bool operator==(const DenseLayerParams& o) const;
};

struct ArchitectureConfig {
    std::size_t input_width = kBodyFeatureWidth;
    std::vector<std::size_t> lstm_units{64, 128, 64};
    std::vector<std::size_t> dense_units{64, 32, 2};
    bool filter_head = true;
    bool canonicalize = false;

    /// Throws ConfigError on empty stacks, zero widths or a head that is not
    /// two-way.
    void validate() const;
    bool operator==(const ArchitectureConfig&) const = default;
};

struct ModelParams {
    std::vector<LstmLayerParams> lstm;
    std::vector<DenseLayerParams> dense;
    ArchitectureConfig arch;
    std::uint64_t seed = 0;

    std::size_t input_width() const { return arch.input_width; }

    /// Checks that layer widths chain, the head is a single final two-way
    /// softmax, every entry is finite, and the shapes match `arch`.
    void validate() const;

    /// Same shapes and metadata, every entry zero.
    ModelParams zeros_like() const;

    std::size_t parameter_count() const;

    bool operator==(const ModelParams& o) const;
};

/// Gradient containers share the model's shape.
using Gradients = ModelParams;

/// Visits every weight and bias buffer in a fixed order (LSTM layers first,
/// then dense layers; weights before bias).
template <class Params, class Fn>
void for_each_tensor(Params& m, Fn&& fn) {
    for (auto& layer : m.lstm) {
        fn(std::span(layer.weights.data(), static_cast<std::size_t>(layer.weights.size())));
        fn(std::span(layer.bias.data(), static_cast<std::size_t>(layer.bias.size())));
    }
    for (auto& layer : m.dense) {
        fn(std::span(layer.weights.data(), static_cast<std::size_t>(layer.weights.size())));
        fn(std::span(layer.bias.data(), static_cast<std::size_t>(layer.bias.size())));
    }
}

struct CellState {
    Eigen::VectorXd h;
    Eigen::VectorXd c;

    static CellState zeros(std::size_t hidden);
};

/// Activated gate values of one step, stacked like the weights
/// (i, f, o, candidate).
using GateActivations = Eigen::VectorXd;

CellState lstm_cell_step(const LstmLayerParams& p, const Eigen::VectorXd& x,
                         const CellState& s, GateActivations* gates = nullptr);

/// Per-layer record kept for backpropagation through time.
struct LstmLayerCache {
    Eigen::MatrixXd inputs;  // (input, T)
    Eigen::MatrixXd gates;   // (4 * hidden, T), activated
    Eigen::MatrixXd hidden;  // (hidden, T + 1), column 0 is h_0
    Eigen::MatrixXd cells;   // (hidden, T + 1), column 0 is c_0
};

/// Runs the layer from a zero state; returns h_1..h_T as columns.
Eigen::MatrixXd lstm_layer_forward(const LstmLayerParams& p, const Eigen::MatrixXd& seq,
                                   LstmLayerCache* cache = nullptr);

Eigen::VectorXd softmax(const Eigen::VectorXd& z);

struct ClassProbs {
    std::array<double, kClassCount> p{};

    double operator[](std::size_t k) const { return p[k]; }
    /// Argmax; ties go to Good.
    Posture predicted() const { return p[1] > p[0] ? Posture::Bad : Posture::Good; }
    double confidence() const { return p[0] >= p[1] ? p[0] : p[1]; }
};

struct ForwardCache {
    std::vector<LstmLayerCache> lstm;
    std::vector<Eigen::VectorXd> dense_inputs;  // input of each dense layer
    std::vector<Eigen::VectorXd> dense_outputs; // activated output of each dense layer
};

/// Feature-by-time input. Only the last LSTM layer's final hidden vector
/// reaches the dense stack.
ClassProbs model_forward(const ModelParams& m, const Eigen::MatrixXd& seq,
                         ForwardCache* cache = nullptr);
ClassProbs model_forward(const ModelParams& m, const SequenceWindow& w);

/// Glorot-uniform weights, zero biases except forget gates at 1.0.
ModelParams init_model(const ArchitectureConfig& cfg, std::uint64_t seed);

}  // namespace liftguard
