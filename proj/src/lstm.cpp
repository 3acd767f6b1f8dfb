#include "liftguard/lstm.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <random>

#include <fmt/format.h>

#include "liftguard/errors.hpp"

namespace liftguard {

double sigmoid(double x) {
    // Split on sign so exp never overflows.
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

double tanh_activation(double x) { return std::tanh(x); }

namespace {

bool same_bits(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    return a.rows() == b.rows() && a.cols() == b.cols() &&
           std::equal(a.data(), a.data() + a.size(), b.data(),
                      [](double x, double y) { return std::bit_cast<std::uint64_t>(x) ==
                                                      std::bit_cast<std::uint64_t>(y); });
}

bool same_bits(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    return a.size() == b.size() &&
           std::equal(a.data(), a.data() + a.size(), b.data(),
                      [](double x, double y) { return std::bit_cast<std::uint64_t>(x) ==
                                                      std::bit_cast<std::uint64_t>(y); });
}

bool all_finite(const auto& m) { return m.array().isFinite().all(); }

}  // namespace

LstmLayerParams LstmLayerParams::zeros(std::size_t input, std::size_t hidden) {
    LstmLayerParams p;
    p.weights = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(4 * hidden),
                                      static_cast<Eigen::Index>(hidden + input));
    p.bias = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(4 * hidden));
    return p;
}

bool LstmLayerParams::operator==(const LstmLayerParams& o) const {
    return same_bits(weights, o.weights) && same_bits(bias, o.bias);
}

DenseLayerParams DenseLayerParams::zeros(std::size_t in, std::size_t out, Activation act) {
    DenseLayerParams p;
    p.weights = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(out), static_cast<Eigen::Index>(in));
    p.bias = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(out));
    p.activation = act;
    return p;
}

bool DenseLayerParams::operator==(const DenseLayerParams& o) const {
    return activation == o.activation && same_bits(weights, o.weights) && same_bits(bias, o.bias);
}

void ArchitectureConfig::validate() const {
    if (input_width == 0) throw ConfigError("input width must be positive");
    if (lstm_units.empty()) throw ConfigError("at least one LSTM layer is required");
    if (dense_units.empty()) throw ConfigError("at least one dense layer is required");
    for (std::size_t u : lstm_units) {
        if (u == 0) throw ConfigError("LSTM layer widths must be positive");
    }
    for (std::size_t u : dense_units) {
        if (u == 0) throw ConfigError("dense layer widths must be positive");
    }
    if (dense_units.back() != kClassCount) {
        throw ConfigError(fmt::format("final dense width {} does not match the {} classes",
                                      dense_units.back(), kClassCount));
    }
}

void ModelParams::validate() const {
    arch.validate();
    if (lstm.size() != arch.lstm_units.size() || dense.size() != arch.dense_units.size()) {
        throw DimensionError("layer count disagrees with the architecture descriptor");
    }
    std::size_t width = arch.input_width;
    for (std::size_t k = 0; k < lstm.size(); ++k) {
        const auto& l = lstm[k];
        const auto h = arch.lstm_units[k];
        if (static_cast<std::size_t>(l.weights.rows()) != 4 * h ||
            static_cast<std::size_t>(l.weights.cols()) != h + width ||
            static_cast<std::size_t>(l.bias.size()) != 4 * h) {
            throw DimensionError(fmt::format("LSTM layer {} shape does not chain", k));
        }
        if (!all_finite(l.weights) || !all_finite(l.bias)) {
            throw ValidationError(fmt::format("LSTM layer {} has non-finite entries", k));
        }
        width = h;
    }
    for (std::size_t k = 0; k < dense.size(); ++k) {
        const auto& d = dense[k];
        const auto out = arch.dense_units[k];
        if (d.in() != width || d.out() != out || static_cast<std::size_t>(d.bias.size()) != out) {
            throw DimensionError(fmt::format("dense layer {} shape does not chain", k));
        }
        const bool last = k + 1 == dense.size();
        if ((d.activation == Activation::Softmax) != last) {
            throw DimensionError("exactly one softmax layer is allowed, in final position");
        }
        if (!all_finite(d.weights) || !all_finite(d.bias)) {
            throw ValidationError(fmt::format("dense layer {} has non-finite entries", k));
        }
        width = out;
    }
}

ModelParams ModelParams::zeros_like() const {
    ModelParams z = *this;
    for_each_tensor(z, [](std::span<double> t) { std::fill(t.begin(), t.end(), 0.0); });
    return z;
}

std::size_t ModelParams::parameter_count() const {
    std::size_t n = 0;
    for_each_tensor(*this, [&](std::span<const double> t) { n += t.size(); });
    return n;
}

bool ModelParams::operator==(const ModelParams& o) const {
    return arch == o.arch && seed == o.seed && lstm == o.lstm && dense == o.dense;
}

CellState CellState::zeros(std::size_t hidden) {
    const auto h = static_cast<Eigen::Index>(hidden);
    return {Eigen::VectorXd::Zero(h), Eigen::VectorXd::Zero(h)};
}

CellState lstm_cell_step(const LstmLayerParams& p, const Eigen::VectorXd& x, const CellState& s,
                         GateActivations* gates) {
    const auto h = static_cast<Eigen::Index>(p.hidden());
    const auto in = static_cast<Eigen::Index>(p.input());
    if (x.size() != in || s.h.size() != h || s.c.size() != h) {
        throw DimensionError(fmt::format(
            "cell step expects input {} and state {}, got input {} and state ({}, {})", in, h,
            x.size(), s.h.size(), s.c.size()));
    }
    Eigen::VectorXd z = p.bias;
    z.noalias() += p.weights.leftCols(h) * s.h;
    z.noalias() += p.weights.rightCols(in) * x;
    for (Eigen::Index r = 0; r < 3 * h; ++r) z[r] = sigmoid(z[r]);
    for (Eigen::Index r = 3 * h; r < 4 * h; ++r) z[r] = std::tanh(z[r]);

    CellState next;
    next.c = z.segment(h, h).cwiseProduct(s.c) + z.head(h).cwiseProduct(z.tail(h));
    next.h = z.segment(2 * h, h).cwiseProduct(next.c.array().tanh().matrix());
    if (gates != nullptr) *gates = std::move(z);
    return next;
}

Eigen::MatrixXd lstm_layer_forward(const LstmLayerParams& p, const Eigen::MatrixXd& seq,
                                   LstmLayerCache* cache) {
    if (seq.cols() == 0) throw DimensionError("LSTM layer needs a non-empty sequence");
    if (static_cast<std::size_t>(seq.rows()) != p.input()) {
        throw DimensionError(fmt::format("LSTM layer expects width {}, got {}", p.input(),
                                         seq.rows()));
    }
    const auto h = static_cast<Eigen::Index>(p.hidden());
    const Eigen::Index steps = seq.cols();
    Eigen::MatrixXd out(h, steps);
    if (cache != nullptr) {
        cache->inputs = seq;
        cache->gates.resize(4 * h, steps);
        cache->hidden.resize(h, steps + 1);
        cache->cells.resize(h, steps + 1);
        cache->hidden.col(0).setZero();
        cache->cells.col(0).setZero();
    }
    CellState state = CellState::zeros(p.hidden());
    GateActivations gates;
    for (Eigen::Index t = 0; t < steps; ++t) {
        state = lstm_cell_step(p, seq.col(t), state, cache != nullptr ? &gates : nullptr);
        out.col(t) = state.h;
        if (cache != nullptr) {
            cache->gates.col(t) = gates;
            cache->hidden.col(t + 1) = state.h;
            cache->cells.col(t + 1) = state.c;
        }
    }
    return out;
}

Eigen::VectorXd softmax(const Eigen::VectorXd& z) {
    const double top = z.maxCoeff();
    Eigen::VectorXd e = (z.array() - top).exp().matrix();
    return e / e.sum();
}

ClassProbs model_forward(const ModelParams& m, const Eigen::MatrixXd& seq, ForwardCache* cache) {
    if (static_cast<std::size_t>(seq.rows()) != m.input_width()) {
        throw DimensionError(fmt::format("model expects feature width {}, window has {}",
                                         m.input_width(), seq.rows()));
    }
    if (m.lstm.empty() || m.dense.empty()) throw DimensionError("model has no layers");
    if (cache != nullptr) {
        cache->lstm.assign(m.lstm.size(), {});
        cache->dense_inputs.clear();
        cache->dense_outputs.clear();
    }
    Eigen::MatrixXd activ = seq;
    for (std::size_t k = 0; k < m.lstm.size(); ++k) {
        activ = lstm_layer_forward(m.lstm[k], activ, cache != nullptr ? &cache->lstm[k] : nullptr);
    }
    Eigen::VectorXd v = activ.col(activ.cols() - 1);
    for (const auto& layer : m.dense) {
        if (v.size() != layer.weights.cols()) {
            throw DimensionError("dense layer input width mismatch");
        }
        if (cache != nullptr) cache->dense_inputs.push_back(v);
        Eigen::VectorXd z = layer.bias;
        z.noalias() += layer.weights * v;
        switch (layer.activation) {
            case Activation::Relu: v = z.cwiseMax(0.0); break;
            case Activation::Softmax: v = softmax(z); break;
            case Activation::Identity: v = std::move(z); break;
        }
        if (cache != nullptr) cache->dense_outputs.push_back(v);
    }
    if (static_cast<std::size_t>(v.size()) != kClassCount) {
        throw DimensionError("model head is not two-way");
    }
    return ClassProbs{{v[0], v[1]}};
}

ClassProbs model_forward(const ModelParams& m, const SequenceWindow& w) {
    return model_forward(m, w.as_matrix());
}

ModelParams init_model(const ArchitectureConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    ModelParams m;
    m.arch = cfg;
    m.seed = seed;
    std::mt19937_64 rng(seed);
    auto fill_uniform = [&rng](auto&& block, double fan_in, double fan_out) {
        const double r = std::sqrt(6.0 / (fan_in + fan_out));
        std::uniform_real_distribution<double> dist(-r, r);
        for (Eigen::Index i = 0; i < block.rows(); ++i) {
            for (Eigen::Index j = 0; j < block.cols(); ++j) block(i, j) = dist(rng);
        }
    };
    std::size_t width = cfg.input_width;
    for (std::size_t units : cfg.lstm_units) {
        auto layer = LstmLayerParams::zeros(width, units);
        for (Gate g : {Gate::Input, Gate::Forget, Gate::Output, Gate::Candidate}) {
            fill_uniform(layer.gate_weights(g), static_cast<double>(units + width),
                         static_cast<double>(units));
        }
        layer.gate_bias(Gate::Forget).setOnes();
        m.lstm.push_back(std::move(layer));
        width = units;
    }
    for (std::size_t k = 0; k < cfg.dense_units.size(); ++k) {
        const bool last = k + 1 == cfg.dense_units.size();
        auto layer = DenseLayerParams::zeros(width, cfg.dense_units[k],
                                             last ? Activation::Softmax : Activation::Relu);
        fill_uniform(layer.weights, static_cast<double>(width),
                     static_cast<double>(cfg.dense_units[k]));
        m.dense.push_back(std::move(layer));
        width = cfg.dense_units[k];
    }
    return m;
}

}  // namespace liftguard
