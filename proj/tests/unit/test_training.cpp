#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <set>
#include <sstream>

#include "liftguard/errors.hpp"
#include "liftguard/training.hpp"
#include "support/fd_oracle.hpp"
#include "support/fixtures.hpp"

using namespace liftguard;

namespace {

std::vector<LabeledSequence> random_batch(std::mt19937_64& rng, std::size_t n, std::size_t features,
                                          std::size_t steps) {
    std::vector<LabeledSequence> batch;
    for (std::size_t i = 0; i < n; ++i) {
        batch.push_back(testing::random_sequence(rng, features, steps, i % 2 == 0 ? Posture::Good : Posture::Bad));
    }
    return batch;
}

std::vector<double> flatten(const ModelParams& m) {
    std::vector<double> out;
    for_each_tensor(m, [&](std::span<const double> t) { out.insert(out.end(), t.begin(), t.end()); });
    return out;
}

std::vector<LabeledSequence> labeled(std::size_t good, std::size_t bad) {
    std::vector<LabeledSequence> data;
    for (std::size_t i = 0; i < good + bad; ++i) {
        LabeledSequence s;
        s.window.source_id = std::to_string(i);
        s.label = i < good ? Posture::Good : Posture::Bad;
        data.push_back(s);
    }
    return data;
}

}  // namespace

TEST_CASE("cross_entropy reference values") {
    const std::array<double, 2> good{1.0, 0.0};
    const std::array<double, 2> bad{0.0, 1.0};
    CHECK(cross_entropy(std::array{1.0, 0.0}, good) == 0.0);
    CHECK(cross_entropy(std::array{0.5, 0.5}, good) == doctest::Approx(0.693147180559945).epsilon(1e-14));
    CHECK(cross_entropy(std::array{0.5, 0.5}, bad) == doctest::Approx(0.693147180559945).epsilon(1e-14));
    CHECK(cross_entropy(std::array{0.9, 0.1}, good) == doctest::Approx(0.10536051565782628).epsilon(1e-14));
    CHECK(cross_entropy(std::array{1.0, 0.0}, bad) == doctest::Approx(-std::log(1e-12)));
    CHECK_THROWS_AS(cross_entropy(std::array{1.0, 0.0, 0.0}, good), DimensionError);
}

TEST_CASE("analytic gradient matches central finite differences") {
    std::mt19937_64 rng(31);
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
        const auto m = testing::jittered(testing::toy_model(6, {4, 4, 4}, {4, 3, 2}, 100 + seed), seed);
        const auto batch = random_batch(rng, 3, 6, 5);
        const auto bg = backward(m, batch);
        CHECK(bg.mean_loss == doctest::Approx(testing::fd_loss(m, batch)).epsilon(1e-12));

        auto grad = bg.grad;
        const auto analytic = testing::tensors_of(grad);
        double worst = 0.0;
        std::size_t checked = 0;
        for (std::size_t t = 0; t < analytic.size(); ++t) {
            for (std::size_t i = 0; i < analytic[t].size(); ++i) {
                const double fd = testing::central_difference(m, batch, {t, i});
                const double g = analytic[t][i];
                worst = std::max(worst, std::abs(g - fd) / std::max({std::abs(g), std::abs(fd), 1e-4}));
                ++checked;
            }
        }
        CHECK(checked >= 200);
        CHECK(worst < 1e-5);
    }
}

TEST_CASE("duplicated batch gives the single-sample gradient") {
    std::mt19937_64 rng(2);
    const auto m = testing::toy_model(6, {4, 3}, {3, 2}, 5);
    const auto s = testing::random_sequence(rng, 6, 5, Posture::Bad);
    const std::vector<LabeledSequence> one{s};
    const std::vector<LabeledSequence> two{s, s};
    CHECK(backward(m, one).grad == backward(m, two).grad);
}

TEST_CASE("balanced opposite labels on a zero model cancel the head bias gradient") {
    std::mt19937_64 rng(3);
    const auto m = testing::toy_model(6, {4}, {3, 2}, 1).zeros_like();
    std::vector<LabeledSequence> batch{testing::random_sequence(rng, 6, 5, Posture::Good),
                                       testing::random_sequence(rng, 6, 5, Posture::Bad)};
    const auto bg = backward(m, batch);
    CHECK(bg.grad.dense.back().bias.isZero(0.0));

    // The finite-difference oracle agrees.
    auto grad = bg.grad;
    const auto tensors = testing::tensors_of(grad);
    const std::size_t head_bias = tensors.size() - 1;
    for (std::size_t i = 0; i < tensors[head_bias].size(); ++i) {
        CHECK(std::abs(testing::central_difference(m, batch, {head_bias, i})) < 1e-9);
    }
}

TEST_CASE("non-finite loss raises a numeric error naming the sample") {
    std::mt19937_64 rng(4);
    const auto m = testing::toy_model(6, {4}, {2}, 1);
    auto batch = random_batch(rng, 3, 6, 5);
    batch[2].window.frames[1].values[0] = std::numeric_limits<double>::quiet_NaN();
    batch[2].window.source_id = "poisoned";
    CHECK_THROWS_WITH_AS(backward(m, batch), doctest::Contains("poisoned"), NumericError);
    CHECK_THROWS_AS(backward(m, {}), ConfigError);
}

TEST_CASE("adam with zero gradient leaves parameters unchanged") {
    const auto m = testing::toy_model(6, {4}, {3, 2}, 8);
    auto updated = m;
    auto st = AdamState::fresh(m);
    adam_step(updated, m.zeros_like(), st, TrainingConfig{});
    CHECK(updated == m);
    CHECK(st.t == 1);
}

TEST_CASE("adam first step matches the hand evaluation") {
    const auto m = testing::toy_model(2, {1}, {2}, 8);
    auto g = m.zeros_like();
    for_each_tensor(g, [](std::span<double> t) { std::fill(t.begin(), t.end(), 4.0); });
    TrainingConfig cfg;
    cfg.grad_clip_norm = 0.0;
    auto updated = m;
    auto st = AdamState::fresh(m);
    adam_step(updated, g, st, cfg);
    const auto before = flatten(m);
    const auto after = flatten(updated);
    for (std::size_t k = 0; k < before.size(); ++k) {
        // -lr * 4 / (4 + 1e-8), from tests/oracles/hand_values.py
        CHECK(after[k] - before[k] == doctest::Approx(-0.0009999999975000007).epsilon(1e-9));
    }
}

TEST_CASE("equal-magnitude gradients move every parameter equally on step one") {
    const auto m = testing::toy_model(3, {2}, {2}, 9);
    auto g = m.zeros_like();
    std::mt19937_64 rng(1);
    for_each_tensor(g, [&](std::span<double> t) {
        for (double& v : t) v = (rng() % 2 == 0) ? 0.3 : -0.3;
    });
    auto updated = m;
    auto st = AdamState::fresh(m);
    adam_step(updated, g, st, TrainingConfig{});
    const auto before = flatten(m);
    const auto after = flatten(updated);
    const double step = std::abs(after[0] - before[0]);
    for (std::size_t k = 0; k < before.size(); ++k) {
        CHECK(std::abs(after[k] - before[k]) == doctest::Approx(step).epsilon(1e-9));
    }
}

TEST_CASE("clipping never increases the global norm") {
    std::mt19937_64 rng(12);
    std::normal_distribution<double> n(0.0, 3.0);
    const auto m = testing::toy_model(4, {3}, {2}, 2);
    for (int trial = 0; trial < 50; ++trial) {
        auto g = m.zeros_like();
        for_each_tensor(g, [&](std::span<double> t) {
            for (double& v : t) v = n(rng);
        });
        const double limit = std::abs(n(rng)) + 0.01;
        const double before = clip_global_norm(g, limit);
        auto copy = g;
        const double after = clip_global_norm(copy, 0.0);
        CHECK(after <= before * (1.0 + 1e-12));
        CHECK(after <= limit * (1.0 + 1e-12));
    }
}

TEST_CASE("split sizes, stratification and determinism") {
    TrainingConfig cfg;
    cfg.seed = 5;
    const auto data = labeled(31, 31);
    const auto split = split_dataset(data, cfg);
    CHECK(split.test.size() == 16);
    CHECK(split.train.size() == 46);
    const auto bad_in_test = std::count_if(split.test.begin(), split.test.end(),
                                           [](const auto& s) { return s.label == Posture::Bad; });
    CHECK(bad_in_test == 8);

    std::set<std::string> ids;
    for (const auto& s : split.train) ids.insert(s.window.source_id);
    for (const auto& s : split.test) ids.insert(s.window.source_id);
    CHECK(ids.size() == 62);

    const auto again = split_dataset(data, cfg);
    for (std::size_t i = 0; i < split.test.size(); ++i) {
        CHECK(split.test[i].window.source_id == again.test[i].window.source_id);
    }

    const auto small = split_dataset(labeled(2, 2), cfg);
    CHECK(small.test.size() == 1);
    CHECK(small.train.size() == 3);
}

TEST_CASE("split keeps per-class test shares within one of proportional") {
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t good = 1 + rng() % 40;
        const std::size_t bad = 1 + rng() % 40;
        if (good + bad < 4) continue;
        TrainingConfig cfg;
        cfg.seed = rng();
        cfg.test_fraction = 0.05 + 0.9 * static_cast<double>(rng() % 1000) / 1000.0;
        const auto split = split_dataset(labeled(good, bad), cfg);
        const double n = static_cast<double>(good + bad);
        CHECK(split.test.size() == static_cast<std::size_t>(std::ceil(n * cfg.test_fraction - 1e-9)));
        CHECK(split.test.size() + split.train.size() == good + bad);
        const auto test_bad = static_cast<double>(std::count_if(
            split.test.begin(), split.test.end(), [](const auto& s) { return s.label == Posture::Bad; }));
        const double proportional = static_cast<double>(bad) * static_cast<double>(split.test.size()) / n;
        CHECK(std::abs(test_bad - proportional) <= 1.0);
    }
}

TEST_CASE("split rejects single-class and tiny datasets") {
    CHECK_THROWS_AS(split_dataset(labeled(6, 0), TrainingConfig{}), StratificationError);
    CHECK_THROWS_AS(split_dataset(labeled(2, 1), TrainingConfig{}), ConfigError);
}

TEST_CASE("unreachable threshold exhausts the epochs") {
    const auto data = testing::separable_sequences(2, 77);
    ArchitectureConfig arch;
    arch.lstm_units = {4};
    arch.dense_units = {2};
    TrainingConfig cfg;
    cfg.epochs = 7;
    cfg.early_stop_threshold = 1.01;
    const auto [model, history] = fit(data, arch, cfg);
    CHECK(history.stop_reason == StopReason::EpochsExhausted);
    CHECK(history.epochs.size() == 7);
    CHECK(history.epochs.back().epoch == 7);
}

TEST_CASE("training is bit-for-bit deterministic") {
    const auto data = testing::separable_sequences(3, 10);
    ArchitectureConfig arch;
    arch.lstm_units = {6, 5};
    arch.dense_units = {4, 2};
    TrainingConfig cfg;
    cfg.epochs = 5;
    cfg.seed = 99;
    const auto a = train(data, arch, cfg);
    const auto b = train(data, arch, cfg);
    CHECK(a.model == b.model);
    std::ostringstream ha, hb;
    a.history.write_csv(ha);
    b.history.write_csv(hb);
    CHECK(ha.str() == hb.str());
    CHECK(ha.str().rfind("epoch,loss,categorical_accuracy\n", 0) == 0);
}

TEST_CASE("small model fits separable data and stops early") {
    const auto data = testing::separable_sequences(4, 500);
    ArchitectureConfig arch;
    arch.lstm_units = {16, 16, 16};
    arch.dense_units = {16, 8, 2};
    TrainingConfig cfg;
    cfg.epochs = 500;
    cfg.early_stop_threshold = 1.0;
    cfg.seed = 1;
    const auto [model, history] = fit(data, arch, cfg);
    CHECK(history.stop_reason == StopReason::EarlyStopped);
    CHECK(history.epochs.size() < 500);
    CHECK(history.epochs.back().categorical_accuracy == 1.0);

    std::size_t decreasing = 0;
    for (std::size_t e = 1; e < 11 && e < history.epochs.size(); ++e) {
        if (history.epochs[e].mean_loss < history.epochs[e - 1].mean_loss) ++decreasing;
    }
    CHECK(decreasing >= 8);
}

TEST_CASE("fit rejects empty or mismatched training data") {
    ArchitectureConfig arch;
    CHECK_THROWS_AS(fit({}, arch, TrainingConfig{}), ConfigError);
    const auto data = testing::separable_sequences(1, 0, /*filter_head=*/false);
    CHECK_THROWS_AS(fit(data, arch, TrainingConfig{}), ConfigError);
    TrainingConfig bad;
    bad.epochs = 0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("evaluate scores held-out windows") {
    const auto data = testing::separable_sequences(2, 3);
    ArchitectureConfig arch;
    arch.lstm_units = {4};
    arch.dense_units = {2};
    const auto m = init_model(arch, 0).zeros_like();
    const auto report = evaluate(m, data);
    CHECK(report.confusion.total() == 4);
    CHECK(report.accuracy == 0.5);  // ties go to Good
    CHECK(report.auc == 0.5);
}
