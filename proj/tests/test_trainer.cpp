#include "doctest.h"

#include <cmath>

#include "neuncut/baseline.hpp"
#include "neuncut/metrics.hpp"
#include "neuncut/trainer.hpp"
#include "oracles.hpp"

using namespace neuncut;

namespace {

/// k Gaussian blobs whose heat-kernel graph at sigma = 0.5 has exactly k
/// components (centers far enough apart that cross affinities underflow).
DataMatrix separated_blobs(std::size_t n, std::size_t k, std::uint64_t seed) {
    Rng rng(seed);
    DataMatrix d;
    d.points = Matrix(n, 2);
    d.labels = std::vector<int>(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t blob = i % k;
        d.points(i, 0) = 25.0 * static_cast<double>(blob) + 0.3 * rng.normal();
        d.points(i, 1) = 0.3 * rng.normal();
        (*d.labels)[i] = static_cast<int>(blob);
    }
    return d;
}

} // namespace

TEST_CASE("adam: zero gradient leaves parameters untouched") {
    MlpModel model = init({2, 3, 2}, 1);
    const MlpModel before = model;
    AdamState state(model);
    Gradients grads;
    for (const Matrix& w : model.weights) grads.weights.emplace_back(w.rows(), w.cols());
    for (const auto& b : model.biases) grads.biases.emplace_back(b.size(), 0.0);
    adam_step(model, grads, state, 0.01, 0.0);
    for (std::size_t l = 0; l < model.weights.size(); ++l) {
        CHECK(model.weights[l] == before.weights[l]);
        CHECK(model.biases[l] == before.biases[l]);
    }
}

TEST_CASE("adam: the first bias-corrected step is a signed learning-rate step") {
    MlpModel model = init({1, 1}, 2);
    const double w0 = model.weights[0](0, 0);
    AdamState state(model);
    Gradients grads;
    grads.weights.emplace_back(1, 1);
    grads.weights[0](0, 0) = 0.37;
    grads.biases.emplace_back(1, -1.2);
    adam_step(model, grads, state, 0.01, 0.0);
    CHECK(model.weights[0](0, 0) == doctest::Approx(w0 - 0.01).epsilon(1e-6));
    CHECK(model.biases[0][0] == doctest::Approx(0.01).epsilon(1e-6));
}

TEST_CASE("adam: tracks a scalar reference implementation for 100 steps") {
    MlpModel model = init({2, 1}, 3);  // three parameters
    AdamState state(model);
    oracles::ScalarAdam ref_w0, ref_w1, ref_b;
    double w0 = model.weights[0](0, 0), w1 = model.weights[0](1, 0), b = model.biases[0][0];

    Rng rng(5);
    for (int step = 0; step < 100; ++step) {
        const double g0 = rng.normal(), g1 = rng.normal(), gb = rng.normal();
        const double lr = 0.005 * (1.0 + 0.5 * rng.uniform());
        const double wd = 1e-4;
        Gradients grads;
        grads.weights.emplace_back(2, 1);
        grads.weights[0](0, 0) = g0;
        grads.weights[0](1, 0) = g1;
        grads.biases.emplace_back(1, gb);
        adam_step(model, grads, state, lr, wd);
        w0 = ref_w0.step(w0, g0, lr, wd);
        w1 = ref_w1.step(w1, g1, lr, wd);
        b = ref_b.step(b, gb, lr, wd);
        CHECK(std::fabs(model.weights[0](0, 0) - w0) <= 1e-12);
        CHECK(std::fabs(model.weights[0](1, 0) - w1) <= 1e-12);
        CHECK(std::fabs(model.biases[0][0] - b) <= 1e-12);
    }
}

TEST_CASE("train: identical configuration reproduces identical parameters") {
    const DataMatrix data = separated_blobs(40, 2, 7);
    TrainConfig cfg;
    cfg.clusters = 2;
    cfg.batch_size = 20;
    cfg.epochs = 5;
    cfg.hidden_dims = {8, 8};
    cfg.seed = 3;
    const TrainResult a = train(data, cfg);
    const TrainResult b = train(data, cfg);
    for (std::size_t l = 0; l < a.model.weights.size(); ++l) {
        CHECK(a.model.weights[l] == b.model.weights[l]);
        CHECK(a.model.biases[l] == b.model.biases[l]);
    }
    CHECK(a.log.records.size() == b.log.records.size());
    for (std::size_t i = 0; i < a.log.records.size(); ++i)
        CHECK(a.log.records[i].total == b.log.records[i].total);
}

TEST_CASE("train: disconnected components are recovered exactly") {
    const DataMatrix data = separated_blobs(60, 2, 11);
    TrainConfig cfg;
    cfg.clusters = 2;
    cfg.batch_size = 30;
    cfg.epochs = 150;
    cfg.hidden_dims = {16, 16};
    cfg.seed = 1;
    const TrainResult result = train(data, cfg);
    REQUIRE_FALSE(result.log.aborted);
    const Inference inference = infer(result.model, data);
    CHECK(ari(inference.labels, *data.labels) == 1.0);

    // the spectral baseline is the oracle for the same dataset
    const std::vector<int> oracle = ncut_baseline(data.points, 2, 0.5, 0, 5);
    CHECK(ari(inference.labels, oracle) == 1.0);
}

TEST_CASE("train: loss trend decreases on a solvable problem") {
    const DataMatrix data = separated_blobs(80, 2, 13);
    TrainConfig cfg;
    cfg.clusters = 2;
    cfg.batch_size = 40;
    cfg.epochs = 150;  // 300 iterations
    cfg.hidden_dims = {16, 16};
    cfg.seed = 2;
    const TrainResult result = train(data, cfg);
    const auto& records = result.log.records;
    REQUIRE(records.size() >= 200);

    double leading = 0.0, trailing = 0.0;
    for (std::size_t i = 0; i < 100; ++i) {
        leading += records[i].total;
        trailing += records[records.size() - 100 + i].total;
    }
    CHECK(trailing <= leading);

    // the penalty term settles onto a plateau: last quartile below the first
    double first_quartile = 0.0, last_quartile = 0.0;
    const std::size_t quarter = records.size() / 4;
    for (std::size_t i = 0; i < quarter; ++i) {
        first_quartile += records[i].orth;
        last_quartile += records[records.size() - quarter + i].orth;
    }
    CHECK(last_quartile <= first_quartile);
}

TEST_CASE("train: one record per optimizer step with the annealed rate") {
    const DataMatrix data = separated_blobs(24, 2, 17);
    TrainConfig cfg;
    cfg.clusters = 2;
    cfg.batch_size = 12;
    cfg.epochs = 4;
    cfg.hidden_dims = {4};
    cfg.seed = 5;
    const TrainResult result = train(data, cfg);
    REQUIRE(result.log.records.size() == 8);
    for (std::size_t i = 0; i < 8; ++i) {
        CHECK(result.log.records[i].iter == i);
        const double expected = 0.5 * cfg.lr0 * (1.0 + std::cos(3.14159265358979323846 *
                                                                static_cast<double>(i) / 8.0));
        CHECK(result.log.records[i].lr == doctest::Approx(expected).epsilon(1e-12));
        if (i > 0) CHECK(result.log.records[i].lr < result.log.records[i - 1].lr);
    }
}

TEST_CASE("train: numerical failure aborts onto the last-good checkpoint") {
    const DataMatrix data = separated_blobs(20, 2, 29);
    TrainConfig cfg;
    cfg.clusters = 2;
    cfg.batch_size = 10;
    cfg.epochs = 50;
    cfg.hidden_dims = {4};
    cfg.lr0 = 1e160;  // parameters overflow within a few steps
    const TrainResult result = train(data, cfg);
    CHECK(result.log.aborted);
    CHECK_FALSE(result.log.abort_reason.empty());
    CHECK(result.log.records.size() < 100);  // stopped early
    // returned model is the epoch checkpoint, still usable
    for (const Matrix& w : result.model.weights) CHECK(w.all_finite());
    const Inference inference = infer(result.model, data);
    CHECK(inference.labels.size() == 20);
}

TEST_CASE("train: configuration validation") {
    const DataMatrix data = separated_blobs(20, 2, 19);
    TrainConfig cfg;
    cfg.batch_size = 30;  // exceeds n
    CHECK_THROWS_AS(train(data, cfg), InvalidConfig);
    cfg.batch_size = 10;
    cfg.gamma = 0.0;
    CHECK_THROWS_AS(train(data, cfg), InvalidConfig);
    cfg.gamma = 0.1;
    cfg.epochs = 0;
    CHECK_THROWS_AS(train(data, cfg), InvalidConfig);
}

TEST_CASE("infer: deterministic, handles a single point, checks dimensions") {
    const DataMatrix data = separated_blobs(30, 3, 23);
    TrainConfig cfg;
    cfg.clusters = 3;
    cfg.batch_size = 15;
    cfg.epochs = 10;
    cfg.hidden_dims = {8};
    const TrainResult result = train(data, cfg);

    const Inference a = infer(result.model, data);
    const Inference b = infer(result.model, data);
    CHECK(a.labels == b.labels);
    CHECK(a.memberships == b.memberships);

    Matrix one_point(1, 2);
    one_point(0, 0) = 25.0;
    const Inference single = infer(result.model, one_point);
    CHECK(single.labels.size() == 1);
    CHECK(single.labels[0] >= 0);
    CHECK(single.labels[0] < 3);

    CHECK_THROWS_AS(infer(result.model, Matrix(2, 5)), InvalidInput);
}

TEST_CASE("train log: csv layout") {
    TrainLog log;
    IterationRecord r;
    r.iter = 0;
    r.lap = 0.5;
    r.orth = 1.25;
    r.total = 0.5 + 0.05 * 1.25;
    r.lr = 0.005;
    log.records.push_back(r);
    const std::string csv = train_log_to_csv(log);
    CHECK(csv.substr(0, 25) == "iter,lap,orth,total,lr\n0,");
    CHECK(csv.find("0.5,1.25,") != std::string::npos);
}
