#pragma once

#include <cmath>
#include <cstdint>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "neuncut/data.hpp"
#include "neuncut/error.hpp"
#include "neuncut/graph.hpp"
#include "neuncut/loss.hpp"
#include "neuncut/metrics.hpp"
#include "neuncut/model.hpp"
#include "neuncut/model_io.hpp"

// Mini-batch training loop. Each iteration samples a batch, builds its
// affinity graph and degrees, runs the network forward, estimates cluster
// volumes from the current memberships (E-step), then takes one Adam step on
// the relaxed cut loss with those volumes held constant (M-step). The
// learning rate follows cosine annealing from lr0 to 0 over the full run.
// Affinities are always recomputed from raw batch features; nothing is
// sliced out of a global matrix.

namespace neuncut {

struct TrainConfig {
    std::size_t clusters = 2;
    double gamma = 0.1;
    double lr0 = 0.005;
    double weight_decay = 1e-4;
    std::size_t batch_size = 1000;
    std::size_t epochs = 100;
    double sigma = 0.5;
    std::size_t knn_s = 0;  ///< 0 disables row sparsification
    std::uint64_t seed = 0;
    Objective objective = Objective::ncut;
    std::vector<std::size_t> hidden_dims = {512, 512};
    bool track_metrics = false;     ///< per-epoch ACC/NMI/ARI when labels exist
    std::string checkpoint_path;    ///< written at each epoch end when non-empty
};

struct IterationRecord {
    std::size_t iter = 0;
    double lap = 0.0;
    double orth = 0.0;
    double total = 0.0;
    double lr = 0.0;
    double acc = std::numeric_limits<double>::quiet_NaN();
    double nmi = std::numeric_limits<double>::quiet_NaN();
    double ari = std::numeric_limits<double>::quiet_NaN();
};

struct TrainLog {
    std::vector<IterationRecord> records;  ///< one per optimizer step, append-only
    bool has_metrics = false;
    bool aborted = false;
    std::string abort_reason;
};

/// Adam moment accumulators, one per parameter tensor.
struct AdamState {
    std::vector<Matrix> weight_m, weight_v;
    std::vector<std::vector<double>> bias_m, bias_v;
    std::size_t step = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    explicit AdamState(const MlpModel& model) {
        for (const Matrix& w : model.weights) {
            weight_m.emplace_back(w.rows(), w.cols());
            weight_v.emplace_back(w.rows(), w.cols());
        }
        for (const auto& b : model.biases) {
            bias_m.emplace_back(b.size(), 0.0);
            bias_v.emplace_back(b.size(), 0.0);
        }
    }
};

namespace detail {

inline void adam_update_array(double* param, const double* grad, double* m, double* v,
                              std::size_t count, const AdamState& state, double lr,
                              double weight_decay, double bias_correction1,
                              double bias_correction2) {
    for (std::size_t i = 0; i < count; ++i) {
        param[i] *= 1.0 - lr * weight_decay;  // decoupled decay before the Adam delta
        m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * grad[i];
        v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * grad[i] * grad[i];
        const double m_hat = m[i] / bias_correction1;
        const double v_hat = v[i] / bias_correction2;
        param[i] -= lr * m_hat / (std::sqrt(v_hat) + state.epsilon);
    }
}

} // namespace detail

/// One bias-corrected Adam step with decoupled weight decay, applied in
/// place to every parameter tensor.
inline void adam_step(MlpModel& model, const Gradients& grads, AdamState& state, double lr,
                      double weight_decay) {
    if (grads.weights.size() != model.weights.size())
        throw InvalidInput("adam_step: gradient layer count mismatch");
    ++state.step;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
    for (std::size_t l = 0; l < model.weights.size(); ++l) {
        if (grads.weights[l].rows() != model.weights[l].rows() ||
            grads.weights[l].cols() != model.weights[l].cols())
            throw InvalidInput("adam_step: gradient shape mismatch");
        detail::adam_update_array(model.weights[l].data().data(),
                                  grads.weights[l].data().data(),
                                  state.weight_m[l].data().data(),
                                  state.weight_v[l].data().data(),
                                  model.weights[l].data().size(), state, lr, weight_decay,
                                  bc1, bc2);
        detail::adam_update_array(model.biases[l].data(), grads.biases[l].data(),
                                  state.bias_m[l].data(), state.bias_v[l].data(),
                                  model.biases[l].size(), state, lr, weight_decay, bc1, bc2);
    }
}

struct Inference {
    std::vector<int> labels;
    Matrix memberships;  ///< n x k
};

/// Pure feed-forward inference: no graph, no k-means. Hard labels are the
/// row argmax, ties to the lowest index.
inline Inference infer(const MlpModel& model, const Matrix& points) {
    if (points.cols() != model.input_dim())
        throw InvalidInput("infer: input dimension mismatch");
    Inference out;
    out.memberships = forward(model, points).output;
    out.labels.resize(points.rows());
    for (std::size_t i = 0; i < points.rows(); ++i) {
        const double* yi = out.memberships.row(i);
        std::size_t best = 0;
        for (std::size_t l = 1; l < out.memberships.cols(); ++l)
            if (yi[l] > yi[best]) best = l;
        out.labels[i] = static_cast<int>(best);
    }
    return out;
}

inline Inference infer(const MlpModel& model, const DataMatrix& data) {
    return infer(model, data.points);
}

struct TrainResult {
    MlpModel model;
    TrainLog log;
};

namespace detail {

inline void validate_config(const TrainConfig& cfg, const DataMatrix& data) {
    if (cfg.clusters < 2) throw InvalidConfig("train: need at least 2 clusters");
    if (cfg.batch_size < 2) throw InvalidConfig("train: batch size must be >= 2");
    if (cfg.batch_size > data.size())
        throw InvalidConfig("train: batch size exceeds dataset size");
    if (!(cfg.gamma > 0.0)) throw InvalidConfig("train: gamma must be positive");
    if (!(cfg.lr0 > 0.0)) throw InvalidConfig("train: learning rate must be positive");
    if (cfg.weight_decay < 0.0) throw InvalidConfig("train: weight decay must be >= 0");
    if (cfg.epochs == 0) throw InvalidConfig("train: need at least one epoch");
    if (!(cfg.sigma > 0.0)) throw InvalidConfig("train: sigma must be positive");
    if (cfg.knn_s != 0 && cfg.knn_s >= cfg.batch_size)
        throw InvalidConfig("train: knn_s must be smaller than the batch size");
    if (!data.points.all_finite()) throw InvalidData("train: data contains non-finite values");
}

} // namespace detail

/// Run the full training loop. Deterministic for fixed (data, config). On a
/// numerical failure the loop stops and the model checkpointed at the last
/// completed epoch is returned, with the abort recorded in the log.
inline TrainResult train(const DataMatrix& data, const TrainConfig& cfg) {
    detail::validate_config(cfg, data);

    std::vector<std::size_t> dims;
    dims.push_back(data.dim());
    dims.insert(dims.end(), cfg.hidden_dims.begin(), cfg.hidden_dims.end());
    dims.push_back(cfg.clusters);

    TrainResult result;
    result.model = init(dims, cfg.seed);
    AdamState adam(result.model);
    BatchSampler sampler(data.size(), cfg.batch_size, cfg.seed + 1);

    const std::size_t total_iters = cfg.epochs * sampler.batches_per_epoch();
    const ModelMeta meta{cfg.objective, cfg.clusters, cfg.sigma,
                         cfg.knn_s ? std::optional<std::size_t>(cfg.knn_s) : std::nullopt};

    MlpModel checkpoint = result.model;
    std::size_t iter = 0;

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        sampler.begin_epoch();
        while (!sampler.epoch_exhausted()) {
            Batch batch = next_batch(sampler, data);
            if (batch.indices.size() < 2) {
                ++iter;  // a trailing singleton has no pairwise structure
                continue;
            }
            try {
                AffinityGraph graph = heat_kernel_affinity(batch.points, cfg.sigma);
                if (cfg.knn_s != 0) graph = sparsify_knn(graph, cfg.knn_s);

                ForwardTape tape = forward(result.model, batch.points);

                LossBreakdown breakdown;
                Matrix dloss_dy;
                if (cfg.objective == Objective::ncut) {
                    const VolumeEstimate vol = estimate_volumes(tape.output, graph.degrees);
                    breakdown = neuncut_loss(tape.output, graph, vol, cfg.gamma);
                    dloss_dy = neuncut_loss_grad(tape.output, graph, vol, cfg.gamma);
                } else {
                    const SizeEstimate sizes = estimate_sizes(tape.output);
                    breakdown = neurcut_loss(tape.output, graph, sizes, cfg.gamma);
                    dloss_dy = neurcut_loss_grad(tape.output, graph, sizes, cfg.gamma);
                }

                Gradients grads = backward(result.model, tape, dloss_dy);

                const double lr = 0.5 * cfg.lr0 *
                                  (1.0 + std::cos(detail::kPi * static_cast<double>(iter) /
                                                  static_cast<double>(total_iters)));
                adam_step(result.model, grads, adam, lr, cfg.weight_decay);

                IterationRecord record;
                record.iter = iter;
                record.lap = breakdown.lap;
                record.orth = breakdown.orth;
                record.total = breakdown.total;
                record.lr = lr;
                result.log.records.push_back(record);
            } catch (const NumericalError& e) {
                result.model = checkpoint;
                result.log.aborted = true;
                result.log.abort_reason = e.what();
                return result;
            }
            ++iter;
        }

        if (cfg.track_metrics && data.labels && !result.log.records.empty()) {
            const Inference inference = infer(result.model, data);
            IterationRecord& record = result.log.records.back();
            record.acc = accuracy(inference.labels, *data.labels);
            record.nmi = nmi(inference.labels, *data.labels);
            record.ari = ari(inference.labels, *data.labels);
            result.log.has_metrics = true;
        }

        checkpoint = result.model;
        if (!cfg.checkpoint_path.empty()) save_model(result.model, meta, cfg.checkpoint_path);
    }
    return result;
}

/// Serialize a training log as CSV: iter,lap,orth,total,lr and, when metrics
/// were tracked, acc,nmi,ari columns filled on epoch-final rows.
inline std::string train_log_to_csv(const TrainLog& log) {
    std::string out = "iter,lap,orth,total,lr";
    if (log.has_metrics) out += ",acc,nmi,ari";
    out += '\n';
    for (const IterationRecord& r : log.records) {
        out += std::to_string(r.iter);
        out += ',';
        out += detail::format_double(r.lap);
        out += ',';
        out += detail::format_double(r.orth);
        out += ',';
        out += detail::format_double(r.total);
        out += ',';
        out += detail::format_double(r.lr);
        if (log.has_metrics) {
            for (double v : {r.acc, r.nmi, r.ari}) {
                out += ',';
                if (!std::isnan(v)) out += detail::format_double(v);
            }
        }
        out += '\n';
    }
    return out;
}

} // namespace neuncut
