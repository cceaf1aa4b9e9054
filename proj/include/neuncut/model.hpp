#pragma once

#include <cmath>
#include <cstdint>
#include <cstddef>
#include <vector>

#include "neuncut/error.hpp"
#include "neuncut/matrix.hpp"
#include "neuncut/rng.hpp"

// The membership network: an MLP with ReLU hidden layers and a softmax output
// row-normalizing each point's logits into a soft cluster assignment. Forward
// keeps a tape of pre-activations and activations; backward replays it to
// produce exact reverse-mode gradients of any scalar loss supplied as
// dLoss/dY.

namespace neuncut {

struct MlpModel {
    std::vector<std::size_t> layer_dims;  ///< [d, h_1, ..., h_L, k]
    std::vector<Matrix> weights;          ///< weights[l] has shape (dims[l] x dims[l+1])
    std::vector<std::vector<double>> biases;
    std::uint64_t seed = 0;

    std::size_t input_dim() const { return layer_dims.front(); }
    std::size_t output_dim() const { return layer_dims.back(); }
    std::size_t layer_count() const { return weights.size(); }
};

/// Per-batch forward record: pre-activations z_l and activations a_l for each
/// layer, plus the softmax output. Rows of `output` sum to 1.
struct ForwardTape {
    Matrix input;
    std::vector<Matrix> pre_activations;
    std::vector<Matrix> activations;  ///< activations[l] = relu(pre_activations[l]), hidden only
    Matrix output;                    ///< m x k row-stochastic memberships
};

/// Parameter-shaped gradient container.
struct Gradients {
    std::vector<Matrix> weights;
    std::vector<std::vector<double>> biases;
};

/// He-style initialization: zero-mean Gaussians with variance 2/fan_in for
/// weights, zero biases. Deterministic for a given seed.
inline MlpModel init(const std::vector<std::size_t>& layer_dims, std::uint64_t seed) {
    if (layer_dims.size() < 2)
        throw InvalidConfig("init: need at least input and output dimensions");
    for (std::size_t d : layer_dims)
        if (d == 0) throw InvalidConfig("init: layer dimensions must be >= 1");

    MlpModel model;
    model.layer_dims = layer_dims;
    model.seed = seed;
    Rng rng(seed);
    for (std::size_t l = 0; l + 1 < layer_dims.size(); ++l) {
        const std::size_t fan_in = layer_dims[l];
        const std::size_t fan_out = layer_dims[l + 1];
        const double stddev = std::sqrt(2.0 / static_cast<double>(fan_in));
        Matrix w(fan_in, fan_out);
        for (double& v : w.data()) v = stddev * rng.normal();
        model.weights.push_back(std::move(w));
        model.biases.emplace_back(fan_out, 0.0);
    }
    return model;
}

/// Forward pass over a batch. The softmax subtracts each row's maximum logit
/// first; memberships stay finite even as training sharpens them.
inline ForwardTape forward(const MlpModel& model, const Matrix& batch) {
    if (batch.cols() != model.input_dim())
        throw InvalidInput("forward: input dimension mismatch");

    ForwardTape tape;
    tape.input = batch;
    const Matrix* current = &tape.input;
    const std::size_t layers = model.layer_count();
    tape.pre_activations.reserve(layers);
    tape.activations.reserve(layers - 1);

    for (std::size_t l = 0; l < layers; ++l) {
        Matrix z = multiply(*current, model.weights[l]);
        for (std::size_t i = 0; i < z.rows(); ++i) {
            double* zi = z.row(i);
            for (std::size_t j = 0; j < z.cols(); ++j) zi[j] += model.biases[l][j];
        }
        if (!z.all_finite()) throw NumericalError("forward: non-finite activation");
        tape.pre_activations.push_back(std::move(z));
        if (l + 1 < layers) {
            Matrix a = tape.pre_activations.back();
            for (double& v : a.data())
                if (v < 0.0) v = 0.0;
            tape.activations.push_back(std::move(a));
            current = &tape.activations.back();
        }
    }

    const Matrix& logits = tape.pre_activations.back();
    tape.output = Matrix(logits.rows(), logits.cols());
    for (std::size_t i = 0; i < logits.rows(); ++i) {
        const double* zi = logits.row(i);
        double* yi = tape.output.row(i);
        double max_logit = zi[0];
        for (std::size_t j = 1; j < logits.cols(); ++j) max_logit = std::max(max_logit, zi[j]);
        double sum = 0.0;
        for (std::size_t j = 0; j < logits.cols(); ++j) {
            yi[j] = std::exp(zi[j] - max_logit);
            sum += yi[j];
        }
        for (std::size_t j = 0; j < logits.cols(); ++j) yi[j] /= sum;
    }
    if (!tape.output.all_finite()) throw NumericalError("forward: non-finite output");
    return tape;
}

/// Reverse pass: exact gradients of a scalar loss with respect to every
/// parameter, given dLoss/dY for the tape's batch. ReLU uses subgradient 0
/// at 0.
inline Gradients backward(const MlpModel& model, const ForwardTape& tape,
                          const Matrix& dloss_doutput) {
    if (dloss_doutput.rows() != tape.output.rows() ||
        dloss_doutput.cols() != tape.output.cols())
        throw InvalidInput("backward: cofactor shape does not match tape output");

    const std::size_t layers = model.layer_count();
    Gradients grads;
    grads.weights.resize(layers);
    grads.biases.resize(layers);

    // Softmax Jacobian applied rowwise: dz = y ⊙ (dy - <dy, y>).
    Matrix delta(tape.output.rows(), tape.output.cols());
    for (std::size_t i = 0; i < delta.rows(); ++i) {
        const double* yi = tape.output.row(i);
        const double* gi = dloss_doutput.row(i);
        double inner = 0.0;
        for (std::size_t j = 0; j < delta.cols(); ++j) inner += gi[j] * yi[j];
        double* di = delta.row(i);
        for (std::size_t j = 0; j < delta.cols(); ++j) di[j] = yi[j] * (gi[j] - inner);
    }

    for (std::size_t l = layers; l-- > 0;) {
        const Matrix& layer_input = (l == 0) ? tape.input : tape.activations[l - 1];
        grads.weights[l] = multiply_transpose_a(layer_input, delta);
        grads.biases[l].assign(model.layer_dims[l + 1], 0.0);
        for (std::size_t i = 0; i < delta.rows(); ++i) {
            const double* di = delta.row(i);
            for (std::size_t j = 0; j < delta.cols(); ++j) grads.biases[l][j] += di[j];
        }
        if (l == 0) break;
        Matrix upstream = multiply_transpose_b(delta, model.weights[l]);
        const Matrix& z = tape.pre_activations[l - 1];
        for (std::size_t idx = 0; idx < upstream.data().size(); ++idx)
            if (z.data()[idx] <= 0.0) upstream.data()[idx] = 0.0;
        delta = std::move(upstream);
    }
    return grads;
}

} // namespace neuncut
