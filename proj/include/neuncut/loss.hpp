#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "neuncut/error.hpp"
#include "neuncut/graph.hpp"
#include "neuncut/matrix.hpp"
#include "neuncut/model_io.hpp"

// The relaxed normalized-cut training loss and its ratio-cut variant.
//
// With Y the row-stochastic membership matrix of a batch and Lambda the
// diagonal of square-rooted cluster volumes, let B = Y * Lambda^{-1}. The
// loss is
//
//     total = trace(B^T L B) + (gamma/2) * ||B^T D B - I||_F^2
//
// for the normalized cut, and the same trace with ||B^T B - I||_F^2 and
// size-based scaling for the ratio cut. Volumes (and sizes) are estimated
// from the current memberships and held constant through the gradient: the
// estimation is the E-step of the training procedure, the parameter update
// the M-step, so the gradient deliberately does not flow through them.

namespace neuncut {

/// Degree-weighted soft cluster volumes and the diagonal of Lambda^{-1}.
struct VolumeEstimate {
    std::vector<double> volumes;          ///< vol[l] = sum_i Y(i,l) * degree(i), floored
    std::vector<double> lambda_inv_diag;  ///< volumes^{-1/2}
};

/// Soft cluster sizes for the ratio-cut variant.
struct SizeEstimate {
    std::vector<double> sizes;             ///< size[l] = sum_i Y(i,l), floored
    std::vector<double> upsilon_inv_diag;  ///< sizes^{-1/2}
};

struct LossBreakdown {
    double lap = 0.0;    ///< trace term; >= 0 up to roundoff since L is PSD
    double orth = 0.0;   ///< squared Frobenius distance of the gram matrix from I
    double total = 0.0;  ///< lap + (gamma/2) * orth
    double gamma = 0.0;
};

/// vol[l] = sum_i Y(i,l) * degrees[i], floored at 1e-8 times the total degree
/// mass so a cluster whose soft mass vanishes cannot blow up the inverse.
inline VolumeEstimate estimate_volumes(const Matrix& memberships,
                                       const std::vector<double>& degrees) {
    if (memberships.rows() != degrees.size())
        throw InvalidInput("estimate_volumes: row count does not match degrees");
    const std::size_t k = memberships.cols();
    double total_degree = 0.0;
    for (double d : degrees) total_degree += d;
    const double floor = 1e-8 * total_degree;

    VolumeEstimate est;
    est.volumes.assign(k, 0.0);
    for (std::size_t i = 0; i < memberships.rows(); ++i) {
        const double* yi = memberships.row(i);
        for (std::size_t l = 0; l < k; ++l) est.volumes[l] += yi[l] * degrees[i];
    }
    est.lambda_inv_diag.resize(k);
    for (std::size_t l = 0; l < k; ++l) {
        est.volumes[l] = std::max(est.volumes[l], floor);
        est.lambda_inv_diag[l] = 1.0 / std::sqrt(est.volumes[l]);
    }
    return est;
}

/// size[l] = sum_i Y(i,l), same epsilon-floor relative to total row mass.
inline SizeEstimate estimate_sizes(const Matrix& memberships) {
    const std::size_t k = memberships.cols();
    const double floor = 1e-8 * static_cast<double>(memberships.rows());

    SizeEstimate est;
    est.sizes.assign(k, 0.0);
    for (std::size_t i = 0; i < memberships.rows(); ++i) {
        const double* yi = memberships.row(i);
        for (std::size_t l = 0; l < k; ++l) est.sizes[l] += yi[l];
    }
    est.upsilon_inv_diag.resize(k);
    for (std::size_t l = 0; l < k; ++l) {
        est.sizes[l] = std::max(est.sizes[l], floor);
        est.upsilon_inv_diag[l] = 1.0 / std::sqrt(est.sizes[l]);
    }
    return est;
}

namespace detail {

inline Matrix scale_columns(const Matrix& m, const std::vector<double>& factors) {
    Matrix out = m;
    for (std::size_t i = 0; i < out.rows(); ++i) {
        double* row = out.row(i);
        for (std::size_t j = 0; j < out.cols(); ++j) row[j] *= factors[j];
    }
    return out;
}

inline Matrix scale_rows(const Matrix& m, const std::vector<double>& factors) {
    Matrix out = m;
    for (std::size_t i = 0; i < out.rows(); ++i) {
        double* row = out.row(i);
        for (std::size_t j = 0; j < out.cols(); ++j) row[j] *= factors[i];
    }
    return out;
}

/// L * B computed as D*B - A*B without forming L.
inline Matrix laplacian_times(const AffinityGraph& g, const Matrix& b) {
    Matrix lb = multiply(g.affinity, b);
    for (std::size_t i = 0; i < lb.rows(); ++i) {
        const double* bi = b.row(i);
        double* li = lb.row(i);
        for (std::size_t j = 0; j < lb.cols(); ++j) li[j] = g.degrees[i] * bi[j] - li[j];
    }
    return lb;
}

struct LossParts {
    Matrix scaled;    // B
    Matrix lap_times; // L*B
    Matrix gram;      // B^T D B (ncut) or B^T B (rcut), minus I
    LossBreakdown breakdown;
};

inline LossParts evaluate(const Matrix& memberships, const AffinityGraph& g,
                          const std::vector<double>& inv_scale, double gamma,
                          bool degree_weighted_penalty) {
    if (memberships.rows() != g.size())
        throw InvalidInput("loss: membership rows do not match graph size");
    if (memberships.cols() != inv_scale.size())
        throw InvalidInput("loss: membership columns do not match scale estimate");

    LossParts parts;
    parts.scaled = scale_columns(memberships, inv_scale);
    parts.lap_times = laplacian_times(g, parts.scaled);

    double lap = 0.0;
    for (std::size_t idx = 0; idx < parts.scaled.data().size(); ++idx)
        lap += parts.scaled.data()[idx] * parts.lap_times.data()[idx];

    const Matrix weighted =
        degree_weighted_penalty ? scale_rows(parts.scaled, g.degrees) : parts.scaled;
    parts.gram = multiply_transpose_a(parts.scaled, weighted);
    for (std::size_t l = 0; l < parts.gram.rows(); ++l) parts.gram(l, l) -= 1.0;

    parts.breakdown.lap = lap;
    parts.breakdown.orth = frobenius_norm_sq(parts.gram);
    parts.breakdown.gamma = gamma;
    parts.breakdown.total = lap + 0.5 * gamma * parts.breakdown.orth;
    if (!std::isfinite(parts.breakdown.total))
        throw NumericalError("loss: non-finite value");
    return parts;
}

/// dtotal/dB = 2 L B + 2 gamma W B (B^T W B - I) with W = D or W = I, then
/// chain-ruled through the constant column scaling back to Y.
inline Matrix grad_from_parts(const LossParts& parts, const AffinityGraph& g,
                              const std::vector<double>& inv_scale, double gamma,
                              bool degree_weighted_penalty) {
    const Matrix weighted =
        degree_weighted_penalty ? scale_rows(parts.scaled, g.degrees) : parts.scaled;
    Matrix penalty = multiply(weighted, parts.gram);
    Matrix grad(parts.scaled.rows(), parts.scaled.cols());
    for (std::size_t idx = 0; idx < grad.data().size(); ++idx)
        grad.data()[idx] =
            2.0 * parts.lap_times.data()[idx] + 2.0 * gamma * penalty.data()[idx];
    return scale_columns(grad, inv_scale);
}

} // namespace detail

/// Normalized-cut loss of a batch: trace term plus degree-weighted
/// orthogonality penalty. Lambda comes from `vol` and is treated as constant.
inline LossBreakdown neuncut_loss(const Matrix& memberships, const AffinityGraph& g,
                                  const VolumeEstimate& vol, double gamma) {
    return detail::evaluate(memberships, g, vol.lambda_inv_diag, gamma, true).breakdown;
}

/// Closed-form dtotal/dY for the normalized-cut loss.
inline Matrix neuncut_loss_grad(const Matrix& memberships, const AffinityGraph& g,
                                const VolumeEstimate& vol, double gamma) {
    detail::LossParts parts =
        detail::evaluate(memberships, g, vol.lambda_inv_diag, gamma, true);
    return detail::grad_from_parts(parts, g, vol.lambda_inv_diag, gamma, true);
}

/// Ratio-cut loss: same trace term, size-based scaling, unweighted identity
/// penalty ||B^T B - I||_F^2.
inline LossBreakdown neurcut_loss(const Matrix& memberships, const AffinityGraph& g,
                                  const SizeEstimate& sizes, double gamma) {
    return detail::evaluate(memberships, g, sizes.upsilon_inv_diag, gamma, false).breakdown;
}

inline Matrix neurcut_loss_grad(const Matrix& memberships, const AffinityGraph& g,
                                const SizeEstimate& sizes, double gamma) {
    detail::LossParts parts =
        detail::evaluate(memberships, g, sizes.upsilon_inv_diag, gamma, false);
    return detail::grad_from_parts(parts, g, sizes.upsilon_inv_diag, gamma, false);
}

/// Dispatch on the configured objective.
inline LossBreakdown objective_loss(Objective obj, const Matrix& memberships,
                                    const AffinityGraph& g, double gamma) {
    if (obj == Objective::ncut)
        return neuncut_loss(memberships, g, estimate_volumes(memberships, g.degrees), gamma);
    return neurcut_loss(memberships, g, estimate_sizes(memberships), gamma);
}

} // namespace neuncut
