#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

#include "neuncut/error.hpp"
#include "neuncut/matrix.hpp"

// Affinity graphs and Laplacians for (mini-)batches of points. Affinities are
// symmetric, nonnegative, zero on the diagonal; degrees are row sums. Dense
// storage throughout: sparsity is a property of the values, not the layout.

namespace neuncut {

/// Symmetric nonnegative affinity matrix with cached vertex degrees.
struct AffinityGraph {
    Matrix affinity;              ///< n x n, a_ij >= 0, a_ii = 0, exactly symmetric
    std::vector<double> degrees;  ///< degrees[i] = sum_j a_ij

    std::size_t size() const { return degrees.size(); }
};

/// Unnormalized graph Laplacian L = D - A. The symmetric degree-normalized
/// form is built on demand; degrees are floored before inversion so isolated
/// vertices cannot divide by zero.
struct Laplacian {
    Matrix unnormalized;
    std::vector<double> degrees;

    /// D^{-1/2} (D - A) D^{-1/2} with epsilon-floored degrees.
    Matrix normalized() const {
        const std::size_t n = degrees.size();
        double mean = 0.0;
        for (double d : degrees) mean += d;
        mean /= static_cast<double>(n == 0 ? 1 : n);
        const double floor = std::max(1e-12 * mean, 1e-300);
        std::vector<double> inv_sqrt(n);
        for (std::size_t i = 0; i < n; ++i)
            inv_sqrt[i] = 1.0 / std::sqrt(std::max(degrees[i], floor));
        Matrix out(n, n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                out(i, j) = inv_sqrt[i] * unnormalized(i, j) * inv_sqrt[j];
        return out;
    }
};

namespace detail {

inline std::vector<double> row_sums(const Matrix& m) {
    std::vector<double> sums(m.rows(), 0.0);
    for (std::size_t i = 0; i < m.rows(); ++i) {
        const double* r = m.row(i);
        double acc = 0.0;
        for (std::size_t j = 0; j < m.cols(); ++j) acc += r[j];
        sums[i] = acc;
    }
    return sums;
}

} // namespace detail

/// Pairwise heat-kernel affinities a_ij = exp(-||x_i - x_j||^2 / (2 sigma^2))
/// for i != j; the diagonal is zeroed so self-loops cannot flatten the
/// degree-weighted penalty terms downstream.
inline AffinityGraph heat_kernel_affinity(const Matrix& points, double sigma) {
    if (sigma <= 0.0 || !std::isfinite(sigma))
        throw InvalidConfig("heat_kernel_affinity: sigma must be positive");
    if (points.rows() < 2)
        throw InvalidInput("heat_kernel_affinity: need at least 2 points");
    if (!points.all_finite())
        throw InvalidData("heat_kernel_affinity: input contains non-finite values");

    const std::size_t n = points.rows();
    const std::size_t d = points.cols();
    const double inv_two_sigma_sq = 1.0 / (2.0 * sigma * sigma);

    AffinityGraph g;
    g.affinity = Matrix(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        const double* xi = points.row(i);
        for (std::size_t j = i + 1; j < n; ++j) {
            const double* xj = points.row(j);
            double dist_sq = 0.0;
            for (std::size_t c = 0; c < d; ++c) {
                const double diff = xi[c] - xj[c];
                dist_sq += diff * diff;
            }
            const double a = std::exp(-dist_sq * inv_two_sigma_sq);
            g.affinity(i, j) = a;
            g.affinity(j, i) = a;
        }
    }
    g.degrees = detail::row_sums(g.affinity);
    return g;
}

/// Keep the s largest off-diagonal entries of each row (ties at the cutoff go
/// to the lowest column index), then symmetrize by averaging with the
/// transpose and recompute degrees.
inline AffinityGraph sparsify_knn(const AffinityGraph& g, std::size_t s) {
    const std::size_t n = g.size();
    if (s == 0 || s >= n)
        throw InvalidConfig("sparsify_knn: s must satisfy 1 <= s < n");

    Matrix kept(n, n);
    std::vector<std::pair<double, std::size_t>> entries;
    entries.reserve(n - 1);
    for (std::size_t i = 0; i < n; ++i) {
        entries.clear();
        for (std::size_t j = 0; j < n; ++j)
            if (j != i) entries.emplace_back(g.affinity(i, j), j);
        std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
            if (a.first != b.first) return a.first > b.first;
            return a.second < b.second;
        });
        for (std::size_t r = 0; r < s; ++r) kept(i, entries[r].second) = entries[r].first;
    }

    AffinityGraph out;
    out.affinity = Matrix(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            const double a = 0.5 * (kept(i, j) + kept(j, i));
            out.affinity(i, j) = a;
            out.affinity(j, i) = a;
        }
    out.degrees = detail::row_sums(out.affinity);
    return out;
}

/// L = D - A.
inline Laplacian laplacian(const AffinityGraph& g) {
    const std::size_t n = g.size();
    Laplacian lap;
    lap.degrees = g.degrees;
    lap.unnormalized = Matrix(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) lap.unnormalized(i, j) = -g.affinity(i, j);
        lap.unnormalized(i, i) = g.degrees[i];
    }
    return lap;
}

} // namespace neuncut
