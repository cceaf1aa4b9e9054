#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstddef>
#include <limits>
#include <numeric>
#include <vector>

#include "neuncut/error.hpp"
#include "neuncut/graph.hpp"
#include "neuncut/matrix.hpp"
#include "neuncut/rng.hpp"

// Classical spectral clustering: the bottom-k eigenvectors of the normalized
// graph Laplacian followed by k-means on the row-normalized embedding. This
// is the comparison oracle for the learned path, not the scalable one, so the
// eigensolver is a plain dense Householder tridiagonalization followed by
// implicit-shift QL; input sizes are capped accordingly.

namespace neuncut {

struct SpectralEmbedding {
    Matrix vectors;                   ///< n x k, orthonormal columns
    std::vector<double> eigenvalues;  ///< ascending, length k
};

namespace detail {

inline double pythag(double a, double b) { return std::hypot(a, b); }

/// Householder reduction of a symmetric matrix to tridiagonal form.
/// On exit `z` holds the accumulated orthogonal transform, `diag` the
/// diagonal and `off` the subdiagonal (off[0] unused).
inline void tridiagonalize(Matrix& z, std::vector<double>& diag, std::vector<double>& off) {
    const std::size_t n = z.rows();
    diag.assign(n, 0.0);
    off.assign(n, 0.0);

    for (std::size_t ii = n - 1; ii >= 1; --ii) {
        const std::size_t i = ii;
        const std::size_t l = i - 1;
        double h = 0.0;
        double scale = 0.0;
        if (l > 0) {
            for (std::size_t k = 0; k <= l; ++k) scale += std::fabs(z(i, k));
            if (scale == 0.0) {
                off[i] = z(i, l);
            } else {
                for (std::size_t k = 0; k <= l; ++k) {
                    z(i, k) /= scale;
                    h += z(i, k) * z(i, k);
                }
                double f = z(i, l);
                double g = (f >= 0.0) ? -std::sqrt(h) : std::sqrt(h);
                off[i] = scale * g;
                h -= f * g;
                z(i, l) = f - g;
                f = 0.0;
                for (std::size_t j = 0; j <= l; ++j) {
                    z(j, i) = z(i, j) / h;
                    g = 0.0;
                    for (std::size_t k = 0; k <= j; ++k) g += z(j, k) * z(i, k);
                    for (std::size_t k = j + 1; k <= l; ++k) g += z(k, j) * z(i, k);
                    off[j] = g / h;
                    f += off[j] * z(i, j);
                }
                const double hh = f / (h + h);
                for (std::size_t j = 0; j <= l; ++j) {
                    f = z(i, j);
                    off[j] = g = off[j] - hh * f;
                    for (std::size_t k = 0; k <= j; ++k)
                        z(j, k) -= f * off[k] + g * z(i, k);
                }
            }
        } else {
            off[i] = z(i, l);
        }
        diag[i] = h;
    }
    diag[0] = 0.0;
    off[0] = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (diag[i] != 0.0) {
            for (std::size_t j = 0; j < i; ++j) {
                double g = 0.0;
                for (std::size_t k = 0; k < i; ++k) g += z(i, k) * z(k, j);
                for (std::size_t k = 0; k < i; ++k) z(k, j) -= g * z(k, i);
            }
        }
        diag[i] = z(i, i);
        z(i, i) = 1.0;
        for (std::size_t j = 0; j < i; ++j) z(j, i) = z(i, j) = 0.0;
    }
}

/// Implicit-shift QL iteration on a tridiagonal matrix, rotations applied to
/// the eigenvector accumulator. Eigenvalues land in `diag`.
inline void ql_implicit_shift(std::vector<double>& diag, std::vector<double>& off, Matrix& z) {
    const std::size_t n = diag.size();
    const double eps = std::numeric_limits<double>::epsilon();
    for (std::size_t i = 1; i < n; ++i) off[i - 1] = off[i];
    off[n - 1] = 0.0;

    for (std::size_t l = 0; l < n; ++l) {
        int iterations = 0;
        std::size_t m;
        do {
            for (m = l; m + 1 < n; ++m) {
                const double dd = std::fabs(diag[m]) + std::fabs(diag[m + 1]);
                if (std::fabs(off[m]) <= eps * dd) break;
            }
            if (m != l) {
                if (iterations++ == 50)
                    throw NumericalError("eigensolver: QL iteration did not converge");
                double g = (diag[l + 1] - diag[l]) / (2.0 * off[l]);
                double r = pythag(g, 1.0);
                g = diag[m] - diag[l] + off[l] / (g + (g >= 0.0 ? std::fabs(r) : -std::fabs(r)));
                double s = 1.0, c = 1.0, p = 0.0;
                std::ptrdiff_t i;
                for (i = static_cast<std::ptrdiff_t>(m) - 1;
                     i >= static_cast<std::ptrdiff_t>(l); --i) {
                    double f = s * off[i];
                    const double b = c * off[i];
                    r = pythag(f, g);
                    off[i + 1] = r;
                    if (r == 0.0) {
                        diag[i + 1] -= p;
                        off[m] = 0.0;
                        break;
                    }
                    s = f / r;
                    c = g / r;
                    g = diag[i + 1] - p;
                    r = (diag[i] - g) * s + 2.0 * c * b;
                    p = s * r;
                    diag[i + 1] = g + p;
                    g = c * r - b;
                    for (std::size_t k = 0; k < n; ++k) {
                        f = z(k, static_cast<std::size_t>(i + 1));
                        z(k, static_cast<std::size_t>(i + 1)) =
                            s * z(k, static_cast<std::size_t>(i)) + c * f;
                        z(k, static_cast<std::size_t>(i)) =
                            c * z(k, static_cast<std::size_t>(i)) - s * f;
                    }
                }
                if (r == 0.0 && i >= static_cast<std::ptrdiff_t>(l)) continue;
                diag[l] -= p;
                off[l] = g;
                off[m] = 0.0;
            }
        } while (m != l);
    }
}

} // namespace detail

/// Eigenpairs for the k smallest eigenvalues of a symmetric matrix. Each
/// eigenvector's sign is fixed so its largest-magnitude entry is positive.
inline SpectralEmbedding bottom_k_eigs(const Matrix& symmetric, std::size_t k) {
    const std::size_t n = symmetric.rows();
    if (n == 0 || symmetric.cols() != n)
        throw InvalidInput("bottom_k_eigs: matrix must be square and non-empty");
    if (k == 0 || k > n) throw InvalidInput("bottom_k_eigs: need 1 <= k <= n");
    if (!symmetric.all_finite())
        throw InvalidInput("bottom_k_eigs: matrix contains non-finite values");

    double max_abs = 0.0;
    for (double v : symmetric.data()) max_abs = std::max(max_abs, std::fabs(v));
    const double sym_tol = 1e-10 * std::max(1.0, max_abs);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (std::fabs(symmetric(i, j) - symmetric(j, i)) > sym_tol)
                throw InvalidInput("bottom_k_eigs: matrix is not symmetric");

    Matrix z = symmetric;
    std::vector<double> diag, off;
    if (n == 1) {
        diag = {symmetric(0, 0)};
        z = Matrix::identity(1);
    } else {
        detail::tridiagonalize(z, diag, off);
        detail::ql_implicit_shift(diag, off, z);
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return diag[a] < diag[b]; });

    SpectralEmbedding embedding;
    embedding.vectors = Matrix(n, k);
    embedding.eigenvalues.resize(k);
    for (std::size_t c = 0; c < k; ++c) {
        const std::size_t src = order[c];
        embedding.eigenvalues[c] = diag[src];
        std::size_t peak = 0;
        for (std::size_t r = 1; r < n; ++r)
            if (std::fabs(z(r, src)) > std::fabs(z(peak, src))) peak = r;
        const double sign = z(peak, src) < 0.0 ? -1.0 : 1.0;
        for (std::size_t r = 0; r < n; ++r) embedding.vectors(r, c) = sign * z(r, src);
    }
    return embedding;
}

/// Lloyd's algorithm with k-means++ seeding, best of `restarts` runs by
/// within-cluster sum of squares. An emptied cluster is reseeded to the point
/// farthest from its assigned centroid.
inline std::vector<int> kmeans(const Matrix& points, std::size_t k, std::uint64_t seed,
                               std::size_t restarts = 10) {
    const std::size_t n = points.rows();
    const std::size_t dim = points.cols();
    if (k == 0 || n < k) throw InvalidInput("kmeans: need k >= 1 and n >= k");
    if (restarts == 0) throw InvalidConfig("kmeans: need at least one restart");

    Rng rng(seed);
    std::vector<int> best_labels(n, 0);
    double best_wcss = std::numeric_limits<double>::infinity();

    const auto dist_sq = [&](const double* a, const double* b) {
        double acc = 0.0;
        for (std::size_t c = 0; c < dim; ++c) {
            const double diff = a[c] - b[c];
            acc += diff * diff;
        }
        return acc;
    };

    for (std::size_t restart = 0; restart < restarts; ++restart) {
        // k-means++ seeding
        Matrix centers(k, dim);
        std::vector<double> min_dist(n, std::numeric_limits<double>::infinity());
        std::size_t first = rng.uniform_index(n);
        for (std::size_t c = 0; c < dim; ++c) centers(0, c) = points(first, c);
        for (std::size_t center = 1; center < k; ++center) {
            double total = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                min_dist[i] = std::min(min_dist[i],
                                       dist_sq(points.row(i), centers.row(center - 1)));
                total += min_dist[i];
            }
            std::size_t chosen;
            if (total > 0.0) {
                const double target = rng.uniform() * total;
                double cumulative = 0.0;
                chosen = n - 1;
                for (std::size_t i = 0; i < n; ++i) {
                    cumulative += min_dist[i];
                    if (cumulative >= target) {
                        chosen = i;
                        break;
                    }
                }
            } else {
                chosen = rng.uniform_index(n);
            }
            for (std::size_t c = 0; c < dim; ++c) centers(center, c) = points(chosen, c);
        }

        std::vector<int> labels(n, -1);
        std::vector<std::size_t> cluster_sizes(k, 0);
        for (int sweep = 0; sweep < 200; ++sweep) {
            bool changed = false;
            for (std::size_t i = 0; i < n; ++i) {
                std::size_t best = 0;
                double best_d = dist_sq(points.row(i), centers.row(0));
                for (std::size_t c = 1; c < k; ++c) {
                    const double d = dist_sq(points.row(i), centers.row(c));
                    if (d < best_d) {
                        best_d = d;
                        best = c;
                    }
                }
                if (labels[i] != static_cast<int>(best)) {
                    labels[i] = static_cast<int>(best);
                    changed = true;
                }
            }
            if (!changed && sweep > 0) break;

            centers = Matrix(k, dim);
            cluster_sizes.assign(k, 0);
            for (std::size_t i = 0; i < n; ++i) {
                const std::size_t c = static_cast<std::size_t>(labels[i]);
                ++cluster_sizes[c];
                for (std::size_t col = 0; col < dim; ++col) centers(c, col) += points(i, col);
            }
            for (std::size_t c = 0; c < k; ++c)
                if (cluster_sizes[c] > 0)
                    for (std::size_t col = 0; col < dim; ++col)
                        centers(c, col) /= static_cast<double>(cluster_sizes[c]);
            for (std::size_t c = 0; c < k; ++c) {
                if (cluster_sizes[c] != 0) continue;
                // reseed an emptied cluster to the point farthest from its centroid
                std::size_t farthest = 0;
                double far_d = -1.0;
                for (std::size_t i = 0; i < n; ++i) {
                    const std::size_t ci = static_cast<std::size_t>(labels[i]);
                    if (cluster_sizes[ci] == 0) continue;
                    const double d = dist_sq(points.row(i), centers.row(ci));
                    if (d > far_d) {
                        far_d = d;
                        farthest = i;
                    }
                }
                for (std::size_t col = 0; col < dim; ++col)
                    centers(c, col) = points(farthest, col);
            }
        }

        double wcss = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            wcss += dist_sq(points.row(i), centers.row(static_cast<std::size_t>(labels[i])));
        if (wcss < best_wcss) {
            best_wcss = wcss;
            best_labels = labels;
        }
    }
    return best_labels;
}

inline constexpr std::size_t kDefaultBaselineCap = 5000;

/// Full classical pipeline on a prebuilt affinity graph: normalized
/// Laplacian, bottom-k eigenvectors, l2 row normalization, k-means.
inline std::vector<int> ncut_baseline(const AffinityGraph& graph, std::size_t k,
                                      std::uint64_t seed, std::size_t restarts = 10,
                                      std::size_t max_n = kDefaultBaselineCap) {
    if (graph.size() > max_n)
        throw InvalidInput("ncut_baseline: dataset exceeds the dense eigensolver cap of " +
                           std::to_string(max_n) + " points");
    const Matrix normalized = laplacian(graph).normalized();
    SpectralEmbedding embedding = bottom_k_eigs(normalized, k);

    Matrix rows = embedding.vectors;
    for (std::size_t i = 0; i < rows.rows(); ++i) {
        double norm = 0.0;
        for (std::size_t c = 0; c < rows.cols(); ++c) norm += rows(i, c) * rows(i, c);
        norm = std::sqrt(norm);
        if (norm > 0.0)
            for (std::size_t c = 0; c < rows.cols(); ++c) rows(i, c) /= norm;
    }
    return kmeans(rows, k, seed, restarts);
}

/// Same pipeline starting from raw points via the heat kernel, with optional
/// kNN row sparsification.
inline std::vector<int> ncut_baseline(const Matrix& points, std::size_t k, double sigma,
                                      std::size_t knn_s, std::uint64_t seed,
                                      std::size_t restarts = 10,
                                      std::size_t max_n = kDefaultBaselineCap) {
    if (points.rows() > max_n)
        throw InvalidInput("ncut_baseline: dataset exceeds the dense eigensolver cap of " +
                           std::to_string(max_n) + " points");
    AffinityGraph graph = heat_kernel_affinity(points, sigma);
    if (knn_s != 0) graph = sparsify_knn(graph, knn_s);
    return ncut_baseline(graph, k, seed, restarts, max_n);
}

} // namespace neuncut
