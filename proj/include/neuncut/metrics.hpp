#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "neuncut/error.hpp"

// Clustering evaluation: accuracy under the optimal label bijection,
// normalized mutual information and adjusted Rand index. All three are
// invariant to relabeling either argument.

namespace neuncut {

/// Joint label counts: counts[p][t] = number of points with predicted label p
/// and true label t.
struct ContingencyTable {
    std::vector<std::vector<long long>> counts;
    std::size_t n = 0;

    std::size_t pred_clusters() const { return counts.size(); }
    std::size_t true_clusters() const { return counts.empty() ? 0 : counts[0].size(); }
};

inline ContingencyTable contingency_table(const std::vector<int>& pred,
                                          const std::vector<int>& truth) {
    if (pred.size() != truth.size())
        throw InvalidInput("metrics: label vectors have different lengths");
    if (pred.empty()) throw InvalidInput("metrics: empty label vectors");
    int max_pred = 0, max_true = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (pred[i] < 0 || truth[i] < 0) throw InvalidInput("metrics: labels must be >= 0");
        max_pred = std::max(max_pred, pred[i]);
        max_true = std::max(max_true, truth[i]);
    }
    ContingencyTable table;
    table.n = pred.size();
    table.counts.assign(static_cast<std::size_t>(max_pred) + 1,
                        std::vector<long long>(static_cast<std::size_t>(max_true) + 1, 0));
    for (std::size_t i = 0; i < pred.size(); ++i)
        ++table.counts[static_cast<std::size_t>(pred[i])][static_cast<std::size_t>(truth[i])];
    return table;
}

namespace detail {

/// Kuhn-Munkres on a square cost matrix (minimization); returns the column
/// matched to each row.
inline std::vector<std::size_t> hungarian(const std::vector<std::vector<double>>& cost) {
    const std::size_t n = cost.size();
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> row_pot(n + 1, 0.0), col_pot(n + 1, 0.0);
    std::vector<std::size_t> match(n + 1, 0);  // match[j] = row assigned to column j
    std::vector<std::size_t> path(n + 1, 0);

    for (std::size_t i = 1; i <= n; ++i) {
        match[0] = i;
        std::size_t j0 = 0;
        std::vector<double> min_slack(n + 1, inf);
        std::vector<bool> visited(n + 1, false);
        do {
            visited[j0] = true;
            const std::size_t i0 = match[j0];
            double delta = inf;
            std::size_t j1 = 0;
            for (std::size_t j = 1; j <= n; ++j) {
                if (visited[j]) continue;
                const double reduced = cost[i0 - 1][j - 1] - row_pot[i0] - col_pot[j];
                if (reduced < min_slack[j]) {
                    min_slack[j] = reduced;
                    path[j] = j0;
                }
                if (min_slack[j] < delta) {
                    delta = min_slack[j];
                    j1 = j;
                }
            }
            for (std::size_t j = 0; j <= n; ++j) {
                if (visited[j]) {
                    row_pot[match[j]] += delta;
                    col_pot[j] -= delta;
                } else {
                    min_slack[j] -= delta;
                }
            }
            j0 = j1;
        } while (match[j0] != 0);
        do {
            const std::size_t j1 = path[j0];
            match[j0] = match[j1];
            j0 = j1;
        } while (j0 != 0);
    }

    std::vector<std::size_t> row_to_col(n);
    for (std::size_t j = 1; j <= n; ++j)
        if (match[j] != 0) row_to_col[match[j] - 1] = j - 1;
    return row_to_col;
}

inline double entropy(const std::vector<long long>& counts, double n) {
    double h = 0.0;
    for (long long c : counts) {
        if (c == 0) continue;
        const double p = static_cast<double>(c) / n;
        h -= p * std::log(p);
    }
    return h;
}

inline double pairs_of_two(double c) { return 0.5 * c * (c - 1.0); }

} // namespace detail

/// Fraction of points matched under the best bijection between predicted and
/// true labels, solved exactly by optimal assignment on the contingency
/// table (padded with zeros when the cluster counts differ).
inline double accuracy(const std::vector<int>& pred, const std::vector<int>& truth) {
    const ContingencyTable table = contingency_table(pred, truth);
    const std::size_t dim = std::max(table.pred_clusters(), table.true_clusters());
    long long max_count = 0;
    for (const auto& row : table.counts)
        for (long long c : row) max_count = std::max(max_count, c);

    std::vector<std::vector<double>> cost(dim, std::vector<double>(dim,
                                                                   static_cast<double>(max_count)));
    for (std::size_t p = 0; p < table.pred_clusters(); ++p)
        for (std::size_t t = 0; t < table.true_clusters(); ++t)
            cost[p][t] = static_cast<double>(max_count - table.counts[p][t]);

    const std::vector<std::size_t> assignment = detail::hungarian(cost);
    long long matched = 0;
    for (std::size_t p = 0; p < table.pred_clusters(); ++p) {
        const std::size_t t = assignment[p];
        if (t < table.true_clusters()) matched += table.counts[p][t];
    }
    return static_cast<double>(matched) / static_cast<double>(table.n);
}

/// Mutual information normalized by the geometric mean of the two label
/// entropies (natural log); defined as 0 when either entropy is 0.
inline double nmi(const std::vector<int>& pred, const std::vector<int>& truth) {
    const ContingencyTable table = contingency_table(pred, truth);
    const double n = static_cast<double>(table.n);

    std::vector<long long> pred_marginal(table.pred_clusters(), 0);
    std::vector<long long> true_marginal(table.true_clusters(), 0);
    for (std::size_t p = 0; p < table.pred_clusters(); ++p)
        for (std::size_t t = 0; t < table.true_clusters(); ++t) {
            pred_marginal[p] += table.counts[p][t];
            true_marginal[t] += table.counts[p][t];
        }

    double mutual = 0.0;
    for (std::size_t p = 0; p < table.pred_clusters(); ++p)
        for (std::size_t t = 0; t < table.true_clusters(); ++t) {
            const long long c = table.counts[p][t];
            if (c == 0) continue;
            const double joint = static_cast<double>(c) / n;
            mutual += joint * std::log(n * static_cast<double>(c) /
                                       (static_cast<double>(pred_marginal[p]) *
                                        static_cast<double>(true_marginal[t])));
        }

    const double h_pred = detail::entropy(pred_marginal, n);
    const double h_true = detail::entropy(true_marginal, n);
    const double denom = std::sqrt(h_pred * h_true);
    if (denom == 0.0) return 0.0;
    return std::min(1.0, std::max(0.0, mutual / denom));
}

/// Pair-counting Rand index adjusted for chance.
inline double ari(const std::vector<int>& pred, const std::vector<int>& truth) {
    const ContingencyTable table = contingency_table(pred, truth);
    const double n = static_cast<double>(table.n);

    double sum_cells = 0.0, sum_pred = 0.0, sum_true = 0.0;
    for (std::size_t p = 0; p < table.pred_clusters(); ++p) {
        long long row_total = 0;
        for (std::size_t t = 0; t < table.true_clusters(); ++t) {
            row_total += table.counts[p][t];
            sum_cells += detail::pairs_of_two(static_cast<double>(table.counts[p][t]));
        }
        sum_pred += detail::pairs_of_two(static_cast<double>(row_total));
    }
    for (std::size_t t = 0; t < table.true_clusters(); ++t) {
        long long col_total = 0;
        for (std::size_t p = 0; p < table.pred_clusters(); ++p)
            col_total += table.counts[p][t];
        sum_true += detail::pairs_of_two(static_cast<double>(col_total));
    }

    const double total_pairs = detail::pairs_of_two(n);
    const double expected = sum_pred * sum_true / total_pairs;
    const double maximum = 0.5 * (sum_pred + sum_true);
    if (maximum == expected) return 1.0;  // both partitions trivial
    return (sum_cells - expected) / (maximum - expected);
}

} // namespace neuncut
