#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "neuncut/data.hpp"
#include "neuncut/error.hpp"
#include "neuncut/trainer.hpp"

// Label-free selection of the penalty weight gamma. A very large gamma pins
// the orthogonality penalty at its floor; that floor is taken as the bound.
// Walking a descending gamma grid, training stays healthy while the probe's
// minimum orthogonality loss holds the bound, and collapses (trace term near
// zero, penalty stuck high) once gamma drops below a threshold. The selected
// gamma is the smallest one before the first violation.

namespace neuncut {

/// Loss-term minima observed over one reduced-budget training run.
struct GammaProbe {
    double gamma = 0.0;
    double optimal_lap = 0.0;
    double optimal_orth = 0.0;
};

struct GammaSearchResult {
    double selected = 0.0;
    double orth_bound = 0.0;          ///< optimal_orth of the largest gamma
    std::vector<GammaProbe> probes;   ///< one per grid entry, grid order
    std::size_t selected_index = 0;
};

/// Train with the given gamma at a reduced epoch budget and record the
/// minimum of each loss term over the run.
inline GammaProbe probe(const DataMatrix& data, const TrainConfig& base, double gamma,
                        std::size_t probe_epochs) {
    TrainConfig cfg = base;
    cfg.gamma = gamma;
    cfg.epochs = probe_epochs;
    cfg.checkpoint_path.clear();
    cfg.track_metrics = false;
    const TrainResult result = train(data, cfg);
    if (result.log.aborted)
        throw NumericalError("gamma probe aborted: " + result.log.abort_reason);
    GammaProbe out;
    out.gamma = gamma;
    out.optimal_lap = std::numeric_limits<double>::infinity();
    out.optimal_orth = std::numeric_limits<double>::infinity();
    for (const IterationRecord& r : result.log.records) {
        out.optimal_lap = std::min(out.optimal_lap, r.lap);
        out.optimal_orth = std::min(out.optimal_orth, r.orth);
    }
    return out;
}

/// Probe every gamma of a descending grid and select the smallest gamma whose
/// probe (and every larger one) keeps optimal_orth within (1 + tau) of the
/// bound established by the grid's largest gamma.
inline GammaSearchResult search(const DataMatrix& data, const TrainConfig& base,
                                const std::vector<double>& grid, double tau = 0.05,
                                std::size_t probe_epochs = 0) {
    if (grid.empty()) throw InvalidConfig("gamma search: empty grid");
    for (std::size_t i = 0; i + 1 < grid.size(); ++i)
        if (!(grid[i] > grid[i + 1]))
            throw InvalidConfig("gamma search: grid must be strictly descending");
    for (double g : grid)
        if (!(g > 0.0) || !std::isfinite(g))
            throw InvalidConfig("gamma search: gammas must be positive and finite");
    if (!(tau >= 0.0)) throw InvalidConfig("gamma search: tau must be >= 0");
    if (probe_epochs == 0) probe_epochs = std::max<std::size_t>(1, base.epochs / 4);

    GammaSearchResult result;
    result.probes.reserve(grid.size());
    for (double gamma : grid) result.probes.push_back(probe(data, base, gamma, probe_epochs));

    result.orth_bound = result.probes.front().optimal_orth;
    if (!std::isfinite(result.orth_bound))
        throw SearchFailed("gamma search: bound-setting probe produced no finite penalty");

    const double limit = result.orth_bound * (1.0 + tau);
    bool found = false;
    for (std::size_t i = 0; i < result.probes.size(); ++i) {
        if (result.probes[i].optimal_orth <= limit) {
            result.selected = result.probes[i].gamma;
            result.selected_index = i;
            found = true;
        } else {
            break;  // threshold crossed; everything below collapses
        }
    }
    if (!found) throw SearchFailed("gamma search: no gamma satisfied the penalty bound");
    return result;
}

/// Report CSV: gamma,optimal_lap,optimal_orth,selected_flag.
inline std::string gamma_report_to_csv(const GammaSearchResult& result) {
    std::string out = "gamma,optimal_lap,optimal_orth,selected_flag\n";
    for (std::size_t i = 0; i < result.probes.size(); ++i) {
        const GammaProbe& p = result.probes[i];
        out += detail::format_double(p.gamma);
        out += ',';
        out += detail::format_double(p.optimal_lap);
        out += ',';
        out += detail::format_double(p.optimal_orth);
        out += ',';
        out += (i == result.selected_index) ? '1' : '0';
        out += '\n';
    }
    return out;
}

} // namespace neuncut
