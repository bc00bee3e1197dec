#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "retro/driver.hpp"

namespace retro {

enum class AggregateAxis { oracle_work, gradient_evals, outer_iteration };

inline std::string to_string(AggregateAxis a) {
    switch (a) {
        case AggregateAxis::oracle_work: return "oracle_work";
        case AggregateAxis::gradient_evals: return "gradient_evals";
        case AggregateAxis::outer_iteration: return "outer_iteration";
    }
    return "unknown";
}

inline AggregateAxis aggregate_axis_from_string(const std::string& s) {
    if (s == "oracle_work") return AggregateAxis::oracle_work;
    if (s == "gradient_evals") return AggregateAxis::gradient_evals;
    if (s == "outer_iteration") return AggregateAxis::outer_iteration;
    throw config_error("unknown aggregate axis: " + s);
}

/// Linear-interpolation quantile of a sorted vector (the common "type 7"
/// definition: h = (n-1)p).
inline double quantile_sorted(const std::vector<double>& sorted, double p) {
    if (sorted.empty())
        throw contract_error("quantile of an empty set");
    const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    if (lo + 1 >= sorted.size()) return sorted.back();
    const double frac = h - std::floor(h);
    return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

/// Cross-replication quantile bands on a shared x grid. Replications hit
/// different x values, so each trace is aligned onto the union grid by
/// last-value-carried-forward interpolation (loss-vs-work curves are step
/// functions between evaluation points); grid points before a trace's first
/// record take that first record's value.
struct AggregateSeries {
    AggregateAxis x_axis = AggregateAxis::oracle_work;
    std::vector<double> grid;
    std::vector<double> loss_q25, loss_median, loss_q75;
    std::vector<double> grad_q25, grad_median, grad_q75;
    std::size_t replications = 0;
};

namespace detail {

inline double axis_value(const OuterIterationRecord& r, AggregateAxis axis) {
    switch (axis) {
        case AggregateAxis::oracle_work:
            return static_cast<double>(r.cumulative_oracle_work);
        case AggregateAxis::gradient_evals:
            return static_cast<double>(r.cumulative_gradient_evals);
        case AggregateAxis::outer_iteration:
            return static_cast<double>(r.k);
    }
    return 0.0;
}

} // namespace detail

inline AggregateSeries aggregate_traces(const std::vector<RunTrace>& traces,
                                        AggregateAxis axis) {
    AggregateSeries agg;
    agg.x_axis = axis;
    agg.replications = traces.size();
    if (traces.empty()) return agg;

    // Union grid over traces, restricted to records carrying measurements.
    for (const auto& trace : traces)
        for (const auto& r : trace.records)
            if (r.loss_true && r.grad_norm_true)
                agg.grid.push_back(detail::axis_value(r, axis));
    std::sort(agg.grid.begin(), agg.grid.end());
    agg.grid.erase(std::unique(agg.grid.begin(), agg.grid.end()),
                   agg.grid.end());
    if (agg.grid.empty()) return agg;

    const std::size_t g = agg.grid.size();
    std::vector<std::vector<double>> loss_at(g), grad_at(g);
    for (const auto& trace : traces) {
        std::vector<std::pair<double, std::pair<double, double>>> pts;
        for (const auto& r : trace.records)
            if (r.loss_true && r.grad_norm_true)
                pts.push_back({detail::axis_value(r, axis),
                               {*r.loss_true, *r.grad_norm_true}});
        if (pts.empty()) continue;
        std::size_t cursor = 0;
        for (std::size_t i = 0; i < g; ++i) {
            while (cursor + 1 < pts.size() &&
                   pts[cursor + 1].first <= agg.grid[i])
                ++cursor;
            // LOCF; before the first point, constant extension backwards.
            loss_at[i].push_back(pts[cursor].second.first);
            grad_at[i].push_back(pts[cursor].second.second);
        }
    }

    auto fill = [&](std::vector<std::vector<double>>& at,
                    std::vector<double>& q25, std::vector<double>& med,
                    std::vector<double>& q75) {
        q25.resize(g);
        med.resize(g);
        q75.resize(g);
        for (std::size_t i = 0; i < g; ++i) {
            std::sort(at[i].begin(), at[i].end());
            q25[i] = quantile_sorted(at[i], 0.25);
            med[i] = quantile_sorted(at[i], 0.5);
            q75[i] = quantile_sorted(at[i], 0.75);
        }
    };
    fill(loss_at, agg.loss_q25, agg.loss_median, agg.loss_q75);
    fill(grad_at, agg.grad_q25, agg.grad_median, agg.grad_q75);
    return agg;
}

} // namespace retro
