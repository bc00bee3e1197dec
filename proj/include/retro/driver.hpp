#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "retro/lbfgs.hpp"
#include "retro/numerics.hpp"
#include "retro/oracle.hpp"
#include "retro/sample_path.hpp"
#include "retro/schedule.hpp"

namespace retro {

/// How outer solutions are averaged into the warm-start point.
struct WeightRule {
    enum class Kind { last_iterate, uniform, custom };
    Kind kind = Kind::last_iterate;
    std::vector<double> weights; // custom only, indexed by k-1

    static WeightRule last_iterate() { return {}; }
    static WeightRule uniform() { return {Kind::uniform, {}}; }
    static WeightRule custom(std::vector<double> w) {
        for (double v : w)
            if (!(v > 0.0))
                throw contract_error("custom weights must be positive");
        return {Kind::custom, std::move(w)};
    }
};

/// sum_j w_j x_j / sum_j w_j.
inline std::vector<double> weighted_average(
    const std::vector<std::vector<double>>& points,
    const std::vector<double>& weights) {
    if (points.empty() || points.size() != weights.size())
        throw contract_error("weighted_average: size mismatch");
    const std::size_t d = points.front().size();
    KahanVector num(d);
    KahanSum den;
    std::vector<double> scaled(d);
    for (std::size_t j = 0; j < points.size(); ++j) {
        if (points[j].size() != d)
            throw contract_error("weighted_average: ragged points");
        if (!(weights[j] > 0.0))
            throw contract_error("weighted_average: weights must be positive");
        for (std::size_t i = 0; i < d; ++i)
            scaled[i] = weights[j] * points[j][i];
        num.add(scaled);
        den.add(weights[j]);
    }
    std::vector<double> avg = num.sum();
    for (double& v : avg) v /= den.sum;
    return avg;
}

/// One outer-iteration row of a run trace. The trailing counters
/// (inner_grad_evals, inner_func_evals, sigma_subsample_size) make the
/// cumulative work columns exactly replayable:
///   work_k  = work_{k-1}  + M_k (ge_k + fe_k) + sigma_k
///   grads_k = grads_{k-1} + M_k ge_k + sigma_k
struct OuterIterationRecord {
    int k = 0;
    std::uint64_t m_k = 0;
    double eps_k = 0.0;
    std::uint64_t inner_iterations = 0;
    double grad_norm_sample_path = 0.0;
    std::optional<double> grad_norm_true;
    std::optional<double> loss_true;
    std::uint64_t cumulative_oracle_work = 0;
    std::uint64_t cumulative_gradient_evals = 0;
    double wall_time_ms = 0.0;
    InnerStatus inner_status = InnerStatus::converged;
    std::uint64_t inner_grad_evals = 0;
    std::uint64_t inner_func_evals = 0;
    std::uint64_t sigma_subsample_size = 0;
};

/// Full record of one run: per-iteration rows plus the terminal point.
/// iterates is populated only when requested (used by replay checks).
struct RunTrace {
    std::vector<OuterIterationRecord> records;
    std::vector<double> final_x;
    std::uint64_t config_fingerprint = 0;
    std::uint64_t seed = 0;
    std::vector<std::vector<double>> iterates;
};

/// Held-out measurement settings. Measurement is instrumentation: it is
/// never charged to the work counters.
struct EvalOptions {
    bool enabled = true;
    std::uint64_t m_eval = 10000;   // streaming-mode sample count
    std::uint64_t eval_seed = 0;    // 0 = derive from the run seed
};

/// Loss and gradient norm of the target objective at x: the exact full-data
/// average in finite-dataset mode, a fixed held-out stream average
/// otherwise. Uncounted by construction.
inline std::pair<double, double> measure_true_gradient(
    const StochasticOracle& oracle, std::span<const double> x,
    std::uint64_t m_eval, std::uint64_t eval_seed) {
    if (m_eval < 1)
        throw contract_error("measure_true_gradient: M_eval must be >= 1");
    std::vector<SampleId> ids;
    if (oracle.mode() == OracleMode::finite_dataset) {
        ids.resize(oracle.dataset_size());
        for (std::uint64_t i = 0; i < ids.size(); ++i) ids[i] = {0, i};
    } else {
        const std::uint64_t stream = derive_seed(eval_seed, Stream::evaluation);
        ids.resize(m_eval);
        for (std::uint64_t i = 0; i < m_eval; ++i) ids[i] = {stream, i};
    }
    const SamplePathEval eval = eval_ids_uncounted(oracle, ids, x);
    return {eval.value, eval.grad_norm};
}

/// Behavior toggles for the outer loop.
struct RaOptions {
    bool warm_start = true;     // start each inner solve at the running average
    bool carry_memory = true;   // keep curvature pairs across outer iterations
    bool nested_sampling = false; // grow the previous set instead of redrawing
    bool store_iterates = false;
    bool record_wall_time = false; // off by default: keeps traces re-run identical
    EvalOptions eval;
    std::uint64_t config_fingerprint = 0;
};

namespace detail {

class WeightedAverager {
  public:
    WeightedAverager(const WeightRule& rule, std::size_t d)
        : rule_(rule), num_(d) {}

    /// Folds X_k in and returns the current average.
    std::vector<double> update(int k, const std::vector<double>& x_k) {
        if (rule_.kind == WeightRule::Kind::last_iterate) return x_k;
        const double w = rule_.kind == WeightRule::Kind::uniform
                             ? 1.0
                             : rule_.weights.at(static_cast<std::size_t>(k) - 1);
        std::vector<double> scaled(x_k.size());
        for (std::size_t i = 0; i < x_k.size(); ++i) scaled[i] = w * x_k[i];
        num_.add(scaled);
        den_.add(w);
        std::vector<double> avg = num_.sum();
        for (double& v : avg) v /= den_.sum;
        return avg;
    }

  private:
    WeightRule rule_;
    KahanVector num_;
    KahanSum den_;
};

} // namespace detail

/// The outer loop. For k = 1..K: draw a fresh sample set of size M_k,
/// fix the tolerance eps_k at the warm-start point, run the inner solver
/// from the warm start with persistent quasi-Newton memory, fold the
/// solution into the weighted average, and append one trace record.
/// Deterministic given (seed, configuration).
inline RunTrace run_ra(const StochasticOracle& oracle,
                       const std::vector<double>& x0,
                       const SampleSizeSchedule& sched,
                       const ToleranceSchedule& tol, const WeightRule& weights,
                       const SolverOptions& solver, int K, std::uint64_t seed,
                       const RaOptions& opts = {}) {
    oracle.check_point(x0);
    if (K < 1) throw contract_error("run_ra: K must be >= 1");
    if (weights.kind == WeightRule::Kind::custom &&
        weights.weights.size() < static_cast<std::size_t>(K))
        throw contract_error("run_ra: custom weights shorter than K");
    sched.validate();
    tol.validate();

    const std::size_t d = oracle.dimension();
    RunTrace trace;
    trace.seed = seed;
    trace.config_fingerprint = opts.config_fingerprint;
    trace.records.reserve(static_cast<std::size_t>(K));

    SolverState state(d, solver.memory);
    state.x_current = x0;
    std::vector<double> x_bar = x0;
    detail::WeightedAverager averager(weights, d);
    ToleranceState tol_state;
    const std::uint64_t eval_seed =
        opts.eval.eval_seed != 0 ? opts.eval.eval_seed
                                 : derive_seed(seed, Stream::evaluation);

    std::uint64_t cum_work = 0;
    std::uint64_t cum_grads = 0;
    std::uint64_t m_prev = 0;
    SampleSet set;

    for (int k = 1; k <= K; ++k) {
        const auto t_start = std::chrono::steady_clock::now();

        const std::uint64_t m_k = next_sample_size(
            sched, k,
            k == 1 ? std::nullopt : std::optional<std::uint64_t>(m_prev));
        SplitMix64 draw_rng(derive_seed(seed, Stream::sample_draw,
                                        static_cast<std::uint64_t>(k)));
        set = (opts.nested_sampling && k > 1)
                  ? grow_sample_set(oracle, set, m_k, k, draw_rng)
                  : draw_sample_set(oracle, m_k, k, draw_rng);

        SplitMix64 subset_rng(derive_seed(seed, Stream::sigma_subset,
                                          static_cast<std::uint64_t>(k)));
        const ToleranceDecision td = next_tolerance(
            tol, tol_state, k, m_k, x_bar, set, oracle, subset_rng);

        state.x_current = opts.warm_start ? x_bar : x0;
        if (!opts.carry_memory) state.reset_memory();

        const InnerResult res =
            solve_to_tolerance(oracle, set, state, td.eps, solver);
        x_bar = averager.update(k, res.x_out);

        cum_work += m_k * (res.grad_evals + res.func_evals) + td.sigma_evals;
        cum_grads += m_k * res.grad_evals + td.sigma_evals;

        OuterIterationRecord rec;
        rec.k = k;
        rec.m_k = m_k;
        rec.eps_k = td.eps;
        rec.inner_iterations = res.inner_iterations;
        rec.grad_norm_sample_path = res.grad_norm_out;
        rec.cumulative_oracle_work = cum_work;
        rec.cumulative_gradient_evals = cum_grads;
        rec.inner_status = res.status;
        rec.inner_grad_evals = res.grad_evals;
        rec.inner_func_evals = res.func_evals;
        rec.sigma_subsample_size = td.sigma_evals;
        if (opts.eval.enabled) {
            const auto [loss, gnorm] = measure_true_gradient(
                oracle, res.x_out, opts.eval.m_eval, eval_seed);
            rec.loss_true = loss;
            rec.grad_norm_true = gnorm;
        }
        if (opts.record_wall_time) {
            rec.wall_time_ms =
                std::chrono::duration<double, std::milli>(
                    std::chrono::steady_clock::now() - t_start)
                    .count();
        }
        trace.records.push_back(std::move(rec));
        if (opts.store_iterates) trace.iterates.push_back(res.x_out);
        m_prev = m_k;
    }

    trace.final_x = state.x_current;
    return trace;
}

} // namespace retro
