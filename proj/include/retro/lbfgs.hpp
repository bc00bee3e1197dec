#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <string>
#include <vector>

#include "retro/numerics.hpp"
#include "retro/sample_path.hpp"

namespace retro {

/// One stored (iterate difference, gradient difference) pair. Admissible
/// only with positive curvature y's > 0; rho caches 1/(y's).
struct CurvaturePair {
    std::vector<double> s;
    std::vector<double> y;
    double rho = 0.0;
};

/// Quasi-Newton memory plus the current iterate. The memory deliberately
/// survives across outer problems; callers reset it explicitly when they
/// want a cold start.
class SolverState {
  public:
    SolverState(std::size_t dimension, std::size_t capacity)
        : x_current(dimension, 0.0), last_gradient(dimension, 0.0),
          capacity_(capacity) {}

    const std::deque<CurvaturePair>& memory() const { return memory_; }
    std::size_t capacity() const { return capacity_; }

    /// Inserts a pair; rejects non-positive curvature, evicts oldest-first.
    /// Returns whether the pair was stored.
    bool push_pair(std::vector<double> s, std::vector<double> y) {
        const double ys = dot(y, s);
        if (!(ys > 0.0)) return false;
        memory_.push_back({std::move(s), std::move(y), 1.0 / ys});
        if (memory_.size() > capacity_) memory_.pop_front();
        return true;
    }

    void reset_memory() { memory_.clear(); }

    std::vector<double> x_current;
    std::vector<double> last_gradient;

    // Diagnostics: times the two-loop output was replaced by plain -g, and
    // times the memory was dropped because of a non-finite direction.
    std::uint64_t fallback_events = 0;
    std::uint64_t memory_resets = 0;

  private:
    std::size_t capacity_;
    std::deque<CurvaturePair> memory_;
};

/// Backtracking (Armijo) line-search parameters.
struct LineSearchParams {
    double c_armijo = 1e-4;
    double backtrack_factor = 0.5;
    double initial_step = 1.0;
    int max_backtracks = 50;
};

enum class InnerStatus {
    converged,
    iteration_cap,
    line_search_failure,
    baseline_step, // used by SGD/Adam trace rows, never by the inner solver
    diverged,      // baseline divergence guard
};

inline std::string to_string(InnerStatus s) {
    switch (s) {
        case InnerStatus::converged: return "converged";
        case InnerStatus::iteration_cap: return "iteration-cap";
        case InnerStatus::line_search_failure: return "line-search-failure";
        case InnerStatus::baseline_step: return "baseline-step";
        case InnerStatus::diverged: return "diverged";
    }
    return "unknown";
}

inline InnerStatus inner_status_from_string(const std::string& s) {
    if (s == "converged") return InnerStatus::converged;
    if (s == "iteration-cap") return InnerStatus::iteration_cap;
    if (s == "line-search-failure") return InnerStatus::line_search_failure;
    if (s == "baseline-step") return InnerStatus::baseline_step;
    if (s == "diverged") return InnerStatus::diverged;
    throw config_error("unknown inner status: " + s);
}

/// Result of one inner solve, including the evaluation counts the caller
/// needs for exact work accounting (each one is a full-set evaluation).
struct InnerResult {
    std::vector<double> x_out;
    double grad_norm_out = 0.0;
    std::uint64_t inner_iterations = 0;
    InnerStatus status = InnerStatus::converged;
    std::uint64_t grad_evals = 0; // value+gradient sweeps over the set
    std::uint64_t func_evals = 0; // value-only sweeps (line-search trials)
};

/// Inner solver configuration. inner_cap == 0 means the default 200 * d.
struct SolverOptions {
    enum class Method { lbfgs, gradient_descent };
    Method method = Method::lbfgs;
    std::size_t memory = 10;
    LineSearchParams line_search;
    std::uint64_t inner_cap = 0;

    std::uint64_t cap_for(std::size_t d) const {
        return inner_cap != 0 ? inner_cap
                              : 200 * static_cast<std::uint64_t>(d);
    }
};

/// Two-loop recursion: returns p = -H g for the implicit inverse-Hessian
/// approximation held in state, scaled by gamma = (s'y)/(y'y) of the newest
/// pair (identity when the memory is empty, so the empty-memory direction is
/// exactly -g). Falls back to -g if the result is not a descent direction;
/// a non-finite result additionally drops the memory.
inline std::vector<double> two_loop_direction(SolverState& state,
                                              std::span<const double> g) {
    if (state.memory().empty()) return negated(g);

    std::vector<double> q(g.begin(), g.end());
    const auto& mem = state.memory();
    std::vector<double> alpha(mem.size());
    for (std::size_t i = mem.size(); i-- > 0;) {
        const CurvaturePair& pair = mem[i];
        alpha[i] = pair.rho * dot(pair.s, q);
        axpy(-alpha[i], pair.y, q);
    }
    const CurvaturePair& newest = mem.back();
    const double gamma = dot(newest.s, newest.y) / dot(newest.y, newest.y);
    scale(gamma, q);
    for (std::size_t i = 0; i < mem.size(); ++i) {
        const CurvaturePair& pair = mem[i];
        const double beta = pair.rho * dot(pair.y, q);
        axpy(alpha[i] - beta, pair.s, q);
    }
    scale(-1.0, q);

    if (!all_finite(q)) {
        state.reset_memory();
        ++state.memory_resets;
        ++state.fallback_events;
        return negated(g);
    }
    if (!(dot(q, g) < 0.0)) {
        ++state.fallback_events;
        return negated(g);
    }
    return q;
}

struct LineSearchResult {
    bool success = false;
    double step = 0.0;
    std::uint64_t evals = 0; // value-only trials consumed
};

/// Largest step in {initial_step * factor^j, j = 0..max_backtracks}
/// satisfying f(x + a p) <= f_x + c_armijo * a * p'g. Requires p'g < 0.
inline LineSearchResult backtracking_search(
    const std::function<double(std::span<const double>)>& f_eval,
    std::span<const double> x, std::span<const double> p, double f_x,
    std::span<const double> g, const LineSearchParams& params) {
    const double directional = dot(p, g);
    if (!(directional < 0.0))
        throw contract_error("backtracking_search: not a descent direction");
    if (!(params.c_armijo > 0.0 && params.c_armijo < 1.0) ||
        !(params.backtrack_factor > 0.0 && params.backtrack_factor < 1.0) ||
        !(params.initial_step > 0.0))
        throw contract_error("backtracking_search: invalid parameters");

    LineSearchResult res;
    std::vector<double> trial(x.size());
    double step = params.initial_step;
    for (int j = 0; j <= params.max_backtracks; ++j) {
        for (std::size_t i = 0; i < x.size(); ++i)
            trial[i] = x[i] + step * p[i];
        const double f_trial = f_eval(trial);
        ++res.evals;
        if (f_trial <= f_x + params.c_armijo * step * directional) {
            res.success = true;
            res.step = step;
            return res;
        }
        step *= params.backtrack_factor;
    }
    return res;
}

/// Drives the sample-path problem defined by (oracle, set) from
/// state.x_current down to ‖∇f_M(x)‖ <= epsilon. Accepted steps satisfy the
/// Armijo condition; curvature pairs are inserted only when
/// y's > 1e-10 ‖s‖‖y‖. The memory is left intact for the next outer
/// iteration.
inline InnerResult solve_to_tolerance(const StochasticOracle& oracle,
                                      const SampleSet& set,
                                      SolverState& state, double epsilon,
                                      const SolverOptions& opts) {
    if (!(epsilon > 0.0))
        throw contract_error("solve_to_tolerance: epsilon must be positive");
    oracle.check_point(state.x_current);
    const std::uint64_t cap = opts.cap_for(oracle.dimension());

    InnerResult res;
    SamplePathEval eval = eval_sample_path(oracle, set, state.x_current);
    ++res.grad_evals;

    while (true) {
        if (eval.grad_norm <= epsilon) {
            res.status = InnerStatus::converged;
            break;
        }
        if (res.inner_iterations >= cap) {
            res.status = InnerStatus::iteration_cap;
            break;
        }
        std::vector<double> direction =
            opts.method == SolverOptions::Method::lbfgs
                ? two_loop_direction(state, eval.gradient)
                : negated(eval.gradient);

        const LineSearchResult ls = backtracking_search(
            [&](std::span<const double> pt) {
                return eval_sample_path_value(oracle, set, pt);
            },
            state.x_current, direction, eval.value, eval.gradient,
            opts.line_search);
        res.func_evals += ls.evals;
        if (!ls.success) {
            res.status = InnerStatus::line_search_failure;
            break;
        }

        std::vector<double> x_next = state.x_current;
        axpy(ls.step, direction, x_next);
        SamplePathEval eval_next = eval_sample_path(oracle, set, x_next);
        ++res.grad_evals;

        std::vector<double> s(x_next.size());
        std::vector<double> y(x_next.size());
        for (std::size_t i = 0; i < x_next.size(); ++i) {
            s[i] = x_next[i] - state.x_current[i];
            y[i] = eval_next.gradient[i] - eval.gradient[i];
        }
        if (dot(y, s) > 1e-10 * norm2(s) * norm2(y))
            state.push_pair(std::move(s), std::move(y));

        state.x_current = std::move(x_next);
        eval = std::move(eval_next);
        ++res.inner_iterations;
    }

    state.last_gradient = eval.gradient;
    res.x_out = state.x_current;
    res.grad_norm_out = eval.grad_norm;
    return res;
}

} // namespace retro
