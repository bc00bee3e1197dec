#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "retro/driver.hpp"
#include "retro/oracle.hpp"
#include "retro/sample_path.hpp"

namespace retro {

struct SgdConfig {
    double step_size = 0.01;
    std::uint64_t batch_size = 32;
    std::uint64_t total_steps = 1000;
};

struct AdamConfig {
    double step_size = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps_hat = 1e-8;
    std::uint64_t batch_size = 32;
    std::uint64_t total_steps = 1000;
};

/// Options shared by the baseline runners; mirrors RaOptions.
struct BaselineOptions {
    bool store_iterates = false;
    bool record_wall_time = false;
    EvalOptions eval;
    std::uint64_t config_fingerprint = 0;
};

inline constexpr double kDivergenceGuard = 1e12;

namespace detail {

/// Shared trace-recording loop for the step-based baselines. One record per
/// evaluation point; inner_iterations counts the steps the record covers,
/// so work columns replay as M_k * inner_grad_evals with
/// inner_grad_evals = steps covered.
template <typename StepFn>
RunTrace run_baseline_loop(const StochasticOracle& oracle,
                           const std::vector<double>& x0,
                           std::uint64_t batch_size, std::uint64_t total_steps,
                           std::uint64_t seed, int eval_cadence,
                           const BaselineOptions& opts, StepFn&& apply_step) {
    oracle.check_point(x0);
    if (batch_size < 1 || total_steps < 1)
        throw contract_error("baseline: batch_size and total_steps >= 1");
    if (eval_cadence < 1)
        throw contract_error("baseline: eval_cadence must be >= 1");

    RunTrace trace;
    trace.seed = seed;
    trace.config_fingerprint = opts.config_fingerprint;
    const std::uint64_t eval_seed =
        opts.eval.eval_seed != 0 ? opts.eval.eval_seed
                                 : derive_seed(seed, Stream::evaluation);

    std::vector<double> x = x0;
    std::uint64_t steps_since_record = 0;
    int record_index = 0;
    double last_batch_grad_norm = 0.0;
    const auto t_start = std::chrono::steady_clock::now();

    auto append_record = [&](InnerStatus status, std::uint64_t step) {
        OuterIterationRecord rec;
        rec.k = ++record_index;
        rec.m_k = batch_size;
        rec.eps_k = 0.0;
        rec.inner_iterations = steps_since_record;
        rec.grad_norm_sample_path = last_batch_grad_norm;
        rec.cumulative_oracle_work = step * batch_size;
        rec.cumulative_gradient_evals = step * batch_size;
        rec.inner_status = status;
        rec.inner_grad_evals = steps_since_record;
        rec.inner_func_evals = 0;
        rec.sigma_subsample_size = 0;
        if (opts.eval.enabled) {
            const auto [loss, gnorm] =
                measure_true_gradient(oracle, x, opts.eval.m_eval, eval_seed);
            rec.loss_true = loss;
            rec.grad_norm_true = gnorm;
        }
        if (opts.record_wall_time) {
            rec.wall_time_ms = std::chrono::duration<double, std::milli>(
                                   std::chrono::steady_clock::now() - t_start)
                                   .count();
        }
        trace.records.push_back(std::move(rec));
        if (opts.store_iterates) trace.iterates.push_back(x);
        steps_since_record = 0;
    };

    for (std::uint64_t t = 1; t <= total_steps; ++t) {
        SplitMix64 batch_rng(derive_seed(seed, Stream::batch, t));
        const SampleSet batch = draw_sample_set(
            oracle, batch_size, static_cast<int>(record_index + 1), batch_rng);
        const SamplePathEval eval = eval_sample_path(oracle, batch, x);
        last_batch_grad_norm = eval.grad_norm;
        ++steps_since_record;

        apply_step(x, eval.gradient, t);

        if (norm2(x) > kDivergenceGuard) {
            append_record(InnerStatus::diverged, t);
            trace.final_x = x;
            return trace;
        }
        if (t % static_cast<std::uint64_t>(eval_cadence) == 0 ||
            t == total_steps)
            append_record(InnerStatus::baseline_step, t);
    }
    trace.final_x = x;
    return trace;
}

} // namespace detail

/// Constant-step mini-batch SGD: x <- x - eta g with g the fresh-batch
/// sample-path gradient. Work accounting matches the outer loop's units:
/// each step charges batch_size work units and batch_size gradients.
inline RunTrace run_sgd(const StochasticOracle& oracle,
                        const std::vector<double>& x0, const SgdConfig& cfg,
                        std::uint64_t seed, int eval_cadence,
                        const BaselineOptions& opts = {}) {
    if (!(cfg.step_size > 0.0))
        throw contract_error("sgd: step_size must be positive");
    return detail::run_baseline_loop(
        oracle, x0, cfg.batch_size, cfg.total_steps, seed, eval_cadence, opts,
        [&](std::vector<double>& x, const std::vector<double>& g,
            std::uint64_t) { axpy(-cfg.step_size, g, x); });
}

/// Adam with bias correction:
///   m_t = b1 m_{t-1} + (1-b1) g_t,  v_t = b2 v_{t-1} + (1-b2) g_t^2,
///   x  -= step * (m_t / (1-b1^t)) / (sqrt(v_t / (1-b2^t)) + eps_hat).
inline RunTrace run_adam(const StochasticOracle& oracle,
                         const std::vector<double>& x0, const AdamConfig& cfg,
                         std::uint64_t seed, int eval_cadence,
                         const BaselineOptions& opts = {}) {
    if (!(cfg.step_size > 0.0))
        throw contract_error("adam: step_size must be positive");
    if (!(cfg.beta1 >= 0.0 && cfg.beta1 < 1.0) ||
        !(cfg.beta2 >= 0.0 && cfg.beta2 < 1.0))
        throw contract_error("adam: betas must lie in [0, 1)");
    return detail::run_baseline_loop(
        oracle, x0, cfg.batch_size, cfg.total_steps, seed, eval_cadence, opts,
        [&cfg, m = std::vector<double>(x0.size(), 0.0),
         v = std::vector<double>(x0.size(), 0.0)](
            std::vector<double>& x, const std::vector<double>& g,
            std::uint64_t t) mutable {
            const double corr1 =
                1.0 - std::pow(cfg.beta1, static_cast<double>(t));
            const double corr2 =
                1.0 - std::pow(cfg.beta2, static_cast<double>(t));
            for (std::size_t i = 0; i < x.size(); ++i) {
                m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
                v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
                const double m_hat = m[i] / corr1;
                const double v_hat = v[i] / corr2;
                x[i] -= cfg.step_size * m_hat /
                        (std::sqrt(v_hat) + cfg.eps_hat);
            }
        });
}

} // namespace retro
