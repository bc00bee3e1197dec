#pragma once

#include <atomic>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "retro/common.hpp"
#include "retro/numerics.hpp"

namespace retro {

/// Identifies one realization of the random input. The pair is the complete
/// identity: the same SampleId always reproduces the identical sample.
struct SampleId {
    std::uint64_t stream_seed = 0;
    std::uint64_t index = 0;

    friend bool operator==(const SampleId&, const SampleId&) = default;
};

/// Per-sample objective value and gradient.
struct OracleOutput {
    double value = 0.0;
    std::vector<double> gradient;
};

enum class OracleMode { infinite_stream, finite_dataset };

/// Static description of a problem instance.
struct ProblemSpec {
    std::size_t dimension = 0;
    OracleMode mode = OracleMode::infinite_stream;
    std::uint64_t dataset_size = 0; // N; meaningful in finite_dataset mode
    std::optional<std::vector<double>> known_optimum;
    std::map<std::string, double> generator_params;
};

/// Running totals of charged evaluations. "work" counts every per-sample
/// evaluation (value-only or value+gradient alike); "gradients" counts only
/// the ones that produced a gradient.
struct WorkCounters {
    std::uint64_t work = 0;
    std::uint64_t gradients = 0;
};

/// A randomized function family: given a point and a sample identifier,
/// produces a value and gradient. Implementations are immutable after
/// construction except for the work counters, so evaluation is safe from
/// concurrent workers.
class StochasticOracle {
  public:
    virtual ~StochasticOracle() = default;

    const ProblemSpec& spec() const { return spec_; }
    std::size_t dimension() const { return spec_.dimension; }
    OracleMode mode() const { return spec_.mode; }
    std::uint64_t dataset_size() const { return spec_.dataset_size; }

    /// Value and gradient at x for sample s. Deterministic in (x, s).
    /// Charges one work unit and one gradient evaluation.
    OracleOutput evaluate(std::span<const double> x, SampleId s) const {
        check_point(x);
        check_sample(s);
        OracleOutput out;
        out.gradient.assign(spec_.dimension, 0.0);
        do_eval(x, s, out.value, out.gradient);
        if (!std::isfinite(out.value) || !all_finite(out.gradient))
            throw contract_error("oracle produced a non-finite output");
        work_.fetch_add(1, std::memory_order_relaxed);
        gradients_.fetch_add(1, std::memory_order_relaxed);
        return out;
    }

    /// Value only. Charges one work unit and no gradient evaluation.
    double evaluate_value(std::span<const double> x, SampleId s) const {
        check_point(x);
        check_sample(s);
        work_.fetch_add(1, std::memory_order_relaxed);
        return do_value(x, s);
    }

    /// Instrumentation entry point: identical result to evaluate() but never
    /// charged. Used for held-out measurement, not optimization.
    OracleOutput evaluate_uncounted(std::span<const double> x,
                                    SampleId s) const {
        check_point(x);
        check_sample(s);
        OracleOutput out;
        out.gradient.assign(spec_.dimension, 0.0);
        do_eval(x, s, out.value, out.gradient);
        return out;
    }

    /// Raw evaluation into a caller-provided gradient buffer. No checks, no
    /// counting; callers (the sample-path evaluator) validate and charge in
    /// bulk.
    void eval_raw(std::span<const double> x, SampleId s, double& value,
                  std::span<double> grad) const {
        do_eval(x, s, value, grad);
    }

    double value_raw(std::span<const double> x, SampleId s) const {
        return do_value(x, s);
    }

    /// Analytic per-sample smoothness bound: a constant L(s) with
    /// ‖∇F(x,s) − ∇F(y,s)‖ ≤ L(s)‖x−y‖ for all x, y.
    virtual double sample_lipschitz(SampleId s) const = 0;

    WorkCounters counters() const {
        return {work_.load(std::memory_order_relaxed),
                gradients_.load(std::memory_order_relaxed)};
    }

    /// Bulk charge used by batched evaluators; keeps totals exact while
    /// avoiding one atomic update per sample.
    void charge(std::uint64_t work, std::uint64_t gradients) const {
        work_.fetch_add(work, std::memory_order_relaxed);
        gradients_.fetch_add(gradients, std::memory_order_relaxed);
    }

    void reset_counters() const {
        work_.store(0, std::memory_order_relaxed);
        gradients_.store(0, std::memory_order_relaxed);
    }

    void check_sample(SampleId s) const {
        if (spec_.mode == OracleMode::finite_dataset &&
            s.index >= spec_.dataset_size)
            throw invalid_sample_error(
                "sample index " + std::to_string(s.index) +
                " out of range for dataset of size " +
                std::to_string(spec_.dataset_size));
    }

    void check_point(std::span<const double> x) const {
        if (x.size() != spec_.dimension)
            throw contract_error("point has length " +
                                 std::to_string(x.size()) + ", expected " +
                                 std::to_string(spec_.dimension));
    }

  protected:
    explicit StochasticOracle(ProblemSpec spec) : spec_(std::move(spec)) {}

    virtual void do_eval(std::span<const double> x, SampleId s, double& value,
                         std::span<double> grad) const = 0;

    /// Value-only path; default computes the gradient and drops it.
    /// Overridden where the value is cheaper alone.
    virtual double do_value(std::span<const double> x, SampleId s) const {
        double value = 0.0;
        std::vector<double> scratch(spec_.dimension);
        do_eval(x, s, value, scratch);
        return value;
    }

  private:
    ProblemSpec spec_;
    mutable std::atomic<std::uint64_t> work_{0};
    mutable std::atomic<std::uint64_t> gradients_{0};
};

} // namespace retro
