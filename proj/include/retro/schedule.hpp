#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "retro/numerics.hpp"
#include "retro/sample_path.hpp"

namespace retro {

/// Per-iteration sample-size rule. Multiplicative kinds round with ceil and
/// apply the factor to the rounded previous value, which keeps sizes
/// integral and the realized ratio at least the nominal factor.
struct SampleSizeSchedule {
    enum class Kind { geometric, polynomial_factor, fixed_list };

    Kind kind = Kind::geometric;
    double c1 = 2.0;   // geometric growth factor, > 1
    double a = 7.0;    // polynomial factor q_k = 1 + a k^{-b}
    double b = 1.7;
    std::uint64_t m1 = 2;
    std::vector<std::uint64_t> values; // fixed_list

    static SampleSizeSchedule geometric(double c1, std::uint64_t m1) {
        SampleSizeSchedule s;
        s.kind = Kind::geometric;
        s.c1 = c1;
        s.m1 = m1;
        s.validate();
        return s;
    }

    static SampleSizeSchedule polynomial_factor(double a, double b,
                                                std::uint64_t m1) {
        SampleSizeSchedule s;
        s.kind = Kind::polynomial_factor;
        s.a = a;
        s.b = b;
        s.m1 = m1;
        s.validate();
        return s;
    }

    static SampleSizeSchedule fixed_list(std::vector<std::uint64_t> values) {
        SampleSizeSchedule s;
        s.kind = Kind::fixed_list;
        s.values = std::move(values);
        s.validate();
        return s;
    }

    void validate() const {
        switch (kind) {
            case Kind::geometric:
                if (!(c1 > 1.0))
                    throw contract_error("geometric schedule needs c1 > 1");
                if (m1 < 1)
                    throw contract_error("schedule needs m1 >= 1");
                break;
            case Kind::polynomial_factor:
                if (!(a > 0.0) || !(b > 0.0))
                    throw contract_error(
                        "polynomial_factor schedule needs a > 0 and b > 0");
                if (m1 < 1)
                    throw contract_error("schedule needs m1 >= 1");
                break;
            case Kind::fixed_list:
                if (values.empty())
                    throw contract_error("fixed_list schedule is empty");
                for (auto v : values)
                    if (v < 1)
                        throw contract_error(
                            "fixed_list entries must be positive");
                break;
        }
    }
};

/// Sample size for outer iteration k (1-based). M_prev must be supplied for
/// k >= 2 and omitted for k = 1.
inline std::uint64_t next_sample_size(const SampleSizeSchedule& sched, int k,
                                      std::optional<std::uint64_t> m_prev) {
    if (k < 1) throw contract_error("next_sample_size: k must be >= 1");
    if ((k == 1) == m_prev.has_value())
        throw contract_error(
            "next_sample_size: M_prev must be given exactly when k >= 2");
    // multiplicative updates work in double; keep clear of the 2^63 range
    // where the ceil-and-cast would silently wrap
    constexpr double kSizeLimit = 9.0e18;
    switch (sched.kind) {
        case SampleSizeSchedule::Kind::geometric: {
            if (k == 1) return sched.m1;
            const double next = sched.c1 * static_cast<double>(*m_prev);
            if (next > kSizeLimit)
                throw contract_error(
                    "sample size exceeds the 64-bit range at k = " +
                    std::to_string(k));
            return static_cast<std::uint64_t>(std::ceil(next));
        }
        case SampleSizeSchedule::Kind::polynomial_factor: {
            if (k == 1) return sched.m1;
            const double q =
                1.0 + sched.a * std::pow(static_cast<double>(k), -sched.b);
            const double next = q * static_cast<double>(*m_prev);
            if (next > kSizeLimit)
                throw contract_error(
                    "sample size exceeds the 64-bit range at k = " +
                    std::to_string(k));
            return static_cast<std::uint64_t>(std::ceil(next));
        }
        case SampleSizeSchedule::Kind::fixed_list: {
            if (static_cast<std::size_t>(k) > sched.values.size())
                throw contract_error(
                    "fixed_list schedule exhausted at k = " +
                    std::to_string(k));
            return sched.values[static_cast<std::size_t>(k) - 1];
        }
    }
    throw contract_error("unreachable schedule kind");
}

/// Error-tolerance rule for the inner solver.
struct ToleranceSchedule {
    enum class Kind { deterministic, adaptive };

    Kind kind = Kind::deterministic;
    double c2 = 1.0;                // deterministic: eps_k = c2 / sqrt(M_k)
    std::size_t m_sigma = 100;      // adaptive: subset size cap
    int recompute_every = 1;        // adaptive: estimator refresh cadence
    double sigma_floor = 1e-10;     // adaptive: lower bound on sigma-hat

    static ToleranceSchedule deterministic(double c2) {
        ToleranceSchedule t;
        t.kind = Kind::deterministic;
        t.c2 = c2;
        t.validate();
        return t;
    }

    static ToleranceSchedule adaptive(std::size_t m_sigma,
                                      int recompute_every = 1,
                                      double sigma_floor = 1e-10) {
        ToleranceSchedule t;
        t.kind = Kind::adaptive;
        t.m_sigma = m_sigma;
        t.recompute_every = recompute_every;
        t.sigma_floor = sigma_floor;
        t.validate();
        return t;
    }

    void validate() const {
        if (kind == Kind::deterministic) {
            if (!(c2 > 0.0))
                throw contract_error("deterministic tolerance needs c2 > 0");
        } else {
            if (m_sigma < 2)
                throw contract_error("adaptive tolerance needs m_sigma >= 2");
            if (recompute_every < 1)
                throw contract_error(
                    "adaptive tolerance needs recompute_every >= 1");
            if (sigma_floor < 0.0)
                throw contract_error("sigma_floor must be nonnegative");
        }
    }
};

/// Cache for the adaptive estimator between recomputations.
struct ToleranceState {
    double sigma_hat = 0.0;
    int computed_at_k = 0; // 0 = never computed
};

/// Outcome of one tolerance decision, with the charged estimator cost.
struct ToleranceDecision {
    double eps = 0.0;
    double sigma_hat = 0.0;       // 0 in deterministic mode
    std::uint64_t sigma_evals = 0; // subset evaluations charged this call
};

/// eps_k for iteration k. Deterministic mode: c2 / sqrt(M_k) exactly.
/// Adaptive mode: max(sigma_hat, sigma_floor) / sqrt(M_k), with sigma_hat
/// estimated at the warm-start point over a subset of the new sample set
/// (capped at min(m_sigma, M_k)) and cached for recompute_every - 1
/// subsequent iterations, rescaled by the current sqrt(M_k).
inline ToleranceDecision next_tolerance(const ToleranceSchedule& sched,
                                        ToleranceState& state, int k,
                                        std::uint64_t m_k,
                                        std::span<const double> warm_start,
                                        const SampleSet& set,
                                        const StochasticOracle& oracle,
                                        SplitMix64& subset_rng) {
    if (m_k < 1) throw contract_error("next_tolerance: M_k must be >= 1");
    ToleranceDecision out;
    const double sqrt_m = std::sqrt(static_cast<double>(m_k));
    if (sched.kind == ToleranceSchedule::Kind::deterministic) {
        out.eps = sched.c2 / sqrt_m;
        return out;
    }
    const std::size_t m_eff =
        std::min<std::size_t>(sched.m_sigma, static_cast<std::size_t>(m_k));
    const bool refresh = state.computed_at_k == 0 ||
                         (k - state.computed_at_k) >= sched.recompute_every;
    if (refresh) {
        state.sigma_hat = estimate_grad_norm_sigma(oracle, set, warm_start,
                                                   m_eff, subset_rng);
        state.computed_at_k = k;
        out.sigma_evals = m_eff;
    }
    out.sigma_hat = state.sigma_hat;
    out.eps = std::max(state.sigma_hat, sched.sigma_floor) / sqrt_m;
    return out;
}

enum class SummabilityVerdict {
    summable,               // certified analytically (geometric tail)
    not_certified,          // partial sums reported, no analytic claim
    reported_numerical_only // multiplicative factor tends to 1; numbers only
};

inline std::string to_string(SummabilityVerdict v) {
    switch (v) {
        case SummabilityVerdict::summable: return "summable";
        case SummabilityVerdict::not_certified:
            return "not-certifiably-summable";
        case SummabilityVerdict::reported_numerical_only:
            return "reported-numerical-only";
    }
    return "unknown";
}

/// Diagnostic report on the schedule validity conditions: the partial sum
/// of M_k^{-1/2} up to the horizon, an analytic verdict where one exists,
/// and whether the tolerance rule inherits summability from the sample-size
/// rule (it does for the deterministic rule, since eps_k is proportional to
/// M_k^{-1/2}).
struct SummabilityReport {
    std::string schedule_kind;
    int horizon = 0;
    double partial_sum = 0.0;
    SummabilityVerdict verdict = SummabilityVerdict::not_certified;
    double geometric_tail_bound = 0.0; // closed form, geometric only
    double growth_exponent = 0.0;      // fitted log-log slope near horizon
    std::uint64_t final_sample_size = 0;
    bool eps_condition_inherits = false;
    std::string note;
};

inline SummabilityReport check_summability(const SampleSizeSchedule& sched,
                                           const ToleranceSchedule& tol,
                                           int horizon) {
    if (horizon < 1)
        throw contract_error("check_summability: horizon must be >= 1");
    SummabilityReport rep;
    rep.horizon = horizon;

    std::vector<std::uint64_t> sizes;
    sizes.reserve(static_cast<std::size_t>(horizon));
    std::optional<std::uint64_t> prev;
    int usable = horizon;
    for (int k = 1; k <= horizon; ++k) {
        if (sched.kind == SampleSizeSchedule::Kind::fixed_list &&
            static_cast<std::size_t>(k) > sched.values.size()) {
            usable = k - 1;
            break;
        }
        const std::uint64_t m = next_sample_size(sched, k, prev);
        sizes.push_back(m);
        prev = m;
    }
    rep.horizon = usable;
    KahanSum partial;
    for (auto m : sizes)
        partial.add(1.0 / std::sqrt(static_cast<double>(m)));
    rep.partial_sum = partial.sum;
    rep.final_sample_size = sizes.empty() ? 0 : sizes.back();

    switch (sched.kind) {
        case SampleSizeSchedule::Kind::geometric:
            rep.schedule_kind = "geometric";
            // M_k >= m1 c1^{k-1}, so sum M_k^{-1/2} is dominated by the
            // geometric series with ratio c1^{-1/2}.
            rep.geometric_tail_bound =
                (1.0 / std::sqrt(static_cast<double>(sched.m1))) /
                (1.0 - 1.0 / std::sqrt(sched.c1));
            rep.verdict = SummabilityVerdict::summable;
            rep.note = "geometric growth dominates a convergent series";
            break;
        case SampleSizeSchedule::Kind::polynomial_factor:
            rep.schedule_kind = "polynomial_factor";
            rep.verdict = SummabilityVerdict::reported_numerical_only;
            rep.note = "multiplicative factor tends to 1; partial sums and "
                       "growth exponent are reported without an analytic "
                       "summability claim";
            break;
        case SampleSizeSchedule::Kind::fixed_list:
            rep.schedule_kind = "fixed_list";
            rep.verdict = SummabilityVerdict::not_certified;
            rep.note = "finite list; only the partial sum is reported";
            break;
    }

    if (sizes.size() >= 4) {
        const std::size_t hi = sizes.size();
        const std::size_t lo = hi / 2;
        const double num = std::log(static_cast<double>(sizes[hi - 1])) -
                           std::log(static_cast<double>(sizes[lo - 1]));
        const double den = std::log(static_cast<double>(hi)) -
                           std::log(static_cast<double>(lo));
        rep.growth_exponent = num / den;
    }

    rep.eps_condition_inherits =
        tol.kind == ToleranceSchedule::Kind::deterministic;
    return rep;
}

/// User-supplied constants for the reference decay line. The estimates are
/// inputs for plotting, never computed by the library.
struct RateCheckConfig {
    double c1 = 2.0;
    double c2 = 1.0;
    std::uint64_t m1 = 1;
    std::optional<double> L_estimate;
    std::optional<double> sigma_estimate;
    std::optional<double> Lambda_estimate;

    /// The decay-bound denominator carries m1 in the headline statement but
    /// sqrt(m1) in the tightest derivation; both are available, sqrt is the
    /// default.
    enum class Denominator { m1_value, sqrt_m1 };
    Denominator denominator = Denominator::sqrt_m1;
};

/// Reference geometric-decay bound at outer iteration k:
///   (1/sqrt(c1))^{k-1} * L (c2 + sigma) / (Lambda * denom(m1)).
inline double reference_decay_bound(const RateCheckConfig& cfg, int k) {
    if (k < 1) throw contract_error("reference_decay_bound: k must be >= 1");
    if (!cfg.L_estimate || !cfg.sigma_estimate || !cfg.Lambda_estimate)
        throw diagnostic_unavailable(
            "rate bound needs L, sigma, and Lambda estimates");
    const double denom =
        cfg.denominator == RateCheckConfig::Denominator::m1_value
            ? static_cast<double>(cfg.m1)
            : std::sqrt(static_cast<double>(cfg.m1));
    const double prefactor = *cfg.L_estimate * (cfg.c2 + *cfg.sigma_estimate) /
                             (*cfg.Lambda_estimate * denom);
    return std::pow(1.0 / std::sqrt(cfg.c1), k - 1) * prefactor;
}

} // namespace retro
