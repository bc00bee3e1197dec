#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "retro/oracle.hpp"
#include "retro/rng.hpp"

namespace retro {

/// Central finite-difference gradient of the per-sample objective at (x, s),
/// step h = 1e-6 (1 + ‖x‖) per coordinate.
inline std::vector<double> finite_difference_gradient(
    const StochasticOracle& oracle, std::span<const double> x, SampleId s) {
    const double h = 1e-6 * (1.0 + norm2(x));
    std::vector<double> xp(x.begin(), x.end());
    std::vector<double> g(x.size());
    for (std::size_t j = 0; j < x.size(); ++j) {
        const double orig = xp[j];
        xp[j] = orig + h;
        const double fp = oracle.evaluate_uncounted(xp, s).value;
        xp[j] = orig - h;
        const double fm = oracle.evaluate_uncounted(xp, s).value;
        xp[j] = orig;
        g[j] = (fp - fm) / (2.0 * h);
    }
    return g;
}

struct GradientCheckReport {
    std::size_t pairs_checked = 0;
    std::size_t failures = 0;
    double worst_relative_error = 0.0;
    bool passed() const { return failures == 0 && pairs_checked > 0; }
};

/// Compares analytic and central finite-difference gradients at n_pairs
/// random (point, sample) draws. Relative error is measured against
/// max(‖analytic‖, 1e-8) to stay meaningful near stationary points.
inline GradientCheckReport run_gradient_checks(const StochasticOracle& oracle,
                                               std::size_t n_pairs,
                                               double tolerance,
                                               std::uint64_t seed) {
    GradientCheckReport report;
    SplitMix64 rng(derive_seed(seed, Stream::test));
    const std::size_t d = oracle.dimension();
    std::vector<double> x(d);
    for (std::size_t trial = 0; trial < n_pairs; ++trial) {
        for (auto& v : x) v = rng.next_gaussian();
        SampleId s;
        if (oracle.mode() == OracleMode::finite_dataset) {
            s = {0, rng.next_below(oracle.dataset_size())};
        } else {
            s = {rng.next(), rng.next_below(1u << 20)};
        }
        const auto analytic = oracle.evaluate_uncounted(x, s).gradient;
        const auto numeric = finite_difference_gradient(oracle, x, s);
        double diff = 0.0;
        for (std::size_t j = 0; j < d; ++j)
            diff += (analytic[j] - numeric[j]) * (analytic[j] - numeric[j]);
        const double rel =
            std::sqrt(diff) / std::max(norm2(analytic), 1e-8);
        report.worst_relative_error =
            std::max(report.worst_relative_error, rel);
        if (!(rel <= tolerance)) ++report.failures;
        ++report.pairs_checked;
    }
    return report;
}

} // namespace retro
