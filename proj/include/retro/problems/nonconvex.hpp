#pragma once

#include <cmath>
#include <memory>

#include "retro/numerics.hpp"
#include "retro/oracle.hpp"
#include "retro/rng.hpp"

namespace retro {

/// Parameters of the synthetic nonconvex streaming problem.
struct NonconvexParams {
    double amplitude = 0.8;       // sinusoidal perturbation amplitude
    double frequency = 3.0;       // perturbation frequency
    double noise_amplitude = 0.5; // std-dev of the per-sample center shift
    double center_scale = 1.0;    // std-dev of the hidden center coordinates
};

/// Smooth nonconvex streaming objective with a known stationary point.
/// Per coordinate u = x_j - c_j, with per-sample noise xi_j:
///   F(x, xi) = sum_j [ (u_j - xi_j)^2 / 2 + (A/w) (1 - cos(w u_j)) ]
///   dF/dx_j  = (u_j - xi_j) + A sin(w u_j)
/// The expectation has gradient u_j + A sin(w u_j), which vanishes at the
/// center x = c; for A w > 1 the expected Hessian 1 + A w cos(w u) takes
/// negative values, so the objective is genuinely nonconvex while c stays
/// the unique stationary point whenever A < inner root of u = -A sin(w u).
class NonconvexOracle : public StochasticOracle {
  public:
    NonconvexOracle(std::size_t p, std::uint64_t seed, NonconvexParams params)
        : StochasticOracle(make_spec(p, seed, params)), params_(params),
          seed_(seed), center_(*spec().known_optimum) {}

    const std::vector<double>& center() const { return center_; }
    const NonconvexParams& params() const { return params_; }

    /// Closed-form expectation of F at x.
    double expected_value(std::span<const double> x) const {
        check_point(x);
        const double a = params_.amplitude;
        const double w = params_.frequency;
        const double noise_var =
            params_.noise_amplitude * params_.noise_amplitude;
        KahanSum acc;
        for (std::size_t j = 0; j < x.size(); ++j) {
            const double u = x[j] - center_[j];
            acc.add(0.5 * (u * u + noise_var) +
                    (a / w) * (1.0 - std::cos(w * u)));
        }
        return acc.sum;
    }

    /// Closed-form gradient of the expectation at x.
    std::vector<double> expected_gradient(std::span<const double> x) const {
        check_point(x);
        std::vector<double> g(x.size());
        for (std::size_t j = 0; j < x.size(); ++j) {
            const double u = x[j] - center_[j];
            g[j] = u + params_.amplitude * std::sin(params_.frequency * u);
        }
        return g;
    }

    double sample_lipschitz(SampleId) const override {
        return 1.0 + params_.amplitude * params_.frequency;
    }

  protected:
    void do_eval(std::span<const double> x, SampleId s, double& value,
                 std::span<double> grad) const override {
        SplitMix64 rng(sample_key(s));
        const double a = params_.amplitude;
        const double w = params_.frequency;
        double acc = 0.0;
        for (std::size_t j = 0; j < x.size(); ++j) {
            const double xi = params_.noise_amplitude * rng.next_gaussian();
            const double u = x[j] - center_[j];
            const double shifted = u - xi;
            acc += 0.5 * shifted * shifted + (a / w) * (1.0 - std::cos(w * u));
            grad[j] = shifted + a * std::sin(w * u);
        }
        value = acc;
    }

  private:
    static ProblemSpec make_spec(std::size_t p, std::uint64_t seed,
                                 const NonconvexParams& prm) {
        if (p < 1)
            throw contract_error("nonconvex: p must be positive");
        ProblemSpec spec;
        spec.dimension = p;
        spec.mode = OracleMode::infinite_stream;
        spec.generator_params = {{"amplitude", prm.amplitude},
                                 {"frequency", prm.frequency},
                                 {"noise_amplitude", prm.noise_amplitude},
                                 {"center_scale", prm.center_scale}};
        std::vector<double> center(p);
        SplitMix64 rng(derive_seed(seed, Stream::dataset));
        for (auto& c : center) c = prm.center_scale * rng.next_gaussian();
        spec.known_optimum = std::move(center);
        return spec;
    }

    std::uint64_t sample_key(SampleId s) const {
        return derive_seed(seed_ ^ s.stream_seed, Stream::dataset, s.index);
    }

    NonconvexParams params_;
    std::uint64_t seed_;
    std::vector<double> center_;
};

inline std::unique_ptr<NonconvexOracle> make_nonconvex_test(
    std::size_t p, std::uint64_t seed, NonconvexParams params = {}) {
    return std::make_unique<NonconvexOracle>(p, seed, params);
}

} // namespace retro
