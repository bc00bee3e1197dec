#pragma once

// Shared fixtures and independent reference computations used by tests:
// the finite-difference gradient here deliberately duplicates none of the
// library's evaluation plumbing beyond the oracle call itself.

#include <cmath>
#include <random>
#include <span>
#include <vector>

#include "retro/oracle.hpp"
#include "retro/rng.hpp"

namespace testutil {

/// Deterministic quadratic f(x) = x'Ax/2 - b'x, identical for every sample.
/// Streaming mode, zero-variance: the sample-path function equals the true
/// objective for every sample set.
class QuadraticOracle : public retro::StochasticOracle {
  public:
    QuadraticOracle(std::vector<double> a_rowmajor, std::vector<double> b)
        : retro::StochasticOracle(make_spec(b.size())),
          a_(std::move(a_rowmajor)), b_(std::move(b)) {}

    double sample_lipschitz(retro::SampleId) const override {
        double frob = 0.0;
        for (double v : a_) frob += v * v;
        return std::sqrt(frob);
    }

  protected:
    void do_eval(std::span<const double> x, retro::SampleId, double& value,
                 std::span<double> grad) const override {
        const std::size_t d = b_.size();
        double quad = 0.0;
        for (std::size_t i = 0; i < d; ++i) {
            double ax = 0.0;
            for (std::size_t j = 0; j < d; ++j) ax += a_[i * d + j] * x[j];
            grad[i] = ax - b_[i];
            quad += x[i] * ax;
        }
        double lin = 0.0;
        for (std::size_t i = 0; i < d; ++i) lin += b_[i] * x[i];
        value = 0.5 * quad - lin;
    }

  private:
    static retro::ProblemSpec make_spec(std::size_t d) {
        retro::ProblemSpec s;
        s.dimension = d;
        s.mode = retro::OracleMode::infinite_stream;
        return s;
    }
    std::vector<double> a_;
    std::vector<double> b_;
};

/// Constant-gradient linear objective f(x) = g'x; deterministic.
class LinearOracle : public retro::StochasticOracle {
  public:
    explicit LinearOracle(std::vector<double> g)
        : retro::StochasticOracle(make_spec(g.size())), g_(std::move(g)) {}

    double sample_lipschitz(retro::SampleId) const override { return 0.0; }

  protected:
    void do_eval(std::span<const double> x, retro::SampleId, double& value,
                 std::span<double> grad) const override {
        value = 0.0;
        for (std::size_t i = 0; i < g_.size(); ++i) {
            value += g_[i] * x[i];
            grad[i] = g_[i];
        }
    }

  private:
    static retro::ProblemSpec make_spec(std::size_t d) {
        retro::ProblemSpec s;
        s.dimension = d;
        s.mode = retro::OracleMode::infinite_stream;
        return s;
    }
    std::vector<double> g_;
};

/// Finite-dataset oracle with a prescribed per-sample value and 1-d
/// gradient; F(x, i) = value_i + grad_i * x. Used where tests need exact
/// per-sample outputs.
class TableOracle : public retro::StochasticOracle {
  public:
    TableOracle(std::vector<double> values, std::vector<double> grads)
        : retro::StochasticOracle(make_spec(values.size())),
          values_(std::move(values)), grads_(std::move(grads)) {}

    double sample_lipschitz(retro::SampleId) const override { return 0.0; }

  protected:
    void do_eval(std::span<const double> x, retro::SampleId s, double& value,
                 std::span<double> grad) const override {
        value = values_[s.index] + grads_[s.index] * x[0];
        grad[0] = grads_[s.index];
    }

  private:
    static retro::ProblemSpec make_spec(std::size_t n) {
        retro::ProblemSpec s;
        s.dimension = 1;
        s.mode = retro::OracleMode::finite_dataset;
        s.dataset_size = n;
        return s;
    }
    std::vector<double> values_;
    std::vector<double> grads_;
};

/// Wrapper that negates the wrapped oracle's gradients; the negative control
/// for gradient checking.
class NegatedGradientOracle : public retro::StochasticOracle {
  public:
    explicit NegatedGradientOracle(const retro::StochasticOracle& inner)
        : retro::StochasticOracle(inner.spec()), inner_(inner) {}

    double sample_lipschitz(retro::SampleId s) const override {
        return inner_.sample_lipschitz(s);
    }

  protected:
    void do_eval(std::span<const double> x, retro::SampleId s, double& value,
                 std::span<double> grad) const override {
        inner_.eval_raw(x, s, value, grad);
        for (double& g : grad) g = -g;
    }

  private:
    const retro::StochasticOracle& inner_;
};

/// Independent central-difference gradient, h = 1e-6 (1 + ‖x‖).
inline std::vector<double> fd_gradient(const retro::StochasticOracle& oracle,
                                       std::span<const double> x,
                                       retro::SampleId s) {
    double nx = 0.0;
    for (double v : x) nx += v * v;
    const double h = 1e-6 * (1.0 + std::sqrt(nx));
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

inline double rel_err(std::span<const double> got,
                      std::span<const double> want) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < got.size(); ++i) {
        num += (got[i] - want[i]) * (got[i] - want[i]);
        den += want[i] * want[i];
    }
    return std::sqrt(num) / std::max(std::sqrt(den), 1e-8);
}

/// Solves A x = b for dense SPD A (row-major) by Cholesky; the reference
/// linear-algebra path for solver tests.
inline std::vector<double> cholesky_solve(std::vector<double> a,
                                          std::vector<double> b) {
    const std::size_t n = b.size();
    std::vector<double> l(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            double sum = a[i * n + j];
            for (std::size_t k = 0; k < j; ++k)
                sum -= l[i * n + k] * l[j * n + k];
            if (i == j)
                l[i * n + i] = std::sqrt(sum);
            else
                l[i * n + j] = sum / l[j * n + j];
        }
    }
    // forward then backward substitution
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        double sum = b[i];
        for (std::size_t k = 0; k < i; ++k) sum -= l[i * n + k] * y[k];
        y[i] = sum / l[i * n + i];
    }
    std::vector<double> x(n);
    for (std::size_t ii = n; ii-- > 0;) {
        double sum = y[ii];
        for (std::size_t k = ii + 1; k < n; ++k) sum -= l[k * n + ii] * x[k];
        x[ii] = sum / l[ii * n + ii];
    }
    return x;
}

/// Seeded random SPD matrix A = B'B/d + ridge I.
inline std::vector<double> random_spd(std::size_t d, std::uint64_t seed,
                                      double ridge = 0.5) {
    retro::SplitMix64 rng(seed);
    std::vector<double> b(d * d);
    for (auto& v : b) v = rng.next_gaussian();
    std::vector<double> a(d * d, 0.0);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j) {
            double sum = 0.0;
            for (std::size_t k = 0; k < d; ++k)
                sum += b[k * d + i] * b[k * d + j];
            a[i * d + j] = sum / static_cast<double>(d);
        }
    for (std::size_t i = 0; i < d; ++i) a[i * d + i] += ridge;
    return a;
}

inline std::vector<double> random_vector(std::size_t d, std::uint64_t seed) {
    retro::SplitMix64 rng(seed);
    std::vector<double> v(d);
    for (auto& x : v) x = rng.next_gaussian();
    return v;
}

} // namespace testutil
