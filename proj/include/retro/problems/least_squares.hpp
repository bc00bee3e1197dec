#pragma once

#include <cmath>
#include <memory>
#include <optional>

#include "retro/eigs.hpp"
#include "retro/numerics.hpp"
#include "retro/oracle.hpp"
#include "retro/problems/dataset.hpp"
#include "retro/rng.hpp"

namespace retro {

/// Scalar-response least squares over a finite dataset:
///   F(beta, (X_i, Y_i)) = (Y_i - X_i' beta)^2.
/// The gradient is 2 (X_i' beta - Y_i) X_i and the per-sample smoothness
/// bound is 2 ‖X_i‖^2.
class LeastSquaresOracle : public StochasticOracle {
  public:
    LeastSquaresOracle(DatasetPtr data,
                       std::optional<std::vector<double>> beta_true)
        : StochasticOracle(make_spec(*data, beta_true)),
          data_(std::move(data)), beta_true_(std::move(beta_true)) {}

    const Dataset& data() const { return *data_; }

    const std::optional<std::vector<double>>& beta_true() const {
        return beta_true_;
    }

    /// Gram matrix N^{-1} X'X, row-major p x p.
    std::vector<double> gram_matrix() const {
        const std::size_t p = dimension();
        const std::size_t n = data_->rows;
        std::vector<double> gram(p * p, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            const auto xi = data_->row(i);
            for (std::size_t a = 0; a < p; ++a)
                for (std::size_t b = a; b < p; ++b)
                    gram[a * p + b] += xi[a] * xi[b];
        }
        for (std::size_t a = 0; a < p; ++a)
            for (std::size_t b = a; b < p; ++b) {
                gram[a * p + b] /= static_cast<double>(n);
                gram[b * p + a] = gram[a * p + b];
            }
        return gram;
    }

    /// Condition number of the observed Gram matrix; the conditioning
    /// diagnostic reported by the harness.
    double gram_condition_number() const {
        return condition_number(gram_matrix(), dimension());
    }

    /// Extreme eigenvalues (min, max) of the observed Gram matrix.
    std::pair<double, double> gram_extreme_eigenvalues() const {
        const auto eigs = symmetric_eigenvalues(gram_matrix(), dimension());
        return {eigs.front(), eigs.back()};
    }

    double sample_lipschitz(SampleId s) const override {
        check_sample(s);
        const auto xi = data_->row(s.index);
        return 2.0 * dot(xi, xi);
    }

  protected:
    void do_eval(std::span<const double> x, SampleId s, double& value,
                 std::span<double> grad) const override {
        const auto xi = data_->row(s.index);
        const double resid = dot(xi, x) - data_->responses[s.index];
        value = resid * resid;
        for (std::size_t j = 0; j < grad.size(); ++j)
            grad[j] = 2.0 * resid * xi[j];
    }

    double do_value(std::span<const double> x, SampleId s) const override {
        const auto xi = data_->row(s.index);
        const double resid = dot(xi, x) - data_->responses[s.index];
        return resid * resid;
    }

  private:
    static ProblemSpec make_spec(
        const Dataset& d, const std::optional<std::vector<double>>& beta) {
        ProblemSpec spec;
        spec.dimension = d.cols;
        spec.mode = OracleMode::finite_dataset;
        spec.dataset_size = d.rows;
        spec.known_optimum = beta; // noiseless conditional mean, not the MLE
        return spec;
    }

    DatasetPtr data_;
    std::optional<std::vector<double>> beta_true_;
};

/// Generates the synthetic least-squares dataset: X_i standard normal rows,
/// responses Y_i | X_i ~ N(X_i' beta, 1) with beta = (1, 2, ..., p).
/// When condition_target is set, feature columns are scaled by a geometric
/// diagonal ramp so the observed Gram matrix reaches roughly that condition
/// number; responses are generated from the scaled features, so beta stays
/// the true coefficient vector.
inline DatasetPtr generate_least_squares_data(
    std::size_t p, std::size_t n, std::uint64_t seed,
    std::optional<double> condition_target = std::nullopt) {
    if (p < 1 || n < 1)
        throw contract_error("least_squares: p and N must be positive");
    std::vector<double> diag(p, 1.0);
    if (condition_target && p > 1) {
        for (std::size_t j = 0; j < p; ++j)
            diag[j] = std::pow(*condition_target,
                               -0.5 * static_cast<double>(j) /
                                   static_cast<double>(p - 1));
    }
    auto ds = std::make_shared<Dataset>();
    ds->rows = n;
    ds->cols = p;
    ds->features.resize(n * p);
    ds->responses.resize(n);
    SplitMix64 rng(derive_seed(seed, Stream::dataset));
    for (std::size_t i = 0; i < n; ++i) {
        double mean = 0.0;
        for (std::size_t j = 0; j < p; ++j) {
            const double xij = diag[j] * rng.next_gaussian();
            ds->features[i * p + j] = xij;
            mean += xij * static_cast<double>(j + 1);
        }
        ds->responses[i] = mean + rng.next_gaussian();
    }
    return ds;
}

inline std::unique_ptr<LeastSquaresOracle> make_least_squares(
    std::size_t p, std::size_t n, std::uint64_t seed,
    std::optional<double> condition_target = std::nullopt) {
    auto data = generate_least_squares_data(p, n, seed, condition_target);
    std::vector<double> beta(p);
    for (std::size_t j = 0; j < p; ++j)
        beta[j] = static_cast<double>(j + 1);
    return std::make_unique<LeastSquaresOracle>(std::move(data),
                                                std::move(beta));
}

/// Least squares over rows ingested from a CSV file.
inline std::unique_ptr<LeastSquaresOracle> make_least_squares_from_data(
    DatasetPtr data) {
    return std::make_unique<LeastSquaresOracle>(std::move(data),
                                                std::nullopt);
}

} // namespace retro
