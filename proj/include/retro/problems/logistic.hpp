#pragma once

#include <cmath>
#include <memory>

#include "retro/numerics.hpp"
#include "retro/oracle.hpp"
#include "retro/problems/dataset.hpp"
#include "retro/rng.hpp"

namespace retro {

namespace detail {

/// log(1 + exp(t)) without overflow for large |t|.
inline double softplus(double t) {
    if (t > 0.0) return t + std::log1p(std::exp(-t));
    return std::log1p(std::exp(t));
}

inline double sigmoid(double t) {
    if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
    const double e = std::exp(t);
    return e / (1.0 + e);
}

} // namespace detail

/// Binary logistic regression with log-loss over a finite dataset of
/// (features, 0/1 label) rows:
///   F(x, (X_i, y_i)) = log(1 + exp(X_i' x)) - y_i X_i' x.
/// Gradient: (sigmoid(X_i' x) - y_i) X_i. Per-sample smoothness bound:
/// ‖X_i‖^2 / 4.
class LogisticOracle : public StochasticOracle {
  public:
    explicit LogisticOracle(DatasetPtr data)
        : StochasticOracle(make_spec(*data)), data_(std::move(data)) {
        for (std::size_t i = 0; i < data_->rows; ++i) {
            const double y = data_->responses[i];
            if (y != 0.0 && y != 1.0)
                throw config_error("logistic labels must be 0 or 1; row " +
                                   std::to_string(i) + " has " +
                                   std::to_string(y));
        }
    }

    const Dataset& data() const { return *data_; }

    double sample_lipschitz(SampleId s) const override {
        check_sample(s);
        const auto xi = data_->row(s.index);
        return 0.25 * dot(xi, xi);
    }

  protected:
    void do_eval(std::span<const double> x, SampleId s, double& value,
                 std::span<double> grad) const override {
        const auto xi = data_->row(s.index);
        const double y = data_->responses[s.index];
        const double z = dot(xi, x);
        value = detail::softplus(z) - y * z;
        const double slope = detail::sigmoid(z) - y;
        for (std::size_t j = 0; j < grad.size(); ++j)
            grad[j] = slope * xi[j];
    }

    double do_value(std::span<const double> x, SampleId s) const override {
        const auto xi = data_->row(s.index);
        const double z = dot(xi, x);
        return detail::softplus(z) - data_->responses[s.index] * z;
    }

  private:
    static ProblemSpec make_spec(const Dataset& d) {
        ProblemSpec spec;
        spec.dimension = d.cols;
        spec.mode = OracleMode::finite_dataset;
        spec.dataset_size = d.rows;
        return spec;
    }

    DatasetPtr data_;
};

/// Synthetic logistic data: X_i standard normal, labels Bernoulli with
/// success probability sigmoid(X_i' theta) for a ground-truth theta drawn
/// from the same seed.
inline DatasetPtr generate_logistic_data(std::size_t p, std::size_t n,
                                         std::uint64_t seed) {
    if (p < 1 || n < 1)
        throw contract_error("logistic: p and N must be positive");
    SplitMix64 rng(derive_seed(seed, Stream::dataset));
    std::vector<double> theta(p);
    for (auto& t : theta) t = rng.next_gaussian();
    auto ds = std::make_shared<Dataset>();
    ds->rows = n;
    ds->cols = p;
    ds->features.resize(n * p);
    ds->responses.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        double z = 0.0;
        for (std::size_t j = 0; j < p; ++j) {
            const double xij = rng.next_gaussian();
            ds->features[i * p + j] = xij;
            z += xij * theta[j];
        }
        ds->responses[i] = rng.next_double() < detail::sigmoid(z) ? 1.0 : 0.0;
    }
    return ds;
}

inline std::unique_ptr<LogisticOracle> make_logistic(std::size_t p,
                                                     std::size_t n,
                                                     std::uint64_t seed) {
    return std::make_unique<LogisticOracle>(generate_logistic_data(p, n, seed));
}

inline std::unique_ptr<LogisticOracle> make_logistic_from_data(
    DatasetPtr data) {
    return std::make_unique<LogisticOracle>(std::move(data));
}

} // namespace retro
