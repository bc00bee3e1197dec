#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "retro/common.hpp"

namespace retro {

/// Compensated (Kahan) accumulator. Summation order still matters for
/// bit-exact reproducibility; this only shrinks the rounding error.
struct KahanSum {
    double sum = 0.0;
    double comp = 0.0;

    void add(double x) {
        const double y = x - comp;
        const double t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
};

/// Kahan accumulator over a fixed-length vector, one compensation term per
/// coordinate.
class KahanVector {
  public:
    explicit KahanVector(std::size_t n) : sum_(n, 0.0), comp_(n, 0.0) {}

    void add(std::span<const double> x) {
        for (std::size_t i = 0; i < sum_.size(); ++i) {
            const double y = x[i] - comp_[i];
            const double t = sum_[i] + y;
            comp_[i] = (t - sum_[i]) - y;
            sum_[i] = t;
        }
    }

    const std::vector<double>& sum() const { return sum_; }
    std::size_t size() const { return sum_.size(); }

  private:
    std::vector<double> sum_;
    std::vector<double> comp_;
};

inline double dot(std::span<const double> a, std::span<const double> b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) d += a[i] * b[i];
    return d;
}

inline double norm2(std::span<const double> a) {
    return std::sqrt(dot(a, a));
}

/// x += alpha * y
inline void axpy(double alpha, std::span<const double> y,
                 std::span<double> x) {
    for (std::size_t i = 0; i < x.size(); ++i) x[i] += alpha * y[i];
}

inline void scale(double alpha, std::span<double> x) {
    for (double& v : x) v *= alpha;
}

inline bool all_finite(std::span<const double> a) {
    for (double v : a)
        if (!std::isfinite(v)) return false;
    return true;
}

inline std::vector<double> negated(std::span<const double> g) {
    std::vector<double> p(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) p[i] = -g[i];
    return p;
}

/// Unbiased sample standard deviation; requires n >= 2.
inline double sample_stddev(std::span<const double> values) {
    const std::size_t n = values.size();
    if (n < 2)
        throw contract_error("sample_stddev: need at least two values");
    KahanSum mean_acc;
    for (double v : values) mean_acc.add(v);
    const double mean = mean_acc.sum / static_cast<double>(n);
    KahanSum var_acc;
    for (double v : values) var_acc.add((v - mean) * (v - mean));
    return std::sqrt(var_acc.sum / static_cast<double>(n - 1));
}

} // namespace retro
