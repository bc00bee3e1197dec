#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "retro/common.hpp"

namespace retro {

/// Eigenvalues of a dense symmetric matrix (row-major, n x n) by cyclic
/// Jacobi rotations. Intended for small diagnostic matrices (n up to a few
/// hundred); cost is O(n^3) per sweep.
inline std::vector<double> symmetric_eigenvalues(std::vector<double> a,
                                                 std::size_t n) {
    if (a.size() != n * n)
        throw contract_error("symmetric_eigenvalues: size mismatch");
    auto at = [&](std::size_t i, std::size_t j) -> double& {
        return a[i * n + j];
    };
    const int max_sweeps = 64;
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double off = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) off += at(i, j) * at(i, j);
        if (off < 1e-30) break;
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = at(p, q);
                if (apq == 0.0) continue;
                const double theta = (at(q, q) - at(p, p)) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) +
                                  std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = at(k, p);
                    const double akq = at(k, q);
                    at(k, p) = c * akp - s * akq;
                    at(k, q) = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = at(p, k);
                    const double aqk = at(q, k);
                    at(p, k) = c * apk - s * aqk;
                    at(q, k) = s * apk + c * aqk;
                }
            }
        }
    }
    std::vector<double> eigs(n);
    for (std::size_t i = 0; i < n; ++i) eigs[i] = at(i, i);
    std::sort(eigs.begin(), eigs.end());
    return eigs;
}

/// Ratio of extreme eigenvalues of a symmetric positive semi-definite matrix.
inline double condition_number(const std::vector<double>& a, std::size_t n) {
    const auto eigs = symmetric_eigenvalues(a, n);
    const double lo = eigs.front();
    const double hi = eigs.back();
    if (lo <= 0.0) return std::numeric_limits<double>::infinity();
    return hi / lo;
}

} // namespace retro
