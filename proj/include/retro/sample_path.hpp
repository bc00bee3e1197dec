#pragma once

#include <atomic>
#include <cstdint>
#include <thread>
#include <vector>

#include "retro/numerics.hpp"
#include "retro/oracle.hpp"
#include "retro/rng.hpp"

namespace retro {

/// A frozen bag of sample identifiers defining one sample-path problem.
/// Immutable after construction: the same set always defines the same
/// finite-average objective.
struct SampleSet {
    std::vector<SampleId> ids;
    int generation_index = 0;

    std::size_t size() const { return ids.size(); }
};

/// Exact finite average over a SampleSet: value, gradient, gradient norm.
struct SamplePathEval {
    double value = 0.0;
    std::vector<double> gradient;
    double grad_norm = 0.0;
};

namespace detail {

// Fixed chunk width for compensated reduction. Chunk boundaries depend only
// on the sample count, so results are bit-identical for any worker count.
inline constexpr std::size_t kEvalChunk = 1024;
inline constexpr std::size_t kParallelThreshold = 8192;

struct ChunkPartial {
    double value = 0.0;
    std::vector<double> grad;
};

template <typename PerChunk>
inline void for_each_chunk(std::size_t n_chunks, const PerChunk& body) {
    const unsigned workers = max_threads();
    if (workers <= 1 || n_chunks <= 1) {
        for (std::size_t c = 0; c < n_chunks; ++c) body(c);
        return;
    }
    std::atomic<std::size_t> next{0};
    auto pump = [&] {
        for (std::size_t c = next.fetch_add(1); c < n_chunks;
             c = next.fetch_add(1))
            body(c);
    };
    const unsigned spawn =
        static_cast<unsigned>(std::min<std::size_t>(workers - 1, n_chunks - 1));
    std::vector<std::thread> pool;
    pool.reserve(spawn);
    for (unsigned t = 0; t < spawn; ++t) pool.emplace_back(pump);
    pump();
    for (auto& th : pool) th.join();
}

/// Average of per-sample values (and gradients when grad_out != nullptr)
/// over a list of ids. Kahan summation inside fixed chunks, then a Kahan
/// pass over chunk partials in index order: the reduction is deterministic
/// and independent of the worker count.
inline double average_over_ids(const StochasticOracle& oracle,
                               std::span<const SampleId> ids,
                               std::span<const double> x,
                               std::vector<double>* grad_out, bool charged) {
    oracle.check_point(x);
    const std::size_t m = ids.size();
    if (m == 0)
        throw contract_error("sample set is empty");
    for (const SampleId& s : ids) oracle.check_sample(s);
    const std::size_t d = oracle.dimension();
    const bool with_grad = grad_out != nullptr;
    const std::size_t n_chunks = (m + kEvalChunk - 1) / kEvalChunk;

    std::vector<ChunkPartial> partials(n_chunks);
    const bool parallel = m >= kParallelThreshold;
    auto eval_chunk = [&](std::size_t c) {
        const std::size_t lo = c * kEvalChunk;
        const std::size_t hi = std::min(lo + kEvalChunk, m);
        KahanSum value_acc;
        KahanVector grad_acc(with_grad ? d : 0);
        std::vector<double> scratch(with_grad ? d : 0);
        for (std::size_t i = lo; i < hi; ++i) {
            if (with_grad) {
                double v = 0.0;
                oracle.eval_raw(x, ids[i], v, scratch);
                value_acc.add(v);
                grad_acc.add(scratch);
            } else {
                value_acc.add(oracle.value_raw(x, ids[i]));
            }
        }
        partials[c].value = value_acc.sum;
        if (with_grad) partials[c].grad = grad_acc.sum();
    };
    if (parallel)
        for_each_chunk(n_chunks, eval_chunk);
    else
        for (std::size_t c = 0; c < n_chunks; ++c) eval_chunk(c);

    KahanSum value_acc;
    KahanVector grad_acc(with_grad ? d : 0);
    for (const auto& part : partials) {
        value_acc.add(part.value);
        if (with_grad) grad_acc.add(part.grad);
    }
    const double inv_m = 1.0 / static_cast<double>(m);
    if (with_grad) {
        *grad_out = grad_acc.sum();
        for (double& g : *grad_out) g *= inv_m;
    }
    if (charged)
        oracle.charge(m, with_grad ? m : 0);
    return value_acc.sum * inv_m;
}

} // namespace detail

/// Draws M sample identifiers for outer iteration k. The draw depends only
/// on the rng stream (never on the current iterate). Finite-dataset oracles
/// get uniform indices with replacement; streaming oracles get a fresh
/// counter block under a stream seed drawn from rng.
inline SampleSet draw_sample_set(const StochasticOracle& oracle,
                                 std::uint64_t m, int k, SplitMix64& rng) {
    if (m < 1)
        throw contract_error("draw_sample_set: M must be positive");
    SampleSet set;
    set.generation_index = k;
    set.ids.reserve(m);
    if (oracle.mode() == OracleMode::finite_dataset) {
        const std::uint64_t n = oracle.dataset_size();
        for (std::uint64_t j = 0; j < m; ++j)
            set.ids.push_back({0, rng.next_below(n)});
    } else {
        const std::uint64_t stream = rng.next();
        for (std::uint64_t j = 0; j < m; ++j)
            set.ids.push_back({stream, j});
    }
    return set;
}

/// Nested variant: keeps every id of the previous set and appends fresh
/// draws up to the new size.
inline SampleSet grow_sample_set(const StochasticOracle& oracle,
                                 const SampleSet& prev, std::uint64_t m,
                                 int k, SplitMix64& rng) {
    if (m < prev.size())
        throw contract_error("grow_sample_set: sets never shrink");
    SampleSet grown;
    grown.generation_index = k;
    grown.ids = prev.ids;
    if (m > prev.size()) {
        const SampleSet fresh =
            draw_sample_set(oracle, m - prev.size(), k, rng);
        grown.ids.insert(grown.ids.end(), fresh.ids.begin(),
                         fresh.ids.end());
    }
    return grown;
}

/// f_M(x) and its gradient as exact averages over the set. Charges M work
/// units and M gradient evaluations.
inline SamplePathEval eval_sample_path(const StochasticOracle& oracle,
                                       const SampleSet& set,
                                       std::span<const double> x) {
    SamplePathEval out;
    out.value = detail::average_over_ids(oracle, set.ids, x, &out.gradient,
                                         /*charged=*/true);
    out.grad_norm = norm2(out.gradient);
    return out;
}

/// f_M(x) only (line-search probes). Charges M work units and no gradient
/// evaluations.
inline double eval_sample_path_value(const StochasticOracle& oracle,
                                     const SampleSet& set,
                                     std::span<const double> x) {
    return detail::average_over_ids(oracle, set.ids, x, nullptr,
                                    /*charged=*/true);
}

/// Uncounted average over explicit ids; measurement instrumentation.
inline SamplePathEval eval_ids_uncounted(const StochasticOracle& oracle,
                                         std::span<const SampleId> ids,
                                         std::span<const double> x) {
    SamplePathEval out;
    out.value = detail::average_over_ids(oracle, ids, x, &out.gradient,
                                         /*charged=*/false);
    out.grad_norm = norm2(out.gradient);
    return out;
}

/// Sample standard deviation of per-sample gradient norms over a uniformly
/// chosen subset of the set (size m_sigma, drawn without replacement from
/// subset_rng). Deterministic given the rng state. Charges m_sigma work
/// units and m_sigma gradient evaluations.
inline double estimate_grad_norm_sigma(const StochasticOracle& oracle,
                                       const SampleSet& set,
                                       std::span<const double> x,
                                       std::size_t m_sigma,
                                       SplitMix64& subset_rng) {
    oracle.check_point(x);
    const std::size_t m = set.size();
    if (m_sigma < 2)
        throw contract_error(
            "estimate_grad_norm_sigma: subset size must be at least 2");
    if (m_sigma > m)
        throw contract_error(
            "estimate_grad_norm_sigma: subset larger than the sample set");

    std::vector<std::size_t> pick(m);
    for (std::size_t i = 0; i < m; ++i) pick[i] = i;
    for (std::size_t i = 0; i < m_sigma; ++i) {
        const std::size_t j =
            i + static_cast<std::size_t>(subset_rng.next_below(m - i));
        std::swap(pick[i], pick[j]);
    }

    std::vector<double> norms(m_sigma);
    std::vector<double> scratch(oracle.dimension());
    double v = 0.0;
    for (std::size_t i = 0; i < m_sigma; ++i) {
        oracle.eval_raw(x, set.ids[pick[i]], v, scratch);
        norms[i] = norm2(scratch);
    }
    oracle.charge(m_sigma, m_sigma);
    return sample_stddev(norms);
}

} // namespace retro
