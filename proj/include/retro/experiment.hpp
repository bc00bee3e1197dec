#pragma once

#include <filesystem>
#include <fstream>
#include <future>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "retro/checks.hpp"
#include "retro/config.hpp"
#include "retro/trace_io.hpp"

namespace retro {

struct ReplicationOutcome {
    int replication = 0;
    bool ok = false;
    std::string error;
};

struct ExperimentResult {
    std::vector<RunTrace> traces; // completed replications, in order
    std::vector<ReplicationOutcome> outcomes;
    AggregateSeries aggregate;
    std::filesystem::path output_dir;
};

namespace detail {

inline RunTrace run_one_replication(const ExperimentConfig& cfg,
                                    const StochasticOracle& oracle,
                                    const std::vector<double>& x0,
                                    std::uint64_t seed,
                                    std::uint64_t fingerprint,
                                    bool store_iterates = false) {
    switch (cfg.algorithm) {
        case Algorithm::ra: {
            RaOptions opts;
            opts.warm_start = cfg.ra.warm_start;
            opts.carry_memory = cfg.ra.carry_memory;
            opts.nested_sampling = cfg.ra.nested_sampling;
            opts.record_wall_time = cfg.record_wall_time;
            opts.store_iterates = store_iterates;
            opts.eval = cfg.eval;
            opts.config_fingerprint = fingerprint;
            return run_ra(oracle, x0, cfg.ra.schedule, cfg.ra.tolerance,
                          cfg.ra.weights, cfg.ra.solver,
                          cfg.ra.outer_iterations, seed, opts);
        }
        case Algorithm::sgd: {
            BaselineOptions opts;
            opts.record_wall_time = cfg.record_wall_time;
            opts.store_iterates = store_iterates;
            opts.eval = cfg.eval;
            opts.config_fingerprint = fingerprint;
            SgdConfig sc;
            sc.step_size = cfg.baseline.step_size;
            sc.batch_size = cfg.baseline.batch_size;
            sc.total_steps = cfg.baseline.total_steps;
            return run_sgd(oracle, x0, sc, seed, cfg.baseline.eval_cadence,
                           opts);
        }
        case Algorithm::adam: {
            BaselineOptions opts;
            opts.record_wall_time = cfg.record_wall_time;
            opts.store_iterates = store_iterates;
            opts.eval = cfg.eval;
            opts.config_fingerprint = fingerprint;
            AdamConfig ac;
            ac.step_size = cfg.baseline.step_size;
            ac.beta1 = cfg.baseline.beta1;
            ac.beta2 = cfg.baseline.beta2;
            ac.eps_hat = cfg.baseline.eps_hat;
            ac.batch_size = cfg.baseline.batch_size;
            ac.total_steps = cfg.baseline.total_steps;
            return run_adam(oracle, x0, ac, seed, cfg.baseline.eval_cadence,
                            opts);
        }
    }
    throw config_error("unknown algorithm");
}

inline std::string fingerprint_hex(std::uint64_t fp) {
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << fp;
    return os.str();
}

} // namespace detail

inline json aggregate_to_json(const AggregateSeries& agg,
                              const std::vector<std::string>& warnings = {}) {
    json j;
    j["x_axis"] = to_string(agg.x_axis);
    j["replications"] = agg.replications;
    j["grid"] = agg.grid;
    j["loss"] = {{"q25", agg.loss_q25},
                 {"median", agg.loss_median},
                 {"q75", agg.loss_q75}};
    j["grad_norm_true"] = {{"q25", agg.grad_q25},
                           {"median", agg.grad_median},
                           {"q75", agg.grad_q75}};
    j["warnings"] = warnings;
    return j;
}

/// Builds the oracle for one replication; index -1 requests the dimension
/// probe. Overridable so custom problems (and tests) can plug in their own
/// oracle while keeping the harness's seeding, files, and aggregation.
using OracleFactory =
    std::function<std::unique_ptr<StochasticOracle>(int replication)>;

/// Runs all replications (replication r uses seed base_seed + r; every
/// replication starts from the same initial point), writes one trace file
/// per completed replication plus aggregate.json and resolved_config.json,
/// and aggregates quantile bands across whatever completed.
inline ExperimentResult run_experiment(
    const ExperimentConfig& cfg,
    std::optional<std::filesystem::path> output_override = std::nullopt,
    bool write_files = true, const OracleFactory& factory_override = {}) {
    ExperimentResult result;
    result.output_dir =
        output_override ? *output_override
                        : std::filesystem::path(cfg.output_dir);

    const DatasetPtr dataset = build_dataset(cfg.problem);
    const std::uint64_t fingerprint = config_fingerprint(cfg);
    const OracleFactory factory =
        factory_override
            ? factory_override
            : OracleFactory([&cfg, dataset](int) {
                  return build_oracle(cfg.problem, dataset);
              });

    // One probe oracle to fix the dimension (csv dimensions are only known
    // after the file loads).
    const auto probe = factory(-1);
    const std::size_t d = probe->dimension();
    const std::vector<double> x0 = make_initial_point(cfg, d);

    const int reps = cfg.replications;
    std::vector<std::optional<RunTrace>> traces(
        static_cast<std::size_t>(reps));
    result.outcomes.resize(static_cast<std::size_t>(reps));

    const unsigned wave =
        std::max(1u, std::min(max_threads(), static_cast<unsigned>(reps)));
    for (int base = 0; base < reps; base += static_cast<int>(wave)) {
        const int hi = std::min(reps, base + static_cast<int>(wave));
        std::vector<std::future<RunTrace>> futures;
        futures.reserve(static_cast<std::size_t>(hi - base));
        for (int r = base; r < hi; ++r) {
            futures.push_back(std::async(std::launch::async, [&, r] {
                const auto oracle = factory(r);
                return detail::run_one_replication(
                    cfg, *oracle, x0, cfg.base_seed + static_cast<std::uint64_t>(r),
                    fingerprint);
            }));
        }
        for (int r = base; r < hi; ++r) {
            auto& outcome = result.outcomes[static_cast<std::size_t>(r)];
            outcome.replication = r;
            try {
                traces[static_cast<std::size_t>(r)] =
                    futures[static_cast<std::size_t>(r - base)].get();
                outcome.ok = true;
            } catch (const std::exception& e) {
                outcome.ok = false;
                outcome.error = e.what();
            }
        }
    }

    std::vector<std::string> warnings;
    for (const auto& outcome : result.outcomes)
        if (!outcome.ok)
            warnings.push_back("replication " +
                               std::to_string(outcome.replication) +
                               " failed: " + outcome.error);

    if (write_files) std::filesystem::create_directories(result.output_dir);
    for (int r = 0; r < reps; ++r) {
        if (!traces[static_cast<std::size_t>(r)]) continue;
        if (write_files)
            write_trace_csv(*traces[static_cast<std::size_t>(r)],
                            result.output_dir /
                                ("trace_r" + std::to_string(r) + ".csv"));
        result.traces.push_back(std::move(*traces[static_cast<std::size_t>(r)]));
    }

    result.aggregate = aggregate_traces(result.traces, cfg.x_axis);
    if (write_files) {
        {
            std::ofstream out(result.output_dir / "aggregate.json",
                              std::ios::binary);
            out << aggregate_to_json(result.aggregate, warnings).dump(2)
                << '\n';
        }
        {
            json meta;
            meta["config"] = to_json(cfg);
            meta["fingerprint"] = detail::fingerprint_hex(fingerprint);
            std::ofstream out(result.output_dir / "resolved_config.json",
                              std::ios::binary);
            out << meta.dump(2) << '\n';
        }
    }
    return result;
}

struct SelfCheckItem {
    std::string name;
    bool passed = false;
    std::string detail;
};

struct SelfCheckReport {
    std::vector<SelfCheckItem> items;
    bool all_passed() const {
        for (const auto& i : items)
            if (!i.passed) return false;
        return !items.empty();
    }
};

/// Re-derives the sample sets of a run from its seed (the draws are a pure
/// function of (seed, k)) and re-evaluates the sample-path gradient at each
/// recorded solution.
inline std::vector<SampleSet> replay_sample_sets(
    const StochasticOracle& oracle, const SampleSizeSchedule& sched,
    std::uint64_t seed, int upto_k, bool nested) {
    std::vector<SampleSet> sets;
    std::uint64_t m_prev = 0;
    for (int k = 1; k <= upto_k; ++k) {
        const std::uint64_t m_k = next_sample_size(
            sched, k,
            k == 1 ? std::nullopt : std::optional<std::uint64_t>(m_prev));
        SplitMix64 rng(derive_seed(seed, Stream::sample_draw,
                                   static_cast<std::uint64_t>(k)));
        if (nested && k > 1)
            sets.push_back(grow_sample_set(oracle, sets.back(), m_k, k, rng));
        else
            sets.push_back(draw_sample_set(oracle, m_k, k, rng));
        m_prev = m_k;
    }
    return sets;
}

/// Built-in diagnostics: analytic-vs-finite-difference gradient checks on
/// the configured problem, schedule validity diagnostics, and a short smoke
/// run whose termination certificates and work accounting are re-verified
/// by replay.
inline SelfCheckReport self_check(const ExperimentConfig& cfg) {
    SelfCheckReport report;
    const DatasetPtr dataset = build_dataset(cfg.problem);
    const auto oracle = build_oracle(cfg.problem, dataset);

    {
        SelfCheckItem item;
        item.name = "gradient-check";
        const auto gc = run_gradient_checks(*oracle, 100, 1e-5,
                                            cfg.base_seed);
        item.passed = gc.passed();
        std::ostringstream os;
        os << gc.pairs_checked << " pairs, worst relative error "
           << gc.worst_relative_error;
        if (gc.failures > 0) os << ", " << gc.failures << " failures";
        item.detail = os.str();
        report.items.push_back(item);
    }

    if (const auto* ls = dynamic_cast<const LeastSquaresOracle*>(oracle.get())) {
        SelfCheckItem item;
        item.name = "conditioning";
        const auto [lo, hi] = ls->gram_extreme_eigenvalues();
        std::ostringstream os;
        os << "observed Gram matrix condition number "
           << ls->gram_condition_number() << " (eigenvalues " << lo << " .. "
           << hi << ")";
        item.detail = os.str();
        item.passed = true; // informational
        report.items.push_back(item);
    }

    if (cfg.algorithm == Algorithm::ra) {
        SelfCheckItem item;
        item.name = "schedule-summability";
        try {
            const auto rep =
                check_summability(cfg.ra.schedule, cfg.ra.tolerance, 50);
            std::ostringstream os;
            os << rep.schedule_kind << ": verdict " << to_string(rep.verdict)
               << ", partial sum " << rep.partial_sum << " over "
               << rep.horizon << " iterations";
            if (rep.verdict == SummabilityVerdict::summable)
                os << ", series bound " << rep.geometric_tail_bound;
            if (rep.eps_condition_inherits)
                os << "; tolerance rule inherits the sample-size condition";
            item.detail = os.str();
            // Monotone growth is required of the multiplicative schedules.
            bool monotone = true;
            if (cfg.ra.schedule.kind != SampleSizeSchedule::Kind::fixed_list) {
                std::optional<std::uint64_t> prev;
                std::uint64_t last = 0;
                for (int k = 1; k <= 50; ++k) {
                    const auto m = next_sample_size(cfg.ra.schedule, k, prev);
                    if (k > 1 && m <= last) monotone = false;
                    prev = m;
                    last = m;
                }
            }
            item.passed = monotone;
            if (!monotone) item.detail += "; sample sizes fail to increase";
        } catch (const std::exception& e) {
            item.passed = false;
            item.detail = e.what();
        }
        report.items.push_back(item);
    }

    {
        SelfCheckItem item;
        item.name = cfg.algorithm == Algorithm::ra ? "tolerance-certificate"
                                                   : "work-accounting";
        try {
            ExperimentConfig smoke = cfg;
            smoke.replications = 1;
            if (smoke.algorithm == Algorithm::ra)
                smoke.ra.outer_iterations =
                    std::min(smoke.ra.outer_iterations, 5);
            else
                smoke.baseline.total_steps =
                    std::min<std::uint64_t>(smoke.baseline.total_steps, 50);
            const auto smoke_oracle = build_oracle(smoke.problem, dataset);
            const std::vector<double> x0 =
                make_initial_point(smoke, smoke_oracle->dimension());
            const RunTrace trace = detail::run_one_replication(
                smoke, *smoke_oracle, x0, smoke.base_seed,
                config_fingerprint(smoke), /*store_iterates=*/true);

            std::ostringstream os;
            bool ok = true;

            // Work bookkeeping must match the oracle's own counters exactly.
            const WorkCounters counters = smoke_oracle->counters();
            const auto& last = trace.records.back();
            if (counters.work != last.cumulative_oracle_work ||
                counters.gradients != last.cumulative_gradient_evals) {
                ok = false;
                os << "work counters disagree with the trace; ";
            }

            if (smoke.algorithm == Algorithm::ra) {
                const auto sets = replay_sample_sets(
                    *smoke_oracle, smoke.ra.schedule, smoke.base_seed,
                    smoke.ra.outer_iterations, smoke.ra.nested_sampling);
                for (std::size_t i = 0; i < trace.records.size(); ++i) {
                    const auto& rec = trace.records[i];
                    if (rec.inner_status != InnerStatus::converged) continue;
                    const auto replay = eval_ids_uncounted(
                        *smoke_oracle, sets[i].ids, trace.iterates[i]);
                    if (!(replay.grad_norm <= rec.eps_k) ||
                        replay.grad_norm != rec.grad_norm_sample_path) {
                        ok = false;
                        os << "certificate failed at k=" << rec.k << "; ";
                    }
                }
                os << trace.records.size() << " outer iterations replayed";
            } else {
                os << trace.records.size() << " records checked";
            }
            item.passed = ok;
            item.detail = os.str();
        } catch (const std::exception& e) {
            item.passed = false;
            item.detail = e.what();
        }
        report.items.push_back(item);
    }

    if (cfg.rate_check) {
        SelfCheckItem item;
        item.name = "rate-decay-report";
        try {
            std::ostringstream os;
            const int horizon = cfg.algorithm == Algorithm::ra
                                    ? cfg.ra.outer_iterations
                                    : 10;
            os << "reference bound:";
            for (int k = 1; k <= horizon; ++k)
                os << " k" << k << "="
                   << reference_decay_bound(*cfg.rate_check, k);
            item.passed = true;
            item.detail = os.str();
        } catch (const std::exception& e) {
            item.passed = false;
            item.detail = e.what();
        }
        report.items.push_back(item);
    }
    return report;
}

/// Runs the experiment once per sweep value, rewriting one dotted config key
/// each time; outputs land in "<output_dir>/<key>=<value>".
inline std::vector<ExperimentResult> run_sweep(
    const ExperimentConfig& base, const std::string& dotted_key,
    const std::vector<std::string>& raw_values) {
    if (raw_values.empty())
        throw config_error("sweep: no values given");
    json base_json = to_json(base);
    std::string pointer = "/" + dotted_key;
    for (auto& c : pointer)
        if (c == '.') c = '/';

    std::vector<ExperimentResult> results;
    for (const auto& raw : raw_values) {
        json value;
        try {
            value = json::parse(raw);
        } catch (const json::parse_error&) {
            value = raw; // plain string value
        }
        json patched = base_json;
        patched[json::json_pointer(pointer)] = value;
        ExperimentConfig cfg = parse_experiment_config(patched);
        const std::filesystem::path out =
            std::filesystem::path(base.output_dir) /
            (dotted_key + "=" + raw);
        results.push_back(run_experiment(cfg, out));
    }
    return results;
}

} // namespace retro
