#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "retro/aggregate.hpp"
#include "retro/baselines.hpp"
#include "retro/driver.hpp"
#include "retro/problems/csv_data.hpp"
#include "retro/problems/least_squares.hpp"
#include "retro/problems/logistic.hpp"
#include "retro/problems/nonconvex.hpp"
#include "retro/schedule.hpp"

namespace retro {

using nlohmann::json;

namespace detail {

/// Strict accessor over one JSON object: typed getters record which keys
/// were consumed, and done() rejects anything left over, so misspelled or
/// unknown keys fail loudly with their dotted path.
class JsonSection {
  public:
    JsonSection(const json& j, std::string path)
        : j_(j), path_(std::move(path)) {
        if (!j_.is_object())
            throw config_error(path_ + ": expected an object");
    }

    bool has(const std::string& key) const { return j_.contains(key); }

    const json& raw(const std::string& key) {
        mark(key);
        if (!j_.contains(key))
            throw config_error(dotted(key) + ": missing required key");
        return j_.at(key);
    }

    JsonSection section(const std::string& key) {
        return JsonSection(raw(key), dotted(key));
    }

    std::optional<JsonSection> optional_section(const std::string& key) {
        if (!has(key)) return std::nullopt;
        return section(key);
    }

    double number(const std::string& key) {
        const json& v = raw(key);
        if (!v.is_number())
            throw config_error(dotted(key) + ": expected a number");
        return v.get<double>();
    }

    double number(const std::string& key, double fallback) {
        return has(key) ? number(key) : fallback;
    }

    std::int64_t integer(const std::string& key) {
        const json& v = raw(key);
        if (!v.is_number_integer())
            throw config_error(dotted(key) + ": expected an integer");
        return v.get<std::int64_t>();
    }

    std::int64_t integer(const std::string& key, std::int64_t fallback) {
        return has(key) ? integer(key) : fallback;
    }

    std::uint64_t unsigned_integer(const std::string& key) {
        const json& v = raw(key);
        if (v.is_number_unsigned()) return v.get<std::uint64_t>();
        if (v.is_number_integer() && v.get<std::int64_t>() >= 0)
            return static_cast<std::uint64_t>(v.get<std::int64_t>());
        throw config_error(dotted(key) + ": expected a nonnegative integer");
    }

    std::uint64_t unsigned_integer(const std::string& key,
                                   std::uint64_t fallback) {
        return has(key) ? unsigned_integer(key) : fallback;
    }

    bool boolean(const std::string& key, bool fallback) {
        if (!has(key)) return fallback;
        const json& v = raw(key);
        if (!v.is_boolean())
            throw config_error(dotted(key) + ": expected a boolean");
        return v.get<bool>();
    }

    std::string string(const std::string& key) {
        const json& v = raw(key);
        if (!v.is_string())
            throw config_error(dotted(key) + ": expected a string");
        return v.get<std::string>();
    }

    std::string string(const std::string& key, const std::string& fallback) {
        return has(key) ? string(key) : fallback;
    }

    std::vector<double> number_array(const std::string& key) {
        const json& v = raw(key);
        if (!v.is_array())
            throw config_error(dotted(key) + ": expected an array");
        std::vector<double> out;
        for (const auto& e : v) {
            if (!e.is_number())
                throw config_error(dotted(key) +
                                   ": expected an array of numbers");
            out.push_back(e.get<double>());
        }
        return out;
    }

    std::string dotted(const std::string& key) const {
        return path_.empty() ? key : path_ + "." + key;
    }

    void done() const {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!seen_.count(it.key()))
                throw config_error("unknown key '" + dotted(it.key()) + "'");
    }

  private:
    void mark(const std::string& key) { seen_.insert(key); }

    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

} // namespace detail

struct ProblemConfig {
    enum class Kind { least_squares, logistic, nonconvex };
    Kind kind = Kind::least_squares;
    std::size_t p = 10;
    std::uint64_t n = 1000;
    std::uint64_t seed = 1;
    std::optional<double> condition_target;
    std::optional<std::string> csv_path;
    NonconvexParams nonconvex;
};

struct InitConfig {
    enum class Kind { zeros, gaussian };
    Kind kind = Kind::zeros;
    double scale = 1.0;
};

struct RaConfig {
    int outer_iterations = 10;
    bool warm_start = true;
    bool carry_memory = true;
    bool nested_sampling = false;
    WeightRule weights;
    SampleSizeSchedule schedule;
    ToleranceSchedule tolerance;
    SolverOptions solver;
};

struct BaselineConfig {
    double step_size = 0.01;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps_hat = 1e-8;
    std::uint64_t batch_size = 32;
    std::uint64_t total_steps = 1000;
    int eval_cadence = 10;
};

enum class Algorithm { ra, sgd, adam };

inline std::string to_string(Algorithm a) {
    switch (a) {
        case Algorithm::ra: return "ra";
        case Algorithm::sgd: return "sgd";
        case Algorithm::adam: return "adam";
    }
    return "unknown";
}

struct ExperimentConfig {
    ProblemConfig problem;
    Algorithm algorithm = Algorithm::ra;
    RaConfig ra;
    BaselineConfig baseline;
    int replications = 3;
    std::uint64_t base_seed = 12345;
    std::string output_dir = "out";
    EvalOptions eval;
    InitConfig init;
    bool record_wall_time = false;
    AggregateAxis x_axis = AggregateAxis::oracle_work;
    std::optional<RateCheckConfig> rate_check;
};

namespace detail {

inline ProblemConfig parse_problem(JsonSection sec) {
    ProblemConfig pc;
    const std::string kind = sec.string("kind");
    if (kind == "least_squares")
        pc.kind = ProblemConfig::Kind::least_squares;
    else if (kind == "logistic")
        pc.kind = ProblemConfig::Kind::logistic;
    else if (kind == "nonconvex")
        pc.kind = ProblemConfig::Kind::nonconvex;
    else
        throw config_error(sec.dotted("kind") + ": unknown problem kind '" +
                           kind + "'");

    if (sec.has("csv_path")) {
        if (pc.kind == ProblemConfig::Kind::nonconvex)
            throw config_error(sec.dotted("csv_path") +
                               ": the nonconvex problem is generated, not "
                               "loaded from csv");
        pc.csv_path = sec.string("csv_path");
    }
    if (pc.csv_path) {
        if (sec.has("p"))
            throw config_error(sec.dotted("p") +
                               ": dimension is inferred from the csv header");
        pc.p = 0;
    } else {
        pc.p = static_cast<std::size_t>(sec.unsigned_integer("p"));
        if (pc.p < 1)
            throw config_error(sec.dotted("p") + ": must be positive");
    }
    if (pc.kind != ProblemConfig::Kind::nonconvex && !pc.csv_path) {
        pc.n = sec.unsigned_integer("N");
        if (pc.n < 1)
            throw config_error(sec.dotted("N") + ": must be positive");
    } else if (sec.has("N")) {
        throw config_error(sec.dotted("N") +
                           ": only generated finite-dataset problems take N");
    }
    pc.seed = sec.unsigned_integer("seed", 1);
    if (sec.has("condition_target")) {
        if (pc.kind != ProblemConfig::Kind::least_squares || pc.csv_path)
            throw config_error(sec.dotted("condition_target") +
                               ": only the generated least-squares problem "
                               "takes a conditioning target");
        pc.condition_target = sec.number("condition_target");
        if (!(*pc.condition_target >= 1.0))
            throw config_error(sec.dotted("condition_target") +
                               ": must be >= 1");
    }
    if (pc.kind == ProblemConfig::Kind::nonconvex) {
        pc.nonconvex.amplitude = sec.number("amplitude", 0.8);
        pc.nonconvex.frequency = sec.number("frequency", 3.0);
        pc.nonconvex.noise_amplitude = sec.number("noise_amplitude", 0.5);
        if (pc.nonconvex.noise_amplitude < 0.0)
            throw config_error(sec.dotted("noise_amplitude") +
                               ": must be nonnegative");
    } else if (sec.has("amplitude") || sec.has("frequency") ||
               sec.has("noise_amplitude")) {
        throw config_error(sec.dotted("amplitude") +
                           ": sinusoid parameters apply to the nonconvex "
                           "problem only");
    }
    sec.done();
    return pc;
}

inline WeightRule parse_weights(JsonSection sec) {
    const std::string kind = sec.string("kind", "last_iterate");
    WeightRule rule;
    try {
        if (kind == "last_iterate") {
            rule = WeightRule::last_iterate();
        } else if (kind == "uniform") {
            rule = WeightRule::uniform();
        } else if (kind == "custom") {
            rule = WeightRule::custom(sec.number_array("values"));
        } else {
            throw config_error(sec.dotted("kind") +
                               ": unknown weight rule '" + kind + "'");
        }
    } catch (const contract_error& e) {
        throw config_error(sec.dotted("kind") + ": " + e.what());
    }
    sec.done();
    return rule;
}

inline SampleSizeSchedule parse_schedule(JsonSection sec) {
    const std::string kind = sec.string("kind", "geometric");
    SampleSizeSchedule sched;
    try {
    if (kind == "geometric") {
        sched = SampleSizeSchedule::geometric(
            sec.number("c1", 2.0), sec.unsigned_integer("m1", 2));
    } else if (kind == "polynomial_factor") {
        sched = SampleSizeSchedule::polynomial_factor(
            sec.number("a", 7.0), sec.number("b", 1.7),
            sec.unsigned_integer("m1", 2));
    } else if (kind == "fixed_list") {
        const json& v = sec.raw("values");
        if (!v.is_array())
            throw config_error(sec.dotted("values") + ": expected an array");
        std::vector<std::uint64_t> values;
        for (const auto& e : v) {
            if (!e.is_number_integer() || e.get<std::int64_t>() < 1)
                throw config_error(sec.dotted("values") +
                                   ": expected positive integers");
            values.push_back(e.get<std::uint64_t>());
        }
        sched = SampleSizeSchedule::fixed_list(std::move(values));
    } else {
        throw config_error(sec.dotted("kind") + ": unknown schedule kind '" +
                           kind + "'");
    }
    } catch (const contract_error& e) {
        throw config_error(sec.dotted("kind") + ": " + e.what());
    }
    sec.done();
    return sched;
}

inline ToleranceSchedule parse_tolerance(JsonSection sec) {
    const std::string kind = sec.string("kind", "adaptive");
    ToleranceSchedule tol;
    try {
    if (kind == "deterministic") {
        tol = ToleranceSchedule::deterministic(sec.number("c2"));
    } else if (kind == "adaptive") {
        tol = ToleranceSchedule::adaptive(
            static_cast<std::size_t>(sec.unsigned_integer("m_sigma", 100)),
            static_cast<int>(sec.integer("recompute_every", 1)),
            sec.number("sigma_floor", 1e-10));
    } else {
        throw config_error(sec.dotted("kind") + ": unknown tolerance kind '" +
                           kind + "'");
    }
    } catch (const contract_error& e) {
        throw config_error(sec.dotted("kind") + ": " + e.what());
    }
    sec.done();
    return tol;
}

inline SolverOptions parse_solver(JsonSection sec) {
    SolverOptions s;
    const std::string method = sec.string("method", "lbfgs");
    if (method == "lbfgs")
        s.method = SolverOptions::Method::lbfgs;
    else if (method == "gd")
        s.method = SolverOptions::Method::gradient_descent;
    else
        throw config_error(sec.dotted("method") + ": unknown method '" +
                           method + "'");
    s.memory = static_cast<std::size_t>(sec.unsigned_integer("memory", 10));
    if (s.memory < 1)
        throw config_error(sec.dotted("memory") + ": must be >= 1");
    s.line_search.c_armijo = sec.number("c_armijo", 1e-4);
    s.line_search.backtrack_factor = sec.number("backtrack_factor", 0.5);
    s.line_search.initial_step = sec.number("initial_step", 1.0);
    s.line_search.max_backtracks =
        static_cast<int>(sec.integer("max_backtracks", 50));
    s.inner_cap = sec.unsigned_integer("inner_cap", 0);
    if (!(s.line_search.c_armijo > 0.0 && s.line_search.c_armijo < 1.0))
        throw config_error(sec.dotted("c_armijo") + ": must lie in (0, 1)");
    if (!(s.line_search.backtrack_factor > 0.0 &&
          s.line_search.backtrack_factor < 1.0))
        throw config_error(sec.dotted("backtrack_factor") +
                           ": must lie in (0, 1)");
    if (!(s.line_search.initial_step > 0.0))
        throw config_error(sec.dotted("initial_step") + ": must be positive");
    if (s.line_search.max_backtracks < 1)
        throw config_error(sec.dotted("max_backtracks") + ": must be >= 1");
    sec.done();
    return s;
}

inline RaConfig parse_ra(JsonSection sec) {
    RaConfig ra;
    ra.outer_iterations = static_cast<int>(sec.integer("K", 10));
    if (ra.outer_iterations < 1)
        throw config_error(sec.dotted("K") + ": must be >= 1");
    ra.warm_start = sec.boolean("warm_start", true);
    ra.carry_memory = sec.boolean("carry_memory", true);
    ra.nested_sampling = sec.boolean("nested_sampling", false);
    if (auto w = sec.optional_section("weights"))
        ra.weights = parse_weights(*w);
    if (auto s = sec.optional_section("schedule"))
        ra.schedule = parse_schedule(*s);
    if (auto t = sec.optional_section("tolerance"))
        ra.tolerance = parse_tolerance(*t);
    else
        ra.tolerance = ToleranceSchedule::adaptive(100);
    if (auto so = sec.optional_section("solver"))
        ra.solver = parse_solver(*so);
    sec.done();
    return ra;
}

inline BaselineConfig parse_baseline(JsonSection sec, Algorithm algo) {
    BaselineConfig b;
    b.step_size =
        sec.number("step_size", algo == Algorithm::adam ? 0.001 : 0.01);
    if (!(b.step_size > 0.0))
        throw config_error(sec.dotted("step_size") + ": must be positive");
    b.batch_size = sec.unsigned_integer("batch_size", 32);
    b.total_steps = sec.unsigned_integer("total_steps", 1000);
    b.eval_cadence = static_cast<int>(sec.integer("eval_cadence", 10));
    b.beta1 = sec.number("beta1", 0.9);
    b.beta2 = sec.number("beta2", 0.999);
    b.eps_hat = sec.number("eps_hat", 1e-8);
    if (b.batch_size < 1 || b.total_steps < 1 || b.eval_cadence < 1)
        throw config_error(sec.dotted("batch_size") +
                           ": batch_size, total_steps, eval_cadence must be "
                           "positive");
    sec.done();
    return b;
}

inline RateCheckConfig parse_rate_check(JsonSection sec, const RaConfig& ra) {
    RateCheckConfig rc;
    if (sec.has("c1")) {
        rc.c1 = sec.number("c1");
    } else if (ra.schedule.kind == SampleSizeSchedule::Kind::geometric) {
        rc.c1 = ra.schedule.c1;
    } else {
        throw config_error(sec.dotted("c1") +
                           ": required when the schedule is not geometric");
    }
    if (sec.has("c2")) {
        rc.c2 = sec.number("c2");
    } else if (ra.tolerance.kind == ToleranceSchedule::Kind::deterministic) {
        rc.c2 = ra.tolerance.c2;
    } else {
        throw config_error(sec.dotted("c2") +
                           ": required when the tolerance is adaptive");
    }
    rc.m1 = sec.has("m1") ? sec.unsigned_integer("m1") : ra.schedule.m1;
    rc.L_estimate = sec.number("L_estimate");
    rc.sigma_estimate = sec.number("sigma_estimate");
    rc.Lambda_estimate = sec.number("Lambda_estimate");
    const std::string denom = sec.string("denominator", "sqrt_m1");
    if (denom == "sqrt_m1")
        rc.denominator = RateCheckConfig::Denominator::sqrt_m1;
    else if (denom == "m1")
        rc.denominator = RateCheckConfig::Denominator::m1_value;
    else
        throw config_error(sec.dotted("denominator") +
                           ": expected 'sqrt_m1' or 'm1'");
    sec.done();
    return rc;
}

} // namespace detail

inline ExperimentConfig parse_experiment_config(const json& j) {
    detail::JsonSection root(j, "");
    ExperimentConfig cfg;

    cfg.problem = detail::parse_problem(root.section("problem"));

    const std::string algo = root.string("algorithm");
    if (algo == "ra")
        cfg.algorithm = Algorithm::ra;
    else if (algo == "sgd")
        cfg.algorithm = Algorithm::sgd;
    else if (algo == "adam")
        cfg.algorithm = Algorithm::adam;
    else
        throw config_error("algorithm: unknown algorithm '" + algo + "'");

    if (auto ra = root.optional_section("ra"))
        cfg.ra = detail::parse_ra(*ra);
    else if (cfg.algorithm == Algorithm::ra)
        throw config_error("ra: missing required section");
    if (auto b = root.optional_section("baseline"))
        cfg.baseline = detail::parse_baseline(*b, cfg.algorithm);
    else if (cfg.algorithm != Algorithm::ra)
        throw config_error("baseline: missing required section");

    cfg.replications = static_cast<int>(root.integer("replications", 3));
    if (cfg.replications < 1)
        throw config_error("replications: must be >= 1");
    cfg.base_seed = root.unsigned_integer("base_seed", 12345);
    cfg.output_dir = root.string("output_dir", "out");

    if (auto e = root.optional_section("eval")) {
        cfg.eval.enabled = e->boolean("enabled", true);
        cfg.eval.m_eval = e->unsigned_integer("M_eval", 10000);
        if (cfg.eval.m_eval < 1)
            throw config_error("eval.M_eval: must be >= 1");
        e->done();
    }
    if (auto i = root.optional_section("init")) {
        const std::string kind = i->string("kind", "zeros");
        if (kind == "zeros")
            cfg.init.kind = InitConfig::Kind::zeros;
        else if (kind == "gaussian")
            cfg.init.kind = InitConfig::Kind::gaussian;
        else
            throw config_error("init.kind: unknown kind '" + kind + "'");
        cfg.init.scale = i->number("scale", 1.0);
        i->done();
    }
    if (auto o = root.optional_section("output")) {
        cfg.record_wall_time = o->boolean("record_wall_time", false);
        cfg.x_axis =
            aggregate_axis_from_string(o->string("x_axis", "oracle_work"));
        o->done();
    }
    if (auto rc = root.optional_section("rate_check"))
        cfg.rate_check = detail::parse_rate_check(*rc, cfg.ra);

    root.done();

    if (cfg.algorithm == Algorithm::ra &&
        cfg.ra.schedule.kind == SampleSizeSchedule::Kind::fixed_list &&
        cfg.ra.schedule.values.size() <
            static_cast<std::size_t>(cfg.ra.outer_iterations))
        throw config_error("ra.schedule.values: fixed list shorter than K");
    if (cfg.algorithm == Algorithm::ra &&
        cfg.ra.weights.kind == WeightRule::Kind::custom &&
        cfg.ra.weights.weights.size() <
            static_cast<std::size_t>(cfg.ra.outer_iterations))
        throw config_error("ra.weights.values: custom weights shorter than K");
    if (cfg.algorithm == Algorithm::ra &&
        cfg.ra.tolerance.kind == ToleranceSchedule::Kind::adaptive) {
        const std::uint64_t m1 =
            cfg.ra.schedule.kind == SampleSizeSchedule::Kind::fixed_list
                ? cfg.ra.schedule.values.front()
                : cfg.ra.schedule.m1;
        if (m1 < 2)
            throw config_error(
                "ra.tolerance: the adaptive rule needs M_1 >= 2 (the spread "
                "estimator is undefined on one sample)");
    }
    return cfg;
}

inline json to_json(const ExperimentConfig& cfg) {
    json j;
    json problem;
    switch (cfg.problem.kind) {
        case ProblemConfig::Kind::least_squares:
            problem["kind"] = "least_squares";
            break;
        case ProblemConfig::Kind::logistic: problem["kind"] = "logistic"; break;
        case ProblemConfig::Kind::nonconvex:
            problem["kind"] = "nonconvex";
            break;
    }
    if (!cfg.problem.csv_path) problem["p"] = cfg.problem.p;
    if (cfg.problem.kind != ProblemConfig::Kind::nonconvex &&
        !cfg.problem.csv_path)
        problem["N"] = cfg.problem.n;
    problem["seed"] = cfg.problem.seed;
    if (cfg.problem.condition_target)
        problem["condition_target"] = *cfg.problem.condition_target;
    if (cfg.problem.csv_path) problem["csv_path"] = *cfg.problem.csv_path;
    if (cfg.problem.kind == ProblemConfig::Kind::nonconvex) {
        problem["amplitude"] = cfg.problem.nonconvex.amplitude;
        problem["frequency"] = cfg.problem.nonconvex.frequency;
        problem["noise_amplitude"] = cfg.problem.nonconvex.noise_amplitude;
    }
    j["problem"] = problem;
    j["algorithm"] = to_string(cfg.algorithm);

    json ra;
    ra["K"] = cfg.ra.outer_iterations;
    ra["warm_start"] = cfg.ra.warm_start;
    ra["carry_memory"] = cfg.ra.carry_memory;
    ra["nested_sampling"] = cfg.ra.nested_sampling;
    json weights;
    switch (cfg.ra.weights.kind) {
        case WeightRule::Kind::last_iterate:
            weights["kind"] = "last_iterate";
            break;
        case WeightRule::Kind::uniform: weights["kind"] = "uniform"; break;
        case WeightRule::Kind::custom:
            weights["kind"] = "custom";
            weights["values"] = cfg.ra.weights.weights;
            break;
    }
    ra["weights"] = weights;
    json schedule;
    switch (cfg.ra.schedule.kind) {
        case SampleSizeSchedule::Kind::geometric:
            schedule["kind"] = "geometric";
            schedule["c1"] = cfg.ra.schedule.c1;
            schedule["m1"] = cfg.ra.schedule.m1;
            break;
        case SampleSizeSchedule::Kind::polynomial_factor:
            schedule["kind"] = "polynomial_factor";
            schedule["a"] = cfg.ra.schedule.a;
            schedule["b"] = cfg.ra.schedule.b;
            schedule["m1"] = cfg.ra.schedule.m1;
            break;
        case SampleSizeSchedule::Kind::fixed_list:
            schedule["kind"] = "fixed_list";
            schedule["values"] = cfg.ra.schedule.values;
            break;
    }
    ra["schedule"] = schedule;
    json tolerance;
    if (cfg.ra.tolerance.kind == ToleranceSchedule::Kind::deterministic) {
        tolerance["kind"] = "deterministic";
        tolerance["c2"] = cfg.ra.tolerance.c2;
    } else {
        tolerance["kind"] = "adaptive";
        tolerance["m_sigma"] = cfg.ra.tolerance.m_sigma;
        tolerance["recompute_every"] = cfg.ra.tolerance.recompute_every;
        tolerance["sigma_floor"] = cfg.ra.tolerance.sigma_floor;
    }
    ra["tolerance"] = tolerance;
    json solver;
    solver["method"] = cfg.ra.solver.method == SolverOptions::Method::lbfgs
                           ? "lbfgs"
                           : "gd";
    solver["memory"] = cfg.ra.solver.memory;
    solver["c_armijo"] = cfg.ra.solver.line_search.c_armijo;
    solver["backtrack_factor"] = cfg.ra.solver.line_search.backtrack_factor;
    solver["initial_step"] = cfg.ra.solver.line_search.initial_step;
    solver["max_backtracks"] = cfg.ra.solver.line_search.max_backtracks;
    solver["inner_cap"] = cfg.ra.solver.inner_cap;
    ra["solver"] = solver;
    j["ra"] = ra;

    json baseline;
    baseline["step_size"] = cfg.baseline.step_size;
    baseline["batch_size"] = cfg.baseline.batch_size;
    baseline["total_steps"] = cfg.baseline.total_steps;
    baseline["eval_cadence"] = cfg.baseline.eval_cadence;
    baseline["beta1"] = cfg.baseline.beta1;
    baseline["beta2"] = cfg.baseline.beta2;
    baseline["eps_hat"] = cfg.baseline.eps_hat;
    j["baseline"] = baseline;

    j["replications"] = cfg.replications;
    j["base_seed"] = cfg.base_seed;
    j["output_dir"] = cfg.output_dir;
    j["eval"] = {{"enabled", cfg.eval.enabled}, {"M_eval", cfg.eval.m_eval}};
    j["init"] = {
        {"kind",
         cfg.init.kind == InitConfig::Kind::zeros ? "zeros" : "gaussian"},
        {"scale", cfg.init.scale}};
    j["output"] = {{"record_wall_time", cfg.record_wall_time},
                   {"x_axis", to_string(cfg.x_axis)}};
    if (cfg.rate_check) {
        json rc;
        rc["c1"] = cfg.rate_check->c1;
        rc["c2"] = cfg.rate_check->c2;
        rc["m1"] = cfg.rate_check->m1;
        rc["L_estimate"] = *cfg.rate_check->L_estimate;
        rc["sigma_estimate"] = *cfg.rate_check->sigma_estimate;
        rc["Lambda_estimate"] = *cfg.rate_check->Lambda_estimate;
        rc["denominator"] = cfg.rate_check->denominator ==
                                    RateCheckConfig::Denominator::sqrt_m1
                                ? "sqrt_m1"
                                : "m1";
        j["rate_check"] = rc;
    }
    return j;
}

/// FNV-1a over the canonical serialized form.
inline std::uint64_t config_fingerprint(const ExperimentConfig& cfg) {
    const std::string s = to_json(cfg).dump();
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline ExperimentConfig load_experiment_config(
    const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw config_error("cannot open config file: " + path.string());
    std::string text((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        // Convert the byte offset into a line/column for a usable message.
        std::size_t line = 1, col = 1;
        for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        throw config_error(path.string() + ":" + std::to_string(line) + ":" +
                           std::to_string(col) + ": " + e.what());
    }
    return parse_experiment_config(j);
}

inline bool operator==(const ExperimentConfig& a, const ExperimentConfig& b) {
    return to_json(a) == to_json(b);
}

/// Builds the shared dataset for finite-data problems; nullptr for
/// streaming problems.
inline DatasetPtr build_dataset(const ProblemConfig& pc) {
    switch (pc.kind) {
        case ProblemConfig::Kind::least_squares:
            if (pc.csv_path) return load_csv_dataset(*pc.csv_path);
            return generate_least_squares_data(pc.p, pc.n, pc.seed,
                                               pc.condition_target);
        case ProblemConfig::Kind::logistic:
            if (pc.csv_path) return load_csv_dataset(*pc.csv_path);
            return generate_logistic_data(pc.p, pc.n, pc.seed);
        case ProblemConfig::Kind::nonconvex: return nullptr;
    }
    return nullptr;
}

/// Constructs an oracle instance over a previously built dataset (so
/// replications share data while keeping independent work counters).
inline std::unique_ptr<StochasticOracle> build_oracle(const ProblemConfig& pc,
                                                      DatasetPtr data) {
    switch (pc.kind) {
        case ProblemConfig::Kind::least_squares: {
            std::optional<std::vector<double>> beta;
            if (!pc.csv_path) {
                std::vector<double> b(pc.p);
                for (std::size_t i = 0; i < pc.p; ++i)
                    b[i] = static_cast<double>(i + 1);
                beta = std::move(b);
            }
            return std::make_unique<LeastSquaresOracle>(std::move(data),
                                                        std::move(beta));
        }
        case ProblemConfig::Kind::logistic:
            return std::make_unique<LogisticOracle>(std::move(data));
        case ProblemConfig::Kind::nonconvex:
            return std::make_unique<NonconvexOracle>(pc.p, pc.seed,
                                                     pc.nonconvex);
    }
    throw config_error("unknown problem kind");
}

inline std::vector<double> make_initial_point(const ExperimentConfig& cfg,
                                              std::size_t dimension) {
    std::vector<double> x0(dimension, 0.0);
    if (cfg.init.kind == InitConfig::Kind::gaussian) {
        SplitMix64 rng(derive_seed(cfg.base_seed, Stream::init));
        for (auto& v : x0) v = cfg.init.scale * rng.next_gaussian();
    }
    return x0;
}

} // namespace retro
