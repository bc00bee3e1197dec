#include <catch2/catch_amalgamated.hpp>

#include "helpers.hpp"
#include "retro/driver.hpp"
#include "retro/experiment.hpp"
#include "retro/problems/least_squares.hpp"
#include "retro/problems/nonconvex.hpp"

using namespace retro;

TEST_CASE("weighted_average hand examples") {
    REQUIRE(weighted_average({{0.0}, {2.0}}, {1.0, 1.0}) ==
            std::vector<double>{1.0});
    // indicator of the last point returns it exactly: emulate with a huge
    // relative weight? the rule itself is exercised through WeightRule;
    // here the plain mean identities are enough.
    const auto avg = weighted_average({{1.0, 0.0}, {0.0, 1.0}, {0.0, 0.0}},
                                      {1.0, 2.0, 1.0});
    REQUIRE(avg[0] == Catch::Approx(0.25).margin(0.0));
    REQUIRE(avg[1] == Catch::Approx(0.5).margin(0.0));

    REQUIRE_THROWS_AS(weighted_average({{1.0}}, {1.0, 2.0}), contract_error);
    REQUIRE_THROWS_AS(weighted_average({{1.0}}, {-1.0}), contract_error);
}

TEST_CASE("measure_true_gradient: exact full-data values in finite mode") {
    const auto oracle = make_least_squares(4, 3000, 31);
    // full-data minimizer via the normal equations (independent reference)
    const auto& data = oracle->data();
    const std::size_t p = 4, n = data.rows;
    std::vector<double> gram(p * p, 0.0), xty(p, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const auto xi = data.row(i);
        for (std::size_t a = 0; a < p; ++a) {
            xty[a] += xi[a] * data.responses[i];
            for (std::size_t b = 0; b < p; ++b)
                gram[a * p + b] += xi[a] * xi[b];
        }
    }
    const auto beta_hat = testutil::cholesky_solve(gram, xty);

    const auto [loss, gnorm] =
        measure_true_gradient(*oracle, beta_hat, 1, 0);
    REQUIRE(gnorm <= 1e-8);
    REQUIRE(loss >= 0.0);

    // measurement is never charged
    REQUIRE(oracle->counters().work == 0);

    // and the value agrees with an independent long-double average
    long double acc = 0.0L;
    std::vector<double> scratch(p);
    double v = 0.0;
    for (std::uint64_t i = 0; i < n; ++i) {
        oracle->eval_raw(beta_hat, {0, i}, v, scratch);
        acc += v;
    }
    REQUIRE(loss == Catch::Approx(static_cast<double>(
                        acc / static_cast<long double>(n)))
                        .epsilon(1e-13));
}

TEST_CASE("measure_true_gradient: streaming spread shrinks with M_eval") {
    const auto oracle = make_nonconvex_test(2, 91);
    const std::vector<double> x{0.4, -0.2};
    const auto exact = oracle->expected_value(x);
    const auto [l1, g1] = measure_true_gradient(*oracle, x, 40000, 111);
    const auto [l2, g2] = measure_true_gradient(*oracle, x, 40000, 222);
    REQUIRE(l1 != l2); // different held-out streams
    REQUIRE(std::abs(l1 - exact) < 0.05);
    REQUIRE(std::abs(l2 - exact) < 0.05);
    // same seed reproduces exactly
    const auto [l3, g3] = measure_true_gradient(*oracle, x, 40000, 111);
    REQUIRE(l1 == l3);
    REQUIRE(g1 == g3);
}

TEST_CASE("run_ra on a zero-variance problem: first solve certifies, later "
          "iterations are nearly free") {
    testutil::QuadraticOracle oracle(testutil::random_spd(3, 55),
                                     testutil::random_vector(3, 56));
    const std::vector<double> x0{1.0, -1.0, 2.0};
    RaOptions opts;
    opts.eval.enabled = false;
    const auto trace = run_ra(oracle, x0,
                              SampleSizeSchedule::geometric(2.0, 4),
                              ToleranceSchedule::deterministic(1e-6),
                              WeightRule::last_iterate(), SolverOptions{}, 6,
                              777, opts);
    REQUIRE(trace.records.size() == 6);
    for (const auto& rec : trace.records) {
        REQUIRE(rec.inner_status == InnerStatus::converged);
        REQUIRE(rec.grad_norm_sample_path <= rec.eps_k);
    }
    // warm starts: after k=1 the iterate is already near-stationary for the
    // same (deterministic) objective, so later solves need at most a couple
    // of corrections
    for (std::size_t i = 1; i < trace.records.size(); ++i)
        REQUIRE(trace.records[i].inner_iterations <= 3);
}

TEST_CASE("run_ra is deterministic and its counters are replayable") {
    const auto oracle_a = make_least_squares(5, 400, 71);
    const auto oracle_b = make_least_squares(5, 400, 71);
    const std::vector<double> x0(5, 0.0);
    RaOptions opts;
    opts.eval.m_eval = 400;
    const auto sched = SampleSizeSchedule::geometric(2.0, 10);
    const auto tol = ToleranceSchedule::adaptive(50);

    const auto t1 = run_ra(*oracle_a, x0, sched, tol,
                           WeightRule::last_iterate(), SolverOptions{}, 6,
                           1234, opts);
    const auto t2 = run_ra(*oracle_b, x0, sched, tol,
                           WeightRule::last_iterate(), SolverOptions{}, 6,
                           1234, opts);
    REQUIRE(t1.records.size() == t2.records.size());
    for (std::size_t i = 0; i < t1.records.size(); ++i) {
        const auto& a = t1.records[i];
        const auto& b = t2.records[i];
        REQUIRE(a.m_k == b.m_k);
        REQUIRE(a.eps_k == b.eps_k);
        REQUIRE(a.grad_norm_sample_path == b.grad_norm_sample_path);
        REQUIRE(a.cumulative_oracle_work == b.cumulative_oracle_work);
        REQUIRE(a.loss_true == b.loss_true);
    }
    REQUIRE(t1.final_x == t2.final_x);

    // work columns replay exactly from the per-iteration counts, and agree
    // with the oracle's own counters
    std::uint64_t work = 0, grads = 0;
    for (const auto& r : t1.records) {
        work += r.m_k * (r.inner_grad_evals + r.inner_func_evals) +
                r.sigma_subsample_size;
        grads += r.m_k * r.inner_grad_evals + r.sigma_subsample_size;
        REQUIRE(r.cumulative_oracle_work == work);
        REQUIRE(r.cumulative_gradient_evals == grads);
    }
    REQUIRE(oracle_a->counters().work == work);
    REQUIRE(oracle_a->counters().gradients == grads);
}

TEST_CASE("tolerance certificates replay from the seed") {
    const auto oracle = make_least_squares(4, 600, 81);
    const std::vector<double> x0(4, 0.0);
    RaOptions opts;
    opts.eval.enabled = false;
    opts.store_iterates = true;
    const auto sched = SampleSizeSchedule::geometric(2.0, 8);
    const auto trace =
        run_ra(*oracle, x0, sched, ToleranceSchedule::adaptive(50),
               WeightRule::last_iterate(), SolverOptions{}, 7, 555, opts);

    const auto sets = replay_sample_sets(*oracle, sched, 555, 7, false);
    for (std::size_t i = 0; i < trace.records.size(); ++i) {
        const auto& rec = trace.records[i];
        if (rec.inner_status != InnerStatus::converged) continue;
        const auto replay =
            eval_ids_uncounted(*oracle, sets[i].ids, trace.iterates[i]);
        REQUIRE(replay.grad_norm == rec.grad_norm_sample_path);
        REQUIRE(replay.grad_norm <= rec.eps_k);
    }
}

TEST_CASE("nested sampling keeps certificates and prefix structure") {
    const auto oracle = make_least_squares(3, 500, 82);
    const std::vector<double> x0(3, 0.0);
    RaOptions opts;
    opts.eval.enabled = false;
    opts.store_iterates = true;
    opts.nested_sampling = true;
    const auto sched = SampleSizeSchedule::geometric(2.0, 6);
    const auto trace =
        run_ra(*oracle, x0, sched, ToleranceSchedule::adaptive(6),
               WeightRule::last_iterate(), SolverOptions{}, 5, 999, opts);
    const auto sets = replay_sample_sets(*oracle, sched, 999, 5, true);
    for (std::size_t k = 1; k < sets.size(); ++k)
        for (std::size_t i = 0; i < sets[k - 1].ids.size(); ++i)
            REQUIRE(sets[k].ids[i] == sets[k - 1].ids[i]);
    for (std::size_t i = 0; i < trace.records.size(); ++i) {
        const auto& rec = trace.records[i];
        if (rec.inner_status != InnerStatus::converged) continue;
        const auto replay =
            eval_ids_uncounted(*oracle, sets[i].ids, trace.iterates[i]);
        REQUIRE(replay.grad_norm == rec.grad_norm_sample_path);
        REQUIRE(replay.grad_norm <= rec.eps_k);
    }
}

TEST_CASE("uniform and custom weight rules shape the warm start") {
    // two iterations on a deterministic problem: with uniform weights the
    // warm start of iteration 2 is (X_1 + x0-independent terms)/1 ... verify
    // through the averaging helper instead of the full loop
    detail::WeightedAverager uniform(WeightRule::uniform(), 1);
    REQUIRE(uniform.update(1, {2.0}) == std::vector<double>{2.0});
    REQUIRE(uniform.update(2, {4.0}) == std::vector<double>{3.0});

    detail::WeightedAverager last(WeightRule::last_iterate(), 1);
    REQUIRE(last.update(1, {2.0}) == std::vector<double>{2.0});
    REQUIRE(last.update(2, {4.0}) == std::vector<double>{4.0});

    detail::WeightedAverager custom(WeightRule::custom({1.0, 3.0}), 1);
    custom.update(1, {0.0});
    REQUIRE(custom.update(2, {4.0}) == std::vector<double>{3.0});

    REQUIRE_THROWS_AS(WeightRule::custom({1.0, 0.0}), contract_error);
}

TEST_CASE("warm starts and carried memory are independently toggleable") {
    // deterministic objective: with warm starts later iterations begin at
    // the previous solution; without them every solve restarts from x0
    testutil::QuadraticOracle oracle(testutil::random_spd(3, 61),
                                     testutil::random_vector(3, 62));
    const std::vector<double> x0{5.0, -5.0, 5.0};
    const auto sched = SampleSizeSchedule::geometric(2.0, 2);
    const auto tol = ToleranceSchedule::deterministic(1e-6);

    RaOptions warm;
    warm.eval.enabled = false;
    const auto warm_trace =
        run_ra(oracle, x0, sched, tol, WeightRule::last_iterate(),
               SolverOptions{}, 5, 11, warm);

    RaOptions cold = warm;
    cold.warm_start = false;
    cold.carry_memory = false;
    const auto cold_trace =
        run_ra(oracle, x0, sched, tol, WeightRule::last_iterate(),
               SolverOptions{}, 5, 11, cold);

    std::uint64_t warm_total = 0, cold_total = 0;
    for (std::size_t i = 1; i < 5; ++i) {
        warm_total += warm_trace.records[i].inner_iterations;
        cold_total += cold_trace.records[i].inner_iterations;
        REQUIRE(cold_trace.records[i].inner_status ==
                InnerStatus::converged);
    }
    // warm restarts should be essentially free on a fixed objective; cold
    // restarts pay the full solve every iteration
    REQUIRE(warm_total <= 3);
    REQUIRE(cold_total >= 4 * cold_trace.records[0].inner_iterations - 4);
}

TEST_CASE("run_ra rejects inconsistent arguments") {
    const auto oracle = make_least_squares(2, 50, 1);
    const std::vector<double> x0(2, 0.0);
    REQUIRE_THROWS_AS(
        run_ra(*oracle, std::vector<double>{1.0},
               SampleSizeSchedule::geometric(2.0, 4),
               ToleranceSchedule::deterministic(1.0),
               WeightRule::last_iterate(), SolverOptions{}, 3, 1),
        contract_error);
    REQUIRE_THROWS_AS(
        run_ra(*oracle, x0, SampleSizeSchedule::geometric(2.0, 4),
               ToleranceSchedule::deterministic(1.0),
               WeightRule::custom({1.0}), SolverOptions{}, 3, 1),
        contract_error);
    REQUIRE_THROWS_AS(
        run_ra(*oracle, x0, SampleSizeSchedule::geometric(2.0, 4),
               ToleranceSchedule::deterministic(1.0),
               WeightRule::last_iterate(), SolverOptions{}, 0, 1),
        contract_error);
}

TEST_CASE("median true gradient norm decays on a small instance") {
    const DatasetPtr data = generate_least_squares_data(10, 2000, 7);
    std::vector<double> beta(10);
    for (std::size_t i = 0; i < 10; ++i) beta[i] = static_cast<double>(i + 1);

    const int K = 8;
    std::vector<std::vector<double>> norms; // per seed, per k
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        LeastSquaresOracle oracle(data, beta);
        RaOptions opts;
        const auto trace =
            run_ra(oracle, std::vector<double>(10, 0.0),
                   SampleSizeSchedule::geometric(2.0, 20),
                   ToleranceSchedule::adaptive(50, 1000000),
                   WeightRule::last_iterate(), SolverOptions{}, K,
                   4000 + seed, opts);
        std::vector<double> per_k;
        for (const auto& r : trace.records) per_k.push_back(*r.grad_norm_true);
        norms.push_back(per_k);
    }
    auto median_at = [&](int k) {
        std::vector<double> v;
        for (const auto& run : norms) v.push_back(run[static_cast<std::size_t>(k)]);
        std::sort(v.begin(), v.end());
        return v[v.size() / 2];
    };
    // median decays beyond the first couple of iterations
    for (int k = 2; k < K; ++k)
        REQUIRE(median_at(k) <= median_at(1) * 2.0);
    REQUIRE(median_at(K - 1) < median_at(0));
}
