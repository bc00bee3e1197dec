#include <catch2/catch_amalgamated.hpp>

#include "helpers.hpp"
#include "retro/problems/least_squares.hpp"
#include "retro/problems/nonconvex.hpp"
#include "retro/sample_path.hpp"

using namespace retro;

TEST_CASE("draw_sample_set basics") {
    const auto oracle = make_least_squares(2, 100, 1);

    SplitMix64 rng(5);
    const auto singleton = draw_sample_set(*oracle, 1, 1, rng);
    REQUIRE(singleton.size() == 1);
    REQUIRE(singleton.generation_index == 1);

    SplitMix64 a(9), b(9);
    const auto s1 = draw_sample_set(*oracle, 50, 2, a);
    const auto s2 = draw_sample_set(*oracle, 50, 2, b);
    REQUIRE(s1.ids.size() == s2.ids.size());
    for (std::size_t i = 0; i < s1.ids.size(); ++i)
        REQUIRE(s1.ids[i] == s2.ids[i]);

    REQUIRE_THROWS_AS(draw_sample_set(*oracle, 0, 1, rng), contract_error);
}

TEST_CASE("finite-mode draws are uniform with replacement") {
    const auto oracle = make_least_squares(1, 100, 2);
    SplitMix64 rng(123);
    const auto set = draw_sample_set(*oracle, 10000, 1, rng);
    std::vector<int> counts(100, 0);
    for (const auto& id : set.ids) {
        REQUIRE(id.index < 100);
        ++counts[static_cast<std::size_t>(id.index)];
    }
    // expected 100 per index; multinomial sd = sqrt(10000 * .01 * .99) ~ 9.95
    for (int c : counts) {
        REQUIRE(c >= 100 - 50);
        REQUIRE(c <= 100 + 50);
    }
}

TEST_CASE("streaming draws use one stream seed with counter indices") {
    const auto oracle = make_nonconvex_test(1, 3);
    SplitMix64 rng(77);
    const auto set = draw_sample_set(*oracle, 10, 4, rng);
    for (std::size_t i = 0; i < 10; ++i) {
        REQUIRE(set.ids[i].stream_seed == set.ids[0].stream_seed);
        REQUIRE(set.ids[i].index == i);
    }
}

TEST_CASE("grow_sample_set keeps the previous ids as a prefix") {
    const auto oracle = make_least_squares(1, 50, 4);
    SplitMix64 rng(15);
    const auto first = draw_sample_set(*oracle, 8, 1, rng);
    const auto grown = grow_sample_set(*oracle, first, 20, 2, rng);
    REQUIRE(grown.size() == 20);
    REQUIRE(grown.generation_index == 2);
    for (std::size_t i = 0; i < first.size(); ++i)
        REQUIRE(grown.ids[i] == first.ids[i]);
    REQUIRE_THROWS_AS(grow_sample_set(*oracle, grown, 5, 3, rng),
                      contract_error);
}

TEST_CASE("eval_sample_path of a single sample equals evaluate") {
    const auto oracle = make_least_squares(3, 40, 6);
    const std::vector<double> x{0.25, -1.0, 0.5};
    SampleSet set;
    set.ids = {{0, 17}};
    const auto path = eval_sample_path(*oracle, set, x);
    const auto single = oracle->evaluate(x, {0, 17});
    REQUIRE(path.value == single.value);
    REQUIRE(path.gradient == single.gradient);
    REQUIRE(path.grad_norm == norm2(single.gradient));
}

TEST_CASE("sample-path value is the arithmetic mean of per-sample values") {
    testutil::TableOracle oracle({1.0, 2.0, 6.0}, {0.0, 0.0, 0.0});
    SampleSet set;
    set.ids = {{0, 0}, {0, 1}, {0, 2}};
    const std::vector<double> x{0.0};
    const auto eval = eval_sample_path(oracle, set, x);
    REQUIRE(eval.value == 3.0);
    REQUIRE(eval.gradient == std::vector<double>{0.0});
}

TEST_CASE("linearity: gradient of the average is the average gradient") {
    const auto oracle = make_least_squares(3, 30, 8);
    SplitMix64 rng(21);
    const auto set = draw_sample_set(*oracle, 16, 1, rng);
    const std::vector<double> x{0.7, 0.1, -0.4};
    const auto eval = eval_sample_path(*oracle, set, x);
    // brute force with long-double accumulation
    std::vector<long double> acc(3, 0.0L);
    long double vacc = 0.0L;
    for (const auto& id : set.ids) {
        const auto out = oracle->evaluate_uncounted(x, id);
        vacc += out.value;
        for (int j = 0; j < 3; ++j) acc[j] += out.gradient[j];
    }
    REQUIRE(eval.value ==
            Catch::Approx(static_cast<double>(vacc / 16.0L)).epsilon(1e-14));
    for (int j = 0; j < 3; ++j)
        REQUIRE(eval.gradient[j] ==
                Catch::Approx(static_cast<double>(acc[j] / 16.0L))
                    .epsilon(1e-14));
}

TEST_CASE("full-dataset average agrees with an independent reference to "
          "1e-12") {
    const auto oracle = make_least_squares(5, 20000, 9);
    std::vector<SampleId> all(20000);
    for (std::uint64_t i = 0; i < all.size(); ++i) all[i] = {0, i};
    const std::vector<double> x{1.0, -2.0, 3.0, 0.5, -0.25};

    const auto eval = eval_ids_uncounted(*oracle, all, x);

    long double vacc = 0.0L;
    std::vector<long double> gacc(5, 0.0L);
    std::vector<double> scratch(5);
    double v = 0.0;
    for (const auto& id : all) {
        oracle->eval_raw(x, id, v, scratch);
        vacc += v;
        for (int j = 0; j < 5; ++j) gacc[j] += scratch[j];
    }
    const auto n = static_cast<long double>(all.size());
    REQUIRE(std::abs(eval.value - static_cast<double>(vacc / n)) <=
            1e-12 * std::abs(eval.value));
    for (int j = 0; j < 5; ++j)
        REQUIRE(std::abs(eval.gradient[j] - static_cast<double>(gacc[j] / n)) <=
                1e-12 * std::max(1.0, std::abs(eval.gradient[j])));
}

TEST_CASE("chunked evaluation is reproducible at large sample counts") {
    // runs under several RETRO_OPT_THREADS settings via ctest; the frozen
    // bits below must not depend on the worker count
    const auto oracle = make_least_squares(3, 50, 3);
    SplitMix64 rng(33);
    const auto set = draw_sample_set(*oracle, 20000, 1, rng);
    const std::vector<double> x{0.1, 0.2, 0.3};
    const auto e1 = eval_sample_path(*oracle, set, x);
    const auto e2 = eval_sample_path(*oracle, set, x);
    REQUIRE(e1.value == e2.value);
    REQUIRE(e1.gradient == e2.gradient);
    REQUIRE(e1.value == 0x1.6ca39ea8a805cp+3);
    REQUIRE(e1.gradient == std::vector<double>{-0x1.8138e5f836ccp-2,
                                               -0x1.0c33265b7c609p+2,
                                               -0x1.52050b57e3022p+2});
    REQUIRE(e1.grad_norm == 0x1.b02ab2445ea4bp+2);

    long double ref = 0.0L;
    for (const auto& id : set.ids)
        ref += oracle->evaluate_uncounted(x, id).value;
    REQUIRE(std::abs(e1.value - static_cast<double>(
                                    ref / static_cast<long double>(20000))) <=
            1e-12 * std::abs(e1.value));
}

TEST_CASE("work accounting is exact integer bookkeeping") {
    const auto oracle = make_least_squares(2, 50, 5);
    SplitMix64 rng(44);
    const std::vector<double> x{0.0, 0.0};
    const auto s1 = draw_sample_set(*oracle, 7, 1, rng);
    const auto s2 = draw_sample_set(*oracle, 19, 2, rng);
    eval_sample_path(*oracle, s1, x);
    eval_sample_path_value(*oracle, s2, x);
    eval_sample_path(*oracle, s2, x);
    const auto c = oracle->counters();
    REQUIRE(c.work == 7 + 19 + 19);
    REQUIRE(c.gradients == 7 + 19);
}

TEST_CASE("sigma estimator: exact values and contract checks") {
    const std::vector<double> x_at{0.0};
    SECTION("identical norms give zero") {
        testutil::TableOracle oracle({0.0, 0.0, 0.0, 0.0},
                                     {2.0, 2.0, -2.0, -2.0});
        SampleSet set;
        set.ids = {{0, 0}, {0, 1}, {0, 2}, {0, 3}};
        SplitMix64 rng(1);
        REQUIRE(estimate_grad_norm_sigma(oracle, set, x_at, 4, rng) == 0.0);
    }
    SECTION("norms {1, 3} give sigma^2 = 2") {
        testutil::TableOracle oracle({0.0, 0.0}, {1.0, 3.0});
        SampleSet set;
        set.ids = {{0, 0}, {0, 1}};
        SplitMix64 rng(2);
        const double sigma =
            estimate_grad_norm_sigma(oracle, set, x_at, 2, rng);
        REQUIRE(sigma == std::sqrt(2.0));
    }
    SECTION("subset estimate lands near the population variance") {
        // gradient norms on a uniform grid over [0, 2]: variance ~ 1/3
        const std::size_t n = 10000;
        std::vector<double> grads(n), values(n, 0.0);
        for (std::size_t i = 0; i < n; ++i)
            grads[i] = 2.0 * static_cast<double>(i) /
                       static_cast<double>(n - 1);
        testutil::TableOracle oracle(values, grads);
        SampleSet set;
        set.ids.resize(n);
        for (std::uint64_t i = 0; i < n; ++i) set.ids[i] = {0, i};
        SplitMix64 rng(3);
        const double sigma =
            estimate_grad_norm_sigma(oracle, set, x_at, 5000, rng);
        REQUIRE(sigma * sigma == Catch::Approx(1.0 / 3.0).epsilon(0.10));
    }
    SECTION("contract checks") {
        testutil::TableOracle oracle({0.0, 0.0}, {1.0, 3.0});
        SampleSet set;
        set.ids = {{0, 0}, {0, 1}};
        SplitMix64 rng(4);
        REQUIRE_THROWS_AS(
            estimate_grad_norm_sigma(oracle, set, x_at, 1, rng),
            contract_error);
        REQUIRE_THROWS_AS(
            estimate_grad_norm_sigma(oracle, set, x_at, 3, rng),
            contract_error);
    }
    SECTION("estimator charges its subset") {
        testutil::TableOracle oracle({0.0, 0.0, 0.0}, {1.0, 2.0, 3.0});
        SampleSet set;
        set.ids = {{0, 0}, {0, 1}, {0, 2}};
        SplitMix64 rng(5);
        estimate_grad_norm_sigma(oracle, set, x_at, 2, rng);
        REQUIRE(oracle.counters().work == 2);
        REQUIRE(oracle.counters().gradients == 2);
    }
}
