#include "helpers.hpp"

#include "hetsim/des.hpp"
#include "hetsim/errors.hpp"
#include "hetsim/oracle.hpp"
#include "hetsim/parallel.hpp"
#include "hetsim/stats.hpp"

#include <boost/math/distributions/students_t.hpp>
#include <doctest.h>

#include <atomic>
#include <cmath>
#include <set>

using namespace hetsim;

TEST_SUITE("random")
{
    TEST_CASE("streams are reproducible and distinct")
    {
        RandomStream a(42);
        RandomStream b(42);
        for (int i = 0; i < 100; ++i) {
            CHECK(a.next_u64() == b.next_u64());
        }
        RandomStream base(42);
        std::set<std::uint64_t> firsts;
        for (std::uint64_t s = 0; s < 64; ++s) {
            auto sub = base.split(s);
            firsts.insert(sub.next_u64());
        }
        CHECK(firsts.size() == 64);

        // Splitting does not depend on how far the parent has advanced.
        RandomStream advanced(42);
        for (int i = 0; i < 10; ++i) {
            advanced.next_u64();
        }
        CHECK(advanced.split(3).next_u64() == RandomStream(42).split(3).next_u64());
    }

    TEST_CASE("variate moments")
    {
        RandomStream rng(9);
        const int n = 400'000;
        double su = 0.0;
        double se = 0.0;
        std::array<int, 7> bins{};
        for (int i = 0; i < n; ++i) {
            const double u = rng.uniform();
            CHECK((u >= 0.0 && u < 1.0));
            su += u;
            se += rng.exponential(2.0);
            ++bins[static_cast<std::size_t>(rng.uniform_index(7))];
        }
        CHECK(su / n == doctest::Approx(0.5).epsilon(0.005));
        CHECK(se / n == doctest::Approx(0.5).epsilon(0.01));
        for (int b : bins) {
            CHECK(std::abs(b - n / 7.0) <= 4.0 * std::sqrt(n / 7.0));
        }
    }
}

TEST_SUITE("stats")
{
    TEST_CASE("t quantiles against Boost.Math")
    {
        for (int df = 1; df <= 200; ++df) {
            const boost::math::students_t dist(df);
            const double exact = boost::math::quantile(dist, 0.975);
            CHECK(std::abs(student_t_975(df) - exact) <= 1e-5 * exact);
        }
        CHECK_THROWS_AS(student_t_975(0), ArgumentError);
    }

    TEST_CASE("mean and confidence interval")
    {
        const std::vector<double> xs{1.0, 2.0, 3.0, 4.0};
        const auto ci = mean_ci95(xs);
        CHECK(ci.mean == 2.5);
        CHECK(ci.halfwidth == doctest::Approx(3.182446 * std::sqrt(5.0 / 3.0) / 2.0).epsilon(1e-6));
        const std::vector<double> one{7.0};
        CHECK(std::isinf(mean_ci95(one).halfwidth));
    }

    TEST_CASE("spearman with ties")
    {
        Eigen::VectorXd a(5);
        Eigen::VectorXd b(5);
        a << 1, 2, 3, 4, 5;
        b << 5, 6, 7, 8, 7;
        // ranks of b: 1, 2, 3.5, 5, 3.5
        CHECK(spearman_correlation(a, b) == doctest::Approx(0.820782681668123).epsilon(1e-12));
        CHECK(spearman_correlation(a, a) == doctest::Approx(1.0));
        CHECK(spearman_correlation(a, -a) == doctest::Approx(-1.0));
    }
}

TEST_SUITE("parallel")
{
    TEST_CASE("every index runs once and exceptions propagate")
    {
        std::vector<std::atomic<int>> seen(1000);
        parallel_for(seen.size(), [&](std::size_t i) { seen[i].fetch_add(1); });
        for (const auto& s : seen) {
            CHECK(s.load() == 1);
        }
        CHECK_THROWS_AS(parallel_for(10, [](std::size_t i) {
                            if (i == 7) {
                                throw NumericalError("boom");
                            }
                        }),
                        NumericalError);
    }
}

TEST_SUITE("des-sim")
{
    TEST_CASE("plan validation")
    {
        SimPlan plan;
        plan.replications = 0;
        CHECK_THROWS_AS(validate(plan), ConfigError);
        plan = {};
        plan.measure_time = 0.0;
        CHECK_THROWS_AS(validate(plan), ConfigError);
    }

    TEST_CASE("M/M/1 mean queue length")
    {
        const auto cfg = test::tandem(1.0, {2.0}, {1.0}, 1);
        SimPlan plan;
        plan.seed = 1;
        const auto s = simulate(cfg, plan);
        CHECK(std::abs(s.per_server_mean_queue_length[0] - 1.0) <= std::max(0.02, 2.0 * s.per_server_ci_halfwidth[0]));
        CHECK(s.utilization[0] == doctest::Approx(0.5).epsilon(0.02));
        CHECK(s.throughput[0] == doctest::Approx(1.0).epsilon(0.02));
        CHECK_FALSE(s.unstable);
    }

    TEST_CASE("exchangeable servers have equal means")
    {
        const auto cfg = test::tandem(2.4, {1.0, 1.0, 1.0}, {1.0 / 3, 1.0 / 3, 1.0 / 3}, 2);
        SimPlan plan;
        plan.seed = 5;
        plan.replications = 20;
        const auto s = simulate(cfg, plan);
        for (int j = 1; j < 3; ++j) {
            const double hw = s.per_server_ci_halfwidth[0] + s.per_server_ci_halfwidth[j];
            CHECK(std::abs(s.per_server_mean_queue_length[0] - s.per_server_mean_queue_length[j]) <= hw);
        }
    }

    TEST_CASE("simulation matches the truncated chain")
    {
        const auto cfg = test::tandem(1.5, {1.0, 2.0}, {0.7, 0.3}, 2);
        const auto st = stationary_distribution(build_generator(cfg, 25));
        SimPlan plan;
        plan.seed = 3;
        const auto s = simulate(cfg, plan);
        for (int j = 0; j < 2; ++j) {
            CHECK(std::abs(s.per_server_mean_queue_length[j] - st.mean_queue_length[j]) <=
                  3.0 * s.per_server_ci_halfwidth[j]);
        }
    }

    TEST_CASE("flow conservation and reproducibility")
    {
        const auto cfg = test::tandem(3.0, {1.0, 1.5, 2.0}, {0.2, 0.3, 0.5}, 2);
        SimPlan plan;
        plan.seed = 77;
        plan.replications = 10;
        plan.measure_time = 5e3;
        const auto a = simulate(cfg, plan);
        for (int j = 0; j < 3; ++j) {
            const double hw = a.throughput_ci_halfwidth[j] + cfg.mu[j] * a.utilization_ci_halfwidth[j];
            CHECK(std::abs(a.throughput[j] - a.utilization[j] * cfg.mu[j]) <= hw);
        }
        CHECK(a.throughput.sum() == doctest::Approx(3.0).epsilon(0.02));
        const auto b = simulate(cfg, plan);
        CHECK(a.per_server_mean_queue_length == b.per_server_mean_queue_length);
        CHECK(a.per_server_ci_halfwidth == b.per_server_ci_halfwidth);
        CHECK(a.arrivals_observed == b.arrivals_observed);
    }

    TEST_CASE("unstable input is flagged, not rejected")
    {
        const auto cfg = test::tandem(5.0, {1.0, 1.0}, {0.5, 0.5}, 2);
        SimPlan plan;
        plan.replications = 2;
        plan.warmup_time = 10.0;
        plan.measure_time = 50.0;
        CHECK(simulate(cfg, plan).unstable);
    }

    TEST_CASE("Monte Carlo reward paths")
    {
        const auto cfg = test::tandem(1.0, {2.0}, {1.0}, 1);
        const SystemState x0 = test::state({1});
        CHECK(mc_reward_estimate(cfg, x0, reward::TotalQueueLength{}, 0.0, 100, 1).value == 0.0);
        const auto c = mc_reward_estimate(cfg, x0, reward::Constant{2.0}, 3.0, 1000, 1);
        CHECK(c.value == doctest::Approx(6.0).epsilon(1e-12));
        CHECK(c.method == EstimateMethod::MonteCarlo);

        const auto gen = build_generator(cfg, 64);
        const double exact = transient_expected_reward(gen, x0, reward_vector(gen, cfg, reward::TotalQueueLength{}), 1.0);
        const auto est = mc_reward_estimate(cfg, x0, reward::TotalQueueLength{}, 1.0, 100'000, 9);
        CHECK(std::abs(est.value - exact) <= 3.0 * est.mc_standard_error);
    }

    TEST_CASE("presets carry the printed columns")
    {
        const auto one = experiment_preset(Preset::One);
        CHECK(one.cfg.servers == 10);
        CHECK(one.cfg.lambda == 10.0);
        CHECK(one.cfg.choices == 2);
        CHECK(one.published[0] == 0.6834);
        CHECK(one.published[2] == 1.0440);
        CHECK(one.published[9] == 0.2640);
        CHECK(experiment_preset(Preset::Two).published[0] == 0.3459);
        CHECK(experiment_preset(Preset::Three).published[2] == 0.8598);
        CHECK(experiment_preset(Preset::Three).cfg.choices == 3);
        CHECK(parse_preset("experiment-two") == Preset::Two);
        CHECK(parse_preset("3") == Preset::Three);
        CHECK_THROWS(parse_preset("four"));
    }
}
