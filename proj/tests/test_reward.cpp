#include "helpers.hpp"
#include "theta_quadrature.hpp"

#include "hetsim/design.hpp"
#include "hetsim/errors.hpp"
#include "hetsim/oracle.hpp"
#include "hetsim/reward.hpp"
#include "hetsim/reward_kernel.hpp"
#include "hetsim/transitions.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>

using namespace hetsim;

namespace {

// Independent one-step law for two-server tandem models, written out by hand:
// arrivals split by the rank of each server (equal numerators share equally),
// services at busy servers, idle-server mass kept as a self-loop.
struct Step {
    SystemState next;
    double p;
};

std::vector<Step> two_server_steps(const ModelConfig& cfg, const SystemState& x)
{
    const double omega = cfg.lambda + cfg.mu[0] + cfg.mu[1];
    const double a = cfg.lambda / omega;
    const double k1 = cfg.choices == 1 ? 0.5 : 1.0;
    const double k2 = cfg.choices == 1 ? 0.5 : 0.0;
    const double n0 = 1.0 + x[0] / (cfg.mu[0] * cfg.g[0]);
    const double n1 = 1.0 + x[1] / (cfg.mu[1] * cfg.g[1]);
    double to0 = 0.0;
    double to1 = 0.0;
    if (n0 == n1) {
        to0 = to1 = a * (k1 + k2) / 2.0;
    } else if (n0 < n1) {
        to0 = a * k1;
        to1 = a * k2;
    } else {
        to0 = a * k2;
        to1 = a * k1;
    }
    std::vector<Step> steps;
    steps.push_back({x + test::state({1, 0}), to0});
    steps.push_back({x + test::state({0, 1}), to1});
    double stay = 0.0;
    for (int j = 0; j < 2; ++j) {
        const double b = cfg.mu[j] / omega;
        if (x[j] > 0) {
            SystemState y = x;
            --y[j];
            steps.push_back({y, b});
        } else {
            stay += b;
        }
    }
    steps.push_back({x, stay});
    return steps;
}

double hand_r(const RewardSpec& spec, const ModelConfig& cfg, const SystemState& x)
{
    const double n0 = 1.0 + x[0] / (cfg.mu[0] * cfg.g[0]);
    const double n1 = 1.0 + x[1] / (cfg.mu[1] * cfg.g[1]);
    if (std::holds_alternative<reward::RMin>(spec)) {
        return std::min(n0, n1) / (n0 + n1);
    }
    if (std::holds_alternative<reward::RMax>(spec)) {
        return std::max(n0, n1) / (n0 + n1);
    }
    return static_cast<double>(x[0] + x[1]);
}

double hand_r1(const RewardSpec& spec, const ModelConfig& cfg, const SystemState& x)
{
    double sum = 0.0;
    for (const auto& s : two_server_steps(cfg, x)) {
        sum += s.p * hand_r(spec, cfg, s.next);
    }
    return sum;
}

double hand_r2(const RewardSpec& spec, const ModelConfig& cfg, const SystemState& x)
{
    double sum = 0.0;
    for (const auto& s : two_server_steps(cfg, x)) {
        for (const auto& s2 : two_server_steps(cfg, s.next)) {
            sum += s.p * s2.p * hand_r(spec, cfg, s2.next);
        }
    }
    return sum;
}

const std::vector<RewardSpec> bounded_specs{reward::RMin{}, reward::RMax{}};
const std::vector<RewardSpec> test_specs{reward::RMin{}, reward::RMax{}, reward::TotalQueueLength{}};

}  // namespace

TEST_SUITE("reward-kernel")
{
    TEST_CASE("reward values")
    {
        auto cfg = test::tandem(1.0, {1.0, 1.0, 2.0}, {0.3, 0.3, 0.4}, 2);
        CHECK(evaluate_reward(reward::RMin{}, cfg, SystemState::Zero(3)) == doctest::Approx(1.0 / 3.0));
        auto two = test::tandem(1.0, {1.0, 1.0}, {0.5, 0.5}, 2);
        CHECK(evaluate_reward(reward::RMax{}, two, test::state({1, 0})) == 0.75);
        CHECK(evaluate_reward(reward::RMin{}, two, test::state({1, 0})) == 0.25);
        CHECK(evaluate_reward(reward::Constant{3.5}, cfg, test::state({4, 1, 0})) == 3.5);
        CHECK(evaluate_reward(reward::TotalQueueLength{}, cfg, test::state({4, 1, 0})) == 5.0);
        CHECK(evaluate_reward(reward::QueueLength{0}, cfg, test::state({4, 1, 0})) == 4.0);
        CHECK_THROWS_AS(evaluate_reward(reward::QueueLength{3}, cfg, test::state({4, 1, 0})), ConfigError);
    }

    TEST_CASE("reward parsing round-trips")
    {
        for (const char* text : {"rmin", "rmax", "total", "queue:2", "constant:2.5"}) {
            CHECK(to_string(parse_reward(text)) == text);
        }
        CHECK(std::get<reward::QueueLength>(parse_reward("queue:2")).server == 1);
        CHECK_THROWS(parse_reward("queue:0"));
        CHECK_THROWS(parse_reward("median"));
        CHECK_THROWS(parse_reward("constant:abc"));
    }

    TEST_CASE("level one against the one-step sum")
    {
        const auto cfg = test::tandem(1.2, {0.7, 1.9, 1.1}, {0.2, 0.5, 0.3}, 2);
        const SystemState x = test::state({1, 2, 1});
        const auto dist = averaged_jump_distribution(cfg, x);
        for (const auto& spec : test_specs) {
            double expected = dist.self_loop_probability * evaluate_reward(spec, cfg, x);
            for (const auto& e : dist.entries) {
                expected += e.probability * evaluate_reward(spec, cfg, e.successor);
            }
            CHECK(std::abs(re_k(cfg, x, spec, 1) - expected) <= 1e-15);
        }
        CHECK(re_k(cfg, x, reward::Constant{2.0}, 1) == doctest::Approx(2.0).epsilon(1e-15));
    }

    TEST_CASE("levels one and two against the hand-coded two-server evaluator")
    {
        std::vector<ModelConfig> cfgs{
            test::tandem(1.0, {1.0, 2.0}, {0.5, 0.5}, 2),
            test::tandem(1.0, {1.0, 2.0}, {0.5, 0.5}, 1),
            test::tandem(2.3, {1.3, 0.7}, {0.6, 0.4}, 2),
            test::tandem(0.4, {1.0, 1.0}, {0.5, 0.5}, 2),
        };
        for (const auto& cfg : cfgs) {
            for (int a = 0; a <= 2; ++a) {
                for (int b = 0; b <= 2; ++b) {
                    const SystemState x = test::state({a, b});
                    for (const auto& spec : test_specs) {
                        const auto means = exact_level_means(cfg, x, spec, 2);
                        REQUIRE(means.size() == 3);
                        CHECK(means[0] == hand_r(spec, cfg, x));
                        CHECK(std::abs(means[1] - hand_r1(spec, cfg, x)) <= 1e-12);
                        CHECK(std::abs(means[2] - hand_r2(spec, cfg, x)) <= 1e-12);
                    }
                }
            }
        }
    }

    TEST_CASE("states too large to pack take the general path")
    {
        // Queue length 3e6 needs 22 bits per coordinate; three of them overflow a 64-bit key.
        const auto cfg = test::tandem(1.2, {0.7, 1.9, 1.1}, {0.2, 0.5, 0.3}, 2);
        const SystemState x = test::state({3'000'000, 1, 0});
        const auto means = exact_level_means(cfg, x, reward::RMax{}, 2);
        double expected = 0.0;
        auto visit = [&](const SystemState& y, double p, auto&& self, int level) -> void {
            if (level == 2) {
                expected += p * evaluate_reward(reward::RMax{}, cfg, y);
                return;
            }
            const auto dist = averaged_jump_distribution(cfg, y);
            self(y, p * dist.self_loop_probability, self, level + 1);
            for (const auto& e : dist.entries) {
                self(e.successor, p * e.probability, self, level + 1);
            }
        };
        visit(x, 1.0, visit, 0);
        CHECK(std::abs(means[2] - expected) <= 1e-15);
    }

    TEST_CASE("node budget")
    {
        const auto cfg = test::tandem(1.0, {1.0, 1.5, 2.0}, {0.3, 0.3, 0.4}, 2);
        TreeOptions tiny;
        tiny.node_budget = 5;
        CHECK_THROWS_AS(re_k(cfg, SystemState::Zero(3), reward::RMin{}, 4, tiny), CapacityError);
        CHECK(exact_level_means(cfg, SystemState::Zero(3), reward::RMin{}, 4, tiny).size() < 5);
    }

    TEST_CASE("paper-literal levels lose the idle mass")
    {
        const auto cfg = test::tandem(1.0, {1.0, 1.0}, {0.5, 0.5}, 2);
        TreeOptions literal;
        literal.paper_literal = true;
        const auto means = exact_level_means(cfg, test::state({0, 0}), reward::Constant{1.0}, 1, literal);
        CHECK(means[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
    }

    TEST_CASE("theta sequence")
    {
        CHECK(theta_k(2.0, 1.0, 0) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
        CHECK(theta_k(2.0, 1.0, 3) == doctest::Approx(8.0 / 81.0).epsilon(1e-15));
        CHECK(std::abs(theta_by_quadrature(2.0, 1.0, 3) - 8.0 / 81.0) <= 1e-8);
        for (const double omega : {0.5, 3.0, 17.0}) {
            for (const double beta : {0.1, 1.0, 4.0}) {
                double sum = 0.0;
                double previous = std::numeric_limits<double>::infinity();
                for (int k = 0; k <= 200; ++k) {
                    const double th = theta_k(omega, beta, k);
                    CHECK(th < previous);
                    previous = th;
                    sum += th;
                    const double residual = std::pow(omega / (omega + beta), k + 1) / beta;
                    CHECK(std::abs(1.0 / beta - sum - residual) <= 1e-12 / beta);
                }
            }
        }
    }

    TEST_CASE("poisson truncation")
    {
        const auto p = poisson_pmf(3.0, 10);
        CHECK(p[0] == doctest::Approx(std::exp(-3.0)));
        CHECK(p[4] == doctest::Approx(std::exp(-3.0) * 81.0 / 24.0));
        for (const double mean : {0.1, 5.0, 80.0, 2000.0}) {
            const int n = poisson_truncation_point(mean, 1e-10);
            const auto q = poisson_pmf(mean, n);
            double mass = 0.0;
            for (double v : q) {
                mass += v;
            }
            CHECK(1.0 - mass < 1e-10 + 1e-12);
            const auto shorter = poisson_pmf(mean, n - 1);
            double mass2 = 0.0;
            for (double v : shorter) {
                mass2 += v;
            }
            CHECK(1.0 - mass2 >= 1e-10 - 1e-12);
        }
    }

    TEST_CASE("constant reward identities")
    {
        const auto cfg = test::tandem(2.0, {1.0, 3.0, 0.5}, {0.2, 0.5, 0.3}, 2);
        const SystemState x = test::state({1, 0, 2});
        for (const double t : {0.5, 2.0, 5.0}) {
            const auto est =
                expected_reward_finite(cfg, x, reward::Constant{2.0}, HorizonParams::for_horizon(cfg, t));
            CHECK(std::abs(est.value - 2.0 * t) <= 1e-9 * 2.0 * t);
        }
        const auto disc = expected_reward_discounted(
            cfg, x, reward::Constant{2.0}, DiscountParams::for_discount(cfg, x, reward::Constant{2.0}, 0.5));
        CHECK(std::abs(disc.value - 4.0) <= disc.truncation_error_bound + 1e-12);
    }

    TEST_CASE("zero horizon and the no-jump term")
    {
        const auto cfg = test::tandem(1.0, {1.0, 2.0}, {0.5, 0.5}, 2);
        const SystemState x = test::state({2, 1});
        CHECK(expected_reward_finite(cfg, x, reward::RMax{}, HorizonParams::for_horizon(cfg, 0.0)).value == 0.0);
        const double t = 1e-6;
        const auto est = expected_reward_finite(cfg, x, reward::RMax{}, HorizonParams::for_horizon(cfg, t));
        CHECK(std::abs(est.value / t - evaluate_reward(reward::RMax{}, cfg, x)) <= 1e-6);
        // The no-jump branch alone contributes r(x) t e^{-omega t}.
        const double omega = cfg.omega();
        const double n0 = evaluate_reward(reward::RMax{}, cfg, x) * t * std::exp(-omega * t);
        CHECK(est.value >= n0);
    }

    TEST_CASE("bounded sandwich and rmin below rmax")
    {
        const auto cfg = test::tandem(1.5, {1.0, 2.0}, {0.3, 0.7}, 2);
        const SystemState x = test::state({1, 1});
        const double t = 3.0;
        const double beta = 1.0;
        double vmin = 0.0;
        double vmax = 0.0;
        for (const auto& spec : bounded_specs) {
            const auto f = expected_reward_finite(cfg, x, spec, HorizonParams::for_horizon(cfg, t));
            CHECK(f.value >= 0.0);
            CHECK(f.value <= t);
            const auto d = expected_reward_discounted(cfg, x, spec, DiscountParams::for_discount(cfg, x, spec, beta));
            CHECK(d.value >= 0.0);
            CHECK(d.value <= 1.0 / beta);
            (std::holds_alternative<reward::RMin>(spec) ? vmin : vmax) = d.value;
        }
        CHECK(vmin <= vmax);
    }

    TEST_CASE("tightening the truncation stays inside the reported bound")
    {
        const auto cfg = test::tandem(1.0, {0.8, 1.7}, {0.4, 0.6}, 2);
        const SystemState x = test::state({1, 0});
        for (const auto& spec : test_specs) {
            const auto loose = expected_reward_finite(cfg, x, spec, HorizonParams::for_horizon(cfg, 2.0, 1e-3));
            const auto tight = expected_reward_finite(cfg, x, spec, HorizonParams::for_horizon(cfg, 2.0, 1e-12));
            CHECK(std::abs(tight.value - loose.value) <= loose.truncation_error_bound + tight.truncation_error_bound);
            CHECK(loose.bound_kind == BoundKind::Rigorous);

            const auto dl = expected_reward_discounted(cfg, x, spec, DiscountParams::for_discount(cfg, x, spec, 1.0, 1e-3));
            const auto dt =
                expected_reward_discounted(cfg, x, spec, DiscountParams::for_discount(cfg, x, spec, 1.0, 1e-11));
            CHECK(std::abs(dt.value - dl.value) <= dl.truncation_error_bound + dt.truncation_error_bound);
        }
    }

    TEST_CASE("series agrees with the truncated chain on small models")
    {
        const std::vector<ModelConfig> cfgs{
            test::tandem(0.4, {1.0}, {1.0}, 1),
            test::tandem(0.6, {1.0, 2.0}, {0.5, 0.5}, 2),
            test::tandem(0.6, {1.4, 0.6}, {0.7, 0.3}, 1),
            test::tandem(0.8, {1.0, 0.7, 1.5}, {0.2, 0.3, 0.5}, 2),
            test::tandem(0.9, {1.0, 1.0, 1.0}, {0.3, 0.3, 0.4}, 3),
        };
        for (const auto& cfg : cfgs) {
            const auto gen = build_generator(cfg, 6);
            const SystemState x = SystemState::Zero(cfg.servers);
            for (const auto& spec : test_specs) {
                const auto r = reward_vector(gen, cfg, spec);
                const double t = 1.5;
                const auto f = expected_reward_finite(cfg, x, spec, HorizonParams::for_horizon(cfg, t));
                const double of = transient_expected_reward(gen, x, r, t);
                INFO("M=" << cfg.servers << " spec=" << to_string(spec) << " finite " << f.value << " vs " << of);
                CHECK(std::abs(f.value - of) <= std::max(1e-4, f.truncation_error_bound));

                const double beta = 1.0;
                const auto d = expected_reward_discounted(cfg, x, spec, DiscountParams::for_discount(cfg, x, spec, beta));
                const double od = discounted_expected_reward(gen, x, r, beta);
                INFO("discounted " << d.value << " vs " << od);
                CHECK(std::abs(d.value - od) <= std::max(1e-4, d.truncation_error_bound));
            }
        }
    }

    TEST_CASE("Monte Carlo fallback when the tree budget runs out")
    {
        const auto cfg = test::tandem(1.0, {1.0, 1.5, 2.0}, {0.3, 0.3, 0.4}, 2);
        const SystemState x = SystemState::Zero(3);
        auto params = HorizonParams::for_horizon(cfg, 2.0, 1e-10, 20'000, 7);
        params.tree.node_budget = 20;
        const auto est = expected_reward_finite(cfg, x, reward::RMin{}, params);
        CHECK(est.method == EstimateMethod::HybridTreeMC);
        CHECK(est.bound_kind == BoundKind::Heuristic);
        CHECK(est.samples_used == 20'000);
        const auto exact = expected_reward_finite(cfg, x, reward::RMin{}, HorizonParams::for_horizon(cfg, 2.0));
        CHECK(std::abs(est.value - exact.value) <= 3.0 * est.truncation_error_bound + 1e-9);

        params.mc_fallback_samples = 0;
        CHECK_THROWS_AS(expected_reward_finite(cfg, x, reward::RMin{}, params), CapacityError);

        auto again = HorizonParams::for_horizon(cfg, 2.0, 1e-10, 20'000, 7);
        again.tree.node_budget = 20;
        CHECK(expected_reward_finite(cfg, x, reward::RMin{}, again).value == est.value);
    }
}

TEST_SUITE("design")
{
    const DesignSettings settings{};

    TEST_CASE("single candidate is every optimum")
    {
        const std::vector<ModelConfig> one{test::tandem(1.0, {1.0, 2.0}, {0.5, 0.5}, 2)};
        const auto rep = evaluate_design_criteria(one, {}, 1.0, std::numeric_limits<double>::infinity(),
                                                  std::numeric_limits<double>::infinity(), settings);
        CHECK(rep.best_psi_min == 0);
        CHECK(rep.best_psi_max == 0);
        CHECK(rep.best_gap == 0);
        CHECK(rep.criterion_one);
        CHECK(rep.criterion_two);
        CHECK(rep.criterion_two_value == doctest::Approx(rep.rows[0].gap()));
    }

    TEST_CASE("empty grid")
    {
        CHECK_THROWS_AS(evaluate_design_criteria({}, {}, 1.0, 1.0, 1.0), ArgumentError);
    }

    TEST_CASE("larger d narrows the gap on identical servers")
    {
        std::vector<ModelConfig> grid;
        for (int d = 1; d <= 3; ++d) {
            grid.push_back(test::tandem(1.5, {1.0, 1.0, 1.0}, {1.0 / 3, 1.0 / 3, 1.0 / 3}, d));
        }
        const auto rep = evaluate_design_criteria(grid, {}, 1.0, 1.0, 1.0, settings);
        CHECK(rep.rows[0].gap() > rep.rows[1].gap());
        CHECK(rep.rows[1].gap() > rep.rows[2].gap());
        CHECK(rep.best_gap == 2);
        // Regression values from the first verified run, cross-checked against the truncated chain.
        CHECK(rep.rows[0].gap() == doctest::Approx(0.2379055633).epsilon(1e-8));
        CHECK(rep.rows[1].gap() == doctest::Approx(0.2052078338).epsilon(1e-8));
        CHECK(rep.rows[2].gap() == doctest::Approx(0.1964610468).epsilon(1e-8));
        for (std::size_t i = 0; i < grid.size(); ++i) {
            const auto gen = build_generator(grid[i], 25);
            const SystemState x0 = SystemState::Zero(3);
            const double lo = discounted_expected_reward(gen, x0, reward_vector(gen, grid[i], reward::RMin{}), 1.0);
            const double hi = discounted_expected_reward(gen, x0, reward_vector(gen, grid[i], reward::RMax{}), 1.0);
            CHECK(std::abs(rep.rows[i].gap() - (hi - lo)) <= 1e-8);
        }
    }

    TEST_CASE("criteria flip exactly at their thresholds")
    {
        const std::vector<ModelConfig> grid{test::tandem(1.0, {1.0, 2.0}, {0.5, 0.5}, 1),
                                            test::tandem(1.0, {1.0, 2.0}, {0.5, 0.5}, 2)};
        const auto base = evaluate_design_criteria(grid, {}, 1.0, 1.0, 1.0, settings);
        const double c1 = base.criterion_one_value;
        const double c2 = base.criterion_two_value;
        CHECK_FALSE(evaluate_design_criteria(grid, {}, 1.0, c1, c2, settings).criterion_one);
        CHECK_FALSE(evaluate_design_criteria(grid, {}, 1.0, c1, c2, settings).criterion_two);
        const auto above = evaluate_design_criteria(grid, {}, 1.0, std::nextafter(c1, 10.0), std::nextafter(c2, 10.0), settings);
        CHECK(above.criterion_one);
        CHECK(above.criterion_two);
    }
}
