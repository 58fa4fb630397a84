#include "hetsim/des.hpp"

#include "hetsim/errors.hpp"
#include "hetsim/parallel.hpp"
#include "hetsim/stats.hpp"
#include "hetsim/transitions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace hetsim {

void validate(const SimPlan& plan)
{
    if (!(plan.warmup_time >= 0.0)) {
        throw ConfigError("warmup_time: must be nonnegative");
    }
    if (!(plan.measure_time > 0.0)) {
        throw ConfigError("measure_time: must be positive");
    }
    if (plan.replications < 1) {
        throw ConfigError("replications: must be at least 1");
    }
}

ReplicationResult simulate_replication(const ModelConfig& cfg, const SimPlan& plan, RandomStream rng)
{
    const int m = cfg.servers;
    constexpr double never = std::numeric_limits<double>::infinity();
    SystemState x = plan.initial_state.size() == 0 ? SystemState::Zero(m) : plan.initial_state;
    check_state(cfg, x);

    const double start = plan.warmup_time;
    const double end = plan.warmup_time + plan.measure_time;

    std::vector<double> completion(static_cast<std::size_t>(m), never);
    for (int j = 0; j < m; ++j) {
        if (x[j] > 0) {
            completion[static_cast<std::size_t>(j)] = rng.exponential(cfg.mu[j]);
        }
    }
    double next_arrival = rng.exponential(cfg.lambda);

    Eigen::VectorXd area = Eigen::VectorXd::Zero(m);
    Eigen::VectorXd busy = Eigen::VectorXd::Zero(m);
    Eigen::VectorXd departures = Eigen::VectorXd::Zero(m);
    long arrivals = 0;
    std::vector<int> scratch;
    double now = 0.0;

    while (true) {
        int server = -1;  // -1: arrival
        double next = next_arrival;
        for (int j = 0; j < m; ++j) {
            if (completion[static_cast<std::size_t>(j)] < next) {
                next = completion[static_cast<std::size_t>(j)];
                server = j;
            }
        }
        const double lo = std::max(now, start);
        const double hi = std::min(next, end);
        if (hi > lo) {
            const double dt = hi - lo;
            for (int j = 0; j < m; ++j) {
                area[j] += x[j] * dt;
                if (x[j] > 0) {
                    busy[j] += dt;
                }
            }
        }
        if (next >= end) {
            break;
        }
        now = next;
        const bool measuring = now >= start;
        if (server < 0) {
            const int s = route_arrival(cfg, x, rng, scratch);
            if (++x[s] == 1) {
                completion[static_cast<std::size_t>(s)] = now + rng.exponential(cfg.mu[s]);
            }
            next_arrival = now + rng.exponential(cfg.lambda);
            arrivals += measuring ? 1 : 0;
        } else {
            --x[server];
            if (measuring) {
                departures[server] += 1.0;
            }
            completion[static_cast<std::size_t>(server)] =
                x[server] > 0 ? now + rng.exponential(cfg.mu[server]) : never;
        }
    }

    ReplicationResult out;
    out.mean_queue_length = area / plan.measure_time;
    out.utilization = busy / plan.measure_time;
    out.throughput = departures / plan.measure_time;
    out.arrivals = arrivals;
    return out;
}

SimStats simulate(const ModelConfig& cfg, const SimPlan& plan)
{
    validate(cfg);
    validate(plan);
    const auto reps = static_cast<std::size_t>(plan.replications);
    const RandomStream root(plan.seed);

    SimStats stats;
    stats.replications.resize(reps);
    parallel_for(reps, [&](std::size_t r) { stats.replications[r] = simulate_replication(cfg, plan, root.split(r)); });

    const int m = cfg.servers;
    auto summarize = [&](auto&& field, Eigen::VectorXd& mean, Eigen::VectorXd& half) {
        mean.resize(m);
        half.resize(m);
        std::vector<double> column(reps);
        for (int j = 0; j < m; ++j) {
            for (std::size_t r = 0; r < reps; ++r) {
                column[r] = field(stats.replications[r])[j];
            }
            const auto ci = mean_ci95(column);
            mean[j] = ci.mean;
            half[j] = ci.halfwidth;
        }
    };
    summarize([](const ReplicationResult& r) -> const Eigen::VectorXd& { return r.mean_queue_length; },
              stats.per_server_mean_queue_length, stats.per_server_ci_halfwidth);
    summarize([](const ReplicationResult& r) -> const Eigen::VectorXd& { return r.utilization; }, stats.utilization,
              stats.utilization_ci_halfwidth);
    summarize([](const ReplicationResult& r) -> const Eigen::VectorXd& { return r.throughput; }, stats.throughput,
              stats.throughput_ci_halfwidth);

    std::vector<double> totals(reps);
    for (std::size_t r = 0; r < reps; ++r) {
        totals[r] = stats.replications[r].mean_queue_length.sum();
        stats.arrivals_observed += stats.replications[r].arrivals;
    }
    const auto total = mean_ci95(totals);
    stats.total_mean = total.mean;
    stats.total_ci_halfwidth = total.halfwidth;
    stats.unstable = !(cfg.lambda < cfg.mu.sum());
    return stats;
}

RewardEstimate mc_reward_estimate(const ModelConfig& cfg, const SystemState& x0, const RewardSpec& spec, double t,
                                  long paths, std::uint64_t seed)
{
    validate(cfg);
    check_state(cfg, x0);
    if (paths < 1) {
        throw ArgumentError("mc_reward_estimate: paths must be at least 1");
    }
    if (t < 0.0) {
        throw ArgumentError("mc_reward_estimate: t must be nonnegative");
    }
    RewardEstimate est;
    est.method = EstimateMethod::MonteCarlo;
    est.bound_kind = BoundKind::Heuristic;
    est.samples_used = paths;
    if (t == 0.0) {
        return est;
    }

    std::vector<double> per_path(static_cast<std::size_t>(paths));
    const RandomStream root(seed, 0x6d632d7061746873ULL);
    parallel_for(per_path.size(), [&](std::size_t p) {
        RandomStream rng = root.split(p);
        SystemState x = x0;
        std::vector<int> scratch;
        double r = evaluate_reward(spec, cfg, x);
        // Summation by parts: integral = r_final * t - sum_i (r_i - r_{i-1}) * tau_i,
        // so a reward that never changes integrates to exactly r * t.
        double correction = 0.0;
        double now = 0.0;
        while (true) {
            double rate = cfg.lambda;
            for (int j = 0; j < cfg.servers; ++j) {
                if (x[j] > 0) {
                    rate += cfg.mu[j];
                }
            }
            now += rng.exponential(rate);
            if (now >= t) {
                break;
            }
            double u = rng.uniform() * rate;
            if (u < cfg.lambda) {
                ++x[route_arrival(cfg, x, rng, scratch)];
            } else {
                u -= cfg.lambda;
                // Last busy server absorbs any round-off in u.
                int j = -1;
                for (int i = 0; i < cfg.servers; ++i) {
                    if (x[i] == 0) {
                        continue;
                    }
                    j = i;
                    if (u < cfg.mu[i]) {
                        break;
                    }
                    u -= cfg.mu[i];
                }
                --x[j];
            }
            const double r_next = evaluate_reward(spec, cfg, x);
            if (r_next != r) {
                correction += (r_next - r) * now;
                r = r_next;
            }
        }
        per_path[p] = r * t - correction;
    });

    const auto summary = mean_ci95(per_path);
    est.value = summary.mean;
    if (paths > 1) {
        double ss = 0.0;
        for (double y : per_path) {
            ss += (y - summary.mean) * (y - summary.mean);
        }
        est.mc_standard_error = std::sqrt(ss / static_cast<double>(paths - 1) / static_cast<double>(paths));
    }
    est.truncation_error_bound = est.mc_standard_error;
    return est;
}

ExperimentPreset experiment_preset(Preset p)
{
    ExperimentPreset e;
    e.id = p;
    e.cfg.servers = 10;
    e.cfg.lambda = 10.0;
    e.cfg.selection = Tandem{};
    e.cfg.mu.resize(10);
    e.cfg.g.resize(10);
    e.published.resize(10);
    switch (p) {
    case Preset::One:
        e.name = "experiment-one";
        e.cfg.choices = 2;
        e.cfg.mu << 1.1, 1.2, 1.3, 1.4, 1.5, 1.6, 1.7, 1.8, 1.9, 2.0;
        e.cfg.g << 0.10, 0.20, 0.30, 0.05, 0.05, 0.02, 0.10, 0.03, 0.10, 0.05;
        e.published << 0.6834, 0.9454, 1.0440, 0.4318, 0.4234, 0.2894, 0.4864, 0.2793, 0.4319, 0.2640;
        break;
    case Preset::Two:
        e.name = "experiment-two";
        e.cfg.choices = 2;
        e.cfg.mu << 1, 2, 6, 8, 10, 16, 17, 18, 25, 26;
        e.cfg.g << 0.10, 0.20, 0.30, 0.05, 0.05, 0.02, 0.10, 0.03, 0.10, 0.05;
        e.published << 0.3459, 0.1656, 0.0274, 0.0158, 0.0105, 0.0042, 0.0038, 0.0034, 0.0018, 0.0017;
        break;
    case Preset::Three:
        e.name = "experiment-three";
        e.cfg.choices = 3;
        e.cfg.mu << 1, 3, 3, 6, 6, 6, 6, 9, 9, 15;
        e.cfg.g << 0.05, 0.20, 0.30, 0.03, 0.05, 0.10, 0.10, 0.05, 0.02, 0.10;
        e.published << 0.3447, 0.0580, 0.8598, 0.0265, 0.0265, 0.0266, 0.0265, 0.0126, 0.0127, 0.0048;
        break;
    }
    return e;
}

Preset parse_preset(std::string_view text)
{
    if (text.starts_with("experiment-")) {
        text.remove_prefix(11);
    }
    if (text == "one" || text == "1") {
        return Preset::One;
    }
    if (text == "two" || text == "2") {
        return Preset::Two;
    }
    if (text == "three" || text == "3") {
        return Preset::Three;
    }
    throw ConfigError("preset: unknown experiment '" + std::string(text) + "' (expected one, two, three)");
}

int ExperimentReport::servers_within(double tolerance) const
{
    return static_cast<int>((absolute_difference.array() <= tolerance).count());
}

ExperimentReport run_experiment(Preset p, const SimPlan& plan)
{
    ExperimentReport report;
    report.preset = experiment_preset(p);
    report.stats = simulate(report.preset.cfg, plan);
    report.absolute_difference = (report.stats.per_server_mean_queue_length - report.preset.published).cwiseAbs();
    report.spearman = spearman_correlation(report.stats.per_server_mean_queue_length, report.preset.published);
    return report;
}

}  // namespace hetsim
