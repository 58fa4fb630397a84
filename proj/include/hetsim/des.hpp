#pragma once

#include "model.hpp"
#include "random.hpp"
#include "reward.hpp"
#include "reward_kernel.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace hetsim {

struct SimPlan {
    double warmup_time = 1e3;
    double measure_time = 1e4;
    int replications = 30;
    std::uint64_t seed = 0;
    SystemState initial_state;  // empty: all servers start idle
};

void validate(const SimPlan& plan);

// Time averages over the measurement window of one replication.
struct ReplicationResult {
    Eigen::VectorXd mean_queue_length;
    Eigen::VectorXd utilization;
    Eigen::VectorXd throughput;  // departures per unit time
    long arrivals = 0;
};

struct SimStats {
    Eigen::VectorXd per_server_mean_queue_length;
    Eigen::VectorXd per_server_ci_halfwidth;
    Eigen::VectorXd utilization;
    Eigen::VectorXd utilization_ci_halfwidth;
    Eigen::VectorXd throughput;
    Eigen::VectorXd throughput_ci_halfwidth;
    double total_mean = 0.0;
    double total_ci_halfwidth = 0.0;
    long arrivals_observed = 0;
    bool unstable = false;  // lambda >= sum(mu); means may not converge
    std::vector<ReplicationResult> replications;
};

// One replication driven by the stream `rng` (next-event time advance over one
// arrival clock and M service clocks; FCFS with exponential services).
ReplicationResult simulate_replication(const ModelConfig& cfg, const SimPlan& plan, RandomStream rng);

// Independent replications on substreams of plan.seed, aggregated in replication order.
SimStats simulate(const ModelConfig& cfg, const SimPlan& plan);

// Unbiased estimate of E[ integral_0^t r(X(s)) ds | X(0) = x0 ] from `paths`
// simulated trajectories, accumulating r(state) * holding time per segment.
RewardEstimate mc_reward_estimate(const ModelConfig& cfg, const SystemState& x0, const RewardSpec& spec, double t,
                                  long paths, std::uint64_t seed);

enum class Preset { One, Two, Three };

struct ExperimentPreset {
    Preset id = Preset::One;
    std::string name;
    ModelConfig cfg;
    Eigen::VectorXd published;  // expected queue length per server, as printed
};

ExperimentPreset experiment_preset(Preset p);
// Accepts "one", "two", "three", "1".."3", and "experiment-<n>" forms.
Preset parse_preset(std::string_view text);

struct ExperimentReport {
    ExperimentPreset preset;
    SimStats stats;
    Eigen::VectorXd absolute_difference;
    double spearman = 0.0;

    [[nodiscard]] int servers_within(double tolerance) const;
};

ExperimentReport run_experiment(Preset p, const SimPlan& plan);

}  // namespace hetsim
