#pragma once

#include "model.hpp"
#include "reward.hpp"

#include <cstddef>
#include <cstdint>
#include <vector>

namespace hetsim {

enum class EstimateMethod { ExactTree, HybridTreeMC, MonteCarlo };

// Rigorous: the bound covers all series/tree truncation.
// Heuristic: the bound includes a Monte Carlo standard error.
enum class BoundKind { Rigorous, Heuristic };

struct RewardEstimate {
    double value = 0.0;
    double truncation_error_bound = 0.0;
    EstimateMethod method = EstimateMethod::ExactTree;
    long samples_used = 0;
    BoundKind bound_kind = BoundKind::Rigorous;
    int exact_depth = 0;              // deepest jump level evaluated exactly
    int series_length = 0;            // last jump level included in the series
    double mc_standard_error = 0.0;   // part of the bound contributed by sampling
    double pruned_mass = 0.0;         // probability mass discarded from the tree, covered by the bound
};

const char* to_string(EstimateMethod m);
const char* to_string(BoundKind k);

struct TreeOptions {
    // Cap on the number of distinct states held in one level of the event tree.
    std::size_t node_budget = 5'000'000;
    // Drop idle-server mass (sub-stochastic levels) instead of self-looping.
    bool paper_literal = false;
    // Let series evaluation discard the lightest nodes of each level, within a
    // mass allowance whose worst-case effect (half of epsilon_tail) is added to
    // the reported bound. exact_level_means never prunes.
    bool prune = true;
};

struct HorizonParams {
    double t = 1.0;
    int n_max = 0;    // outer Poisson series truncation
    int k_max = 0;    // deepest level attempted by exact enumeration
    double epsilon_tail = 1e-10;
    long mc_fallback_samples = 0;
    std::uint64_t seed = 0;
    TreeOptions tree;

    // n_max from the Poisson(omega t) tail, k_max = n_max.
    static HorizonParams for_horizon(const ModelConfig& cfg, double t, double epsilon_tail = 1e-10,
                                     long mc_fallback_samples = 20'000, std::uint64_t seed = 0);
};

struct DiscountParams {
    double beta = 1.0;
    int k_max = 0;    // last jump level included in the series
    double epsilon_tail = 1e-10;
    long mc_fallback_samples = 0;
    std::uint64_t seed = 0;
    TreeOptions tree;

    // Smallest k_max whose series tail bound for `spec` from `state` is below epsilon_tail.
    static DiscountParams for_discount(const ModelConfig& cfg, const SystemState& state, const RewardSpec& spec,
                                       double beta, double epsilon_tail = 1e-10, long mc_fallback_samples = 20'000,
                                       std::uint64_t seed = 0);
};

// Exact conditional means E[r(X(eta_k)) | X(0) = x] for k = 0..depth, computed
// level by level over the jump-chain event tree. Identical states within a
// level are merged, so a level holds its distinct states with their
// accumulated path probabilities. Arrival ranks are recomputed at every node.
// Stops early (fewer entries returned) when a level would exceed the budget.
std::vector<double> exact_level_means(const ModelConfig& cfg, const SystemState& state, const RewardSpec& spec,
                                      int depth, const TreeOptions& options = {});

// Single level k >= 1; throws CapacityError when the node budget is exceeded.
double re_k(const ModelConfig& cfg, const SystemState& state, const RewardSpec& spec, int k,
            const TreeOptions& options = {});

// Expected discounted length of the k-th inter-jump segment: (w/(w+b))^k / (w+b).
double theta_k(double omega, double beta, int k);
double theta_k(const ModelConfig& cfg, double beta, int k);

// Poisson(mean) probabilities p_0..p_{n}, computed in log space.
std::vector<double> poisson_pmf(double mean, int n);

// Smallest n with P(Poisson(mean) > n) < epsilon.
int poisson_truncation_point(double mean, double epsilon);

// E[ integral_0^t r(X(s)) ds | X(0) = state ].
RewardEstimate expected_reward_finite(const ModelConfig& cfg, const SystemState& state, const RewardSpec& spec,
                                      const HorizonParams& params);

// E[ integral_0^inf e^{-beta s} r(X(s)) ds | X(0) = state ].
RewardEstimate expected_reward_discounted(const ModelConfig& cfg, const SystemState& state, const RewardSpec& spec,
                                          const DiscountParams& params);

}  // namespace hetsim
