#pragma once

#include "model.hpp"
#include "reward_kernel.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace hetsim {

struct DesignRow {
    RewardEstimate psi_min;  // discounted reward with r = r_min
    RewardEstimate psi_max;  // discounted reward with r = r_max
    [[nodiscard]] double gap() const { return psi_max.value - psi_min.value; }
};

struct DesignReport {
    std::vector<DesignRow> rows;
    std::size_t best_psi_min = 0;  // argmax of psi_min
    std::size_t best_psi_max = 0;  // argmin of psi_max
    std::size_t best_gap = 0;      // argmin of psi_max - psi_min
    double criterion_one_value = 0.0;  // |min psi_max - max psi_min|
    double criterion_two_value = 0.0;  // min gap
    bool criterion_one = false;        // criterion_one_value < delta1
    bool criterion_two = false;        // criterion_two_value < delta2
};

struct DesignSettings {
    double epsilon_tail = 1e-10;
    long mc_fallback_samples = 20'000;
    std::uint64_t seed = 0;
    TreeOptions tree;
};

// Evaluates the three arg-optima and both design criteria over a finite grid.
// An empty `state` means every candidate starts from its all-zero state.
DesignReport evaluate_design_criteria(std::span<const ModelConfig> candidates, const SystemState& state, double beta,
                                      double delta1, double delta2, const DesignSettings& settings = {});

}  // namespace hetsim
