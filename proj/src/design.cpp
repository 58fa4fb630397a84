#include "hetsim/design.hpp"

#include "hetsim/errors.hpp"

#include <cmath>

namespace hetsim {

DesignReport evaluate_design_criteria(std::span<const ModelConfig> candidates, const SystemState& state, double beta,
                                      double delta1, double delta2, const DesignSettings& settings)
{
    if (candidates.empty()) {
        throw ArgumentError("evaluate_design_criteria: candidate list is empty");
    }
    DesignReport report;
    report.rows.reserve(candidates.size());
    for (const auto& cfg : candidates) {
        validate(cfg);
        const SystemState x0 = state.size() == 0 ? SystemState::Zero(cfg.servers) : state;
        DesignRow row;
        for (const RewardSpec spec : {RewardSpec{reward::RMin{}}, RewardSpec{reward::RMax{}}}) {
            auto params = DiscountParams::for_discount(cfg, x0, spec, beta, settings.epsilon_tail,
                                                       settings.mc_fallback_samples, settings.seed);
            params.tree = settings.tree;
            auto est = expected_reward_discounted(cfg, x0, spec, params);
            (std::holds_alternative<reward::RMin>(spec) ? row.psi_min : row.psi_max) = est;
        }
        report.rows.push_back(row);
    }

    for (std::size_t i = 1; i < report.rows.size(); ++i) {
        const auto& r = report.rows[i];
        if (r.psi_min.value > report.rows[report.best_psi_min].psi_min.value) {
            report.best_psi_min = i;
        }
        if (r.psi_max.value < report.rows[report.best_psi_max].psi_max.value) {
            report.best_psi_max = i;
        }
        if (r.gap() < report.rows[report.best_gap].gap()) {
            report.best_gap = i;
        }
    }
    report.criterion_one_value = std::abs(report.rows[report.best_psi_max].psi_max.value -
                                          report.rows[report.best_psi_min].psi_min.value);
    report.criterion_two_value = report.rows[report.best_gap].gap();
    report.criterion_one = report.criterion_one_value < delta1;
    report.criterion_two = report.criterion_two_value < delta2;
    return report;
}

}  // namespace hetsim
