#pragma once

#include "model.hpp"

#include <string>
#include <string_view>
#include <variant>

namespace hetsim {

namespace reward {
struct RMin {
    bool operator==(const RMin&) const = default;
};
struct RMax {
    bool operator==(const RMax&) const = default;
};
struct QueueLength {
    int server = 0;  // 0-based
    bool operator==(const QueueLength&) const = default;
};
struct TotalQueueLength {
    bool operator==(const TotalQueueLength&) const = default;
};
struct Constant {
    double value = 0.0;
    bool operator==(const Constant&) const = default;
};
}  // namespace reward

using RewardSpec = std::variant<reward::RMin, reward::RMax, reward::QueueLength, reward::TotalQueueLength,
                                reward::Constant>;

double evaluate_reward(const RewardSpec& spec, const ModelConfig& cfg, const SystemState& state);

// True when |r| has a state-independent bound (RMin, RMax, Constant).
bool is_bounded(const RewardSpec& spec);

// sup |r(y)| over states y reachable from `origin` in at most `jumps` jumps.
double reward_bound(const RewardSpec& spec, const ModelConfig& cfg, const SystemState& origin, long jumps);

// "rmin", "rmax", "total", "queue:<server>" (1-based), "constant:<c>".
RewardSpec parse_reward(std::string_view text);
std::string to_string(const RewardSpec& spec);

}  // namespace hetsim
