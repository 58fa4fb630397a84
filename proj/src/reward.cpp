#include "hetsim/reward.hpp"

#include "hetsim/selection.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

namespace hetsim {

namespace {
template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;
}  // namespace

double evaluate_reward(const RewardSpec& spec, const ModelConfig& cfg, const SystemState& state)
{
    return std::visit(overloaded{
                          [&](reward::RMin) {
                              const auto s = utility_scores(cfg, state);
                              return s.minCoeff() / s.sum();
                          },
                          [&](reward::RMax) {
                              const auto s = utility_scores(cfg, state);
                              return s.maxCoeff() / s.sum();
                          },
                          [&](reward::QueueLength q) {
                              if (q.server < 0 || q.server >= state.size()) {
                                  throw ConfigError("reward: queue server index out of range");
                              }
                              return static_cast<double>(state[q.server]);
                          },
                          [&](reward::TotalQueueLength) { return static_cast<double>(state.sum()); },
                          [](reward::Constant c) { return c.value; },
                      },
                      spec);
}

bool is_bounded(const RewardSpec& spec)
{
    return std::holds_alternative<reward::RMin>(spec) || std::holds_alternative<reward::RMax>(spec) ||
           std::holds_alternative<reward::Constant>(spec);
}

double reward_bound(const RewardSpec& spec, const ModelConfig& cfg, const SystemState& origin, long jumps)
{
    return std::visit(overloaded{
                          // The smallest of M normalized shares never exceeds 1/M.
                          [&](reward::RMin) { return 1.0 / cfg.servers; },
                          [](reward::RMax) { return 1.0; },
                          [&](reward::QueueLength q) { return static_cast<double>(origin[q.server] + jumps); },
                          [&](reward::TotalQueueLength) { return static_cast<double>(origin.sum() + jumps); },
                          [](reward::Constant c) { return std::abs(c.value); },
                      },
                      spec);
}

RewardSpec parse_reward(std::string_view text)
{
    if (text == "rmin") {
        return reward::RMin{};
    }
    if (text == "rmax") {
        return reward::RMax{};
    }
    if (text == "total") {
        return reward::TotalQueueLength{};
    }
    const auto colon = text.find(':');
    if (colon != std::string_view::npos) {
        const auto head = text.substr(0, colon);
        const std::string tail(text.substr(colon + 1));
        if (head == "constant") {
            std::size_t used = 0;
            double v = 0.0;
            try {
                v = std::stod(tail, &used);
            } catch (const std::exception&) {
                used = 0;
            }
            if (used == tail.size() && used > 0) {
                return reward::Constant{v};
            }
        } else if (head == "queue") {
            int server = 0;
            const auto [ptr, ec] = std::from_chars(tail.data(), tail.data() + tail.size(), server);
            if (ec == std::errc{} && ptr == tail.data() + tail.size() && server >= 1) {
                return reward::QueueLength{server - 1};
            }
        }
    }
    throw ConfigError("reward: unrecognized reward '" + std::string(text) +
                      "' (expected rmin, rmax, total, queue:<server>, constant:<c>)");
}

std::string to_string(const RewardSpec& spec)
{
    return std::visit(overloaded{
                          [](reward::RMin) -> std::string { return "rmin"; },
                          [](reward::RMax) -> std::string { return "rmax"; },
                          [](reward::QueueLength q) { return "queue:" + std::to_string(q.server + 1); },
                          [](reward::TotalQueueLength) -> std::string { return "total"; },
                          [](reward::Constant c) {
                              std::ostringstream os;
                              os.precision(17);
                              os << "constant:" << c.value;
                              return os.str();
                          },
                      },
                      spec);
}

}  // namespace hetsim
