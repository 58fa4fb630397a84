#pragma once

#include "errors.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <string>
#include <variant>
#include <vector>

namespace hetsim {

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

// Queue length of every server, counting the job in service.
using SystemState = Eigen::VectorXi;

struct Tandem {
    bool operator==(const Tandem&) const = default;
};

// Weighted utility beta1*x + beta2/mu + beta3/g; weights nonnegative, summing to 1.
template <typename Scalar = double>
struct Weighted {
    Scalar beta1 = Scalar(1) / Scalar(3);
    Scalar beta2 = Scalar(1) / Scalar(3);
    Scalar beta3 = Scalar(1) / Scalar(3);

    bool operator==(const Weighted&) const = default;
};

template <typename Scalar = double>
using SelectionKind = std::variant<Tandem, Weighted<Scalar>>;

template <typename Scalar = double>
struct BasicModelConfig {
    int servers = 1;  // M
    Scalar lambda = Scalar(1);
    Vector<Scalar> mu;
    Vector<Scalar> g;
    int choices = 1;  // d
    SelectionKind<Scalar> selection = Tandem{};

    // Uniformization rate: lambda + sum of service rates.
    [[nodiscard]] Scalar omega() const { return lambda + mu.sum(); }

    bool operator==(const BasicModelConfig& o) const
    {
        return servers == o.servers && lambda == o.lambda && mu == o.mu && g == o.g &&
               choices == o.choices && selection == o.selection;
    }
};

using ModelConfig = BasicModelConfig<double>;

inline constexpr double weight_sum_tolerance = 1e-12;

// Throws ConfigError naming the first offending field. Returns non-fatal warnings
// (g not summing to one, total service capacity not exceeding lambda).
template <typename Scalar>
std::vector<std::string> validate(const BasicModelConfig<Scalar>& cfg)
{
    using std::abs;
    if (cfg.servers < 1) {
        throw ConfigError("M: must be at least 1");
    }
    if (!(cfg.lambda > Scalar(0))) {
        throw ConfigError("lambda: must be positive");
    }
    if (cfg.mu.size() != cfg.servers) {
        throw ConfigError("mu: expected " + std::to_string(cfg.servers) + " entries, got " +
                          std::to_string(cfg.mu.size()));
    }
    if (cfg.g.size() != cfg.servers) {
        throw ConfigError("g: expected " + std::to_string(cfg.servers) + " entries, got " +
                          std::to_string(cfg.g.size()));
    }
    for (int i = 0; i < cfg.servers; ++i) {
        if (!(cfg.mu[i] > Scalar(0))) {
            throw ConfigError("mu[" + std::to_string(i) + "]: must be positive");
        }
        if (!(cfg.g[i] > Scalar(0) && cfg.g[i] <= Scalar(1))) {
            throw ConfigError("g[" + std::to_string(i) + "]: must lie in (0, 1]");
        }
    }
    if (cfg.choices < 1 || cfg.choices > cfg.servers) {
        throw ConfigError("d: must lie in [1, M]");
    }
    if (const auto* w = std::get_if<Weighted<Scalar>>(&cfg.selection)) {
        if (w->beta1 < Scalar(0) || w->beta2 < Scalar(0) || w->beta3 < Scalar(0)) {
            throw ConfigError("selection.betas: weights must be nonnegative");
        }
        if (abs(w->beta1 + w->beta2 + w->beta3 - Scalar(1)) > Scalar(weight_sum_tolerance)) {
            throw ConfigError("selection.betas: weights must sum to 1");
        }
    }

    std::vector<std::string> warnings;
    if (abs(cfg.g.sum() - Scalar(1)) > Scalar(1e-9)) {
        warnings.emplace_back("g: preference vector does not sum to 1");
    }
    if (!(cfg.lambda < cfg.mu.sum())) {
        warnings.emplace_back("lambda >= sum(mu): system is unstable, long-run means may not exist");
    }
    return warnings;
}

template <typename Scalar>
void check_state(const BasicModelConfig<Scalar>& cfg, const SystemState& state)
{
    if (state.size() != cfg.servers) {
        throw ConfigError("state: expected " + std::to_string(cfg.servers) + " queue lengths, got " +
                          std::to_string(state.size()));
    }
    if ((state.array() < 0).any()) {
        throw ConfigError("state: queue lengths must be nonnegative");
    }
}

}  // namespace hetsim
