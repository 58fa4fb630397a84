#pragma once

#include "model.hpp"
#include "random.hpp"

#include <algorithm>
#include <numeric>
#include <type_traits>
#include <utility>
#include <vector>

namespace hetsim {

// Relative tolerance under which two floating-point utility scores count as tied.
inline constexpr double tie_tolerance = 1e-12;

template <typename Scalar>
bool scores_tied(const Scalar& a, const Scalar& b)
{
    if constexpr (std::is_floating_point_v<Scalar>) {
        using std::abs;
        return abs(a - b) <= Scalar(tie_tolerance) * std::max(abs(a), abs(b));
    } else {
        return a == b;
    }
}

// Unnormalized utility of server i (the numerator of Delta_i).
template <typename Scalar>
Scalar utility_score(const BasicModelConfig<Scalar>& cfg, int i, int queue_length)
{
    const Scalar x = Scalar(queue_length);
    if (const auto* w = std::get_if<Weighted<Scalar>>(&cfg.selection)) {
        return Scalar(1) + w->beta1 * x + w->beta2 / cfg.mu[i] + w->beta3 / cfg.g[i];
    }
    return Scalar(1) + x / (cfg.mu[i] * cfg.g[i]);
}

template <typename Scalar>
Vector<Scalar> utility_scores(const BasicModelConfig<Scalar>& cfg, const SystemState& state)
{
    Vector<Scalar> s(cfg.servers);
    for (int i = 0; i < cfg.servers; ++i) {
        s[i] = utility_score(cfg, i, state[i]);
    }
    return s;
}

// Delta-vector at a state together with its ascending order.
//
// Ranks are 0-based here: server_at_rank[0] is the server with the smallest
// Delta. tie_groups lists half-open rank ranges [first, last) of servers whose
// scores are tied, in ascending order; singletons are included.
template <typename Scalar = double>
struct SelectionProfile {
    Vector<Scalar> delta;
    std::vector<int> rank_of_server;
    std::vector<int> server_at_rank;
    std::vector<std::pair<int, int>> tie_groups;
};

namespace detail {

template <typename Scalar>
SelectionProfile<Scalar> sorted_profile(const Vector<Scalar>& scores)
{
    const int m = static_cast<int>(scores.size());
    SelectionProfile<Scalar> p;
    p.delta = scores / scores.sum();
    p.server_at_rank.resize(m);
    std::iota(p.server_at_rank.begin(), p.server_at_rank.end(), 0);
    std::stable_sort(p.server_at_rank.begin(), p.server_at_rank.end(),
                     [&](int a, int b) { return scores[a] < scores[b]; });

    // Group runs of tied scores; each run is anchored on its first member so
    // groups cannot chain across a gap wider than the tolerance.
    int first = 0;
    for (int r = 1; r <= m; ++r) {
        if (r == m || !scores_tied(scores[p.server_at_rank[first]], scores[p.server_at_rank[r]])) {
            std::sort(p.server_at_rank.begin() + first, p.server_at_rank.begin() + r);
            p.tie_groups.emplace_back(first, r);
            first = r;
        }
    }
    p.rank_of_server.resize(m);
    for (int r = 0; r < m; ++r) {
        p.rank_of_server[p.server_at_rank[r]] = r;
    }
    return p;
}

}  // namespace detail

// Deterministic profile: tied servers are ordered by server index.
template <typename Scalar>
SelectionProfile<Scalar> selection_values(const BasicModelConfig<Scalar>& cfg, const SystemState& state)
{
    check_state(cfg, state);
    return detail::sorted_profile(utility_scores(cfg, state));
}

// Randomized profile: tied servers receive a uniformly random relative order.
template <typename Scalar>
SelectionProfile<Scalar> selection_values(const BasicModelConfig<Scalar>& cfg, const SystemState& state,
                                          RandomStream& rng)
{
    auto p = selection_values(cfg, state);
    for (const auto& [first, last] : p.tie_groups) {
        for (int r = last - 1; r > first; --r) {
            const int j = first + static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(r - first + 1)));
            std::swap(p.server_at_rank[r], p.server_at_rank[j]);
        }
        for (int r = first; r < last; ++r) {
            p.rank_of_server[p.server_at_rank[r]] = r;
        }
    }
    return p;
}

}  // namespace hetsim
