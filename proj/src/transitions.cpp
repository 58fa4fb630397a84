#include "hetsim/transitions.hpp"

#include "hetsim/rank_law.hpp"

#include <numeric>

namespace hetsim {

double TransitionDistribution::total_mass() const
{
    double total = self_loop_probability;
    for (const auto& e : entries) {
        total += e.probability;
    }
    return total;
}

Eigen::VectorXd routing_probabilities(const ModelConfig& cfg, const SelectionProfile<double>& profile)
{
    const Eigen::VectorXd k = rank_law(cfg.servers, cfg.choices);
    Eigen::VectorXd p = Eigen::VectorXd::Zero(cfg.servers);
    for (int r = 0; r < cfg.servers; ++r) {
        p[profile.server_at_rank[r]] = k[r];
    }
    return p;
}

Eigen::VectorXd averaged_routing_probabilities(const ModelConfig& cfg, const SelectionProfile<double>& profile)
{
    const Eigen::VectorXd k = rank_law(cfg.servers, cfg.choices);
    Eigen::VectorXd p = Eigen::VectorXd::Zero(cfg.servers);
    for (const auto& [first, last] : profile.tie_groups) {
        const double share = k.segment(first, last - first).sum() / static_cast<double>(last - first);
        for (int r = first; r < last; ++r) {
            p[profile.server_at_rank[r]] = share;
        }
    }
    return p;
}

namespace {

TransitionDistribution assemble(const ModelConfig& cfg, const SystemState& state, const Eigen::VectorXd& join,
                                JumpOptions options)
{
    const double omega = cfg.omega();
    const double a = cfg.lambda / omega;
    TransitionDistribution out;
    out.entries.reserve(static_cast<std::size_t>(2 * cfg.servers));
    for (int s = 0; s < cfg.servers; ++s) {
        if (join[s] > 0.0) {
            SystemState next = state;
            ++next[s];
            out.entries.push_back({std::move(next), a * join[s], {EventKind::Arrival, s}});
        }
    }
    for (int j = 0; j < cfg.servers; ++j) {
        const double b = cfg.mu[j] / omega;
        if (state[j] > 0) {
            SystemState next = state;
            --next[j];
            out.entries.push_back({std::move(next), b, {EventKind::ServiceCompletion, j}});
        } else if (!options.paper_literal) {
            out.self_loop_probability += b;
        }
    }
    return out;
}

}  // namespace

TransitionDistribution jump_distribution(const ModelConfig& cfg, const SystemState& state,
                                         const SelectionProfile<double>& profile, JumpOptions options)
{
    check_state(cfg, state);
    return assemble(cfg, state, routing_probabilities(cfg, profile), options);
}

TransitionDistribution averaged_jump_distribution(const ModelConfig& cfg, const SystemState& state,
                                                  JumpOptions options)
{
    const auto profile = selection_values(cfg, state);
    return assemble(cfg, state, averaged_routing_probabilities(cfg, profile), options);
}

int route_arrival(const ModelConfig& cfg, const SystemState& state, RandomStream& rng, std::vector<int>& scratch)
{
    const int m = cfg.servers;
    scratch.resize(static_cast<std::size_t>(m));
    std::iota(scratch.begin(), scratch.end(), 0);
    // Partial Fisher-Yates: the first d slots become a uniform d-subset.
    for (int i = 0; i < cfg.choices; ++i) {
        const int j = i + static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(m - i)));
        std::swap(scratch[i], scratch[j]);
    }

    int best = scratch[0];
    double best_score = utility_score(cfg, best, state[best]);
    int tied = 1;
    for (int i = 1; i < cfg.choices; ++i) {
        const int s = scratch[i];
        const double score = utility_score(cfg, s, state[s]);
        if (scores_tied(score, best_score)) {
            // Reservoir sampling keeps a uniform choice among the tied minima.
            ++tied;
            if (rng.uniform_index(static_cast<std::uint64_t>(tied)) == 0) {
                best = s;
            }
        } else if (score < best_score) {
            best = s;
            best_score = score;
            tied = 1;
        }
    }
    return best;
}

RoutingWorkspace::RoutingWorkspace(const ModelConfig& cfg)
    : rank_probability(rank_law(cfg.servers, cfg.choices)),
      order(static_cast<std::size_t>(cfg.servers)),
      score(static_cast<std::size_t>(cfg.servers))
{
}

void averaged_shares(const ModelConfig& cfg, std::span<const int> x, RoutingWorkspace& ws, std::span<double> join)
{
    const int m = cfg.servers;
    for (int i = 0; i < m; ++i) {
        ws.score[static_cast<std::size_t>(i)] = utility_score(cfg, i, x[static_cast<std::size_t>(i)]);
    }
    // Stable insertion sort by score; M is small.
    for (int i = 0; i < m; ++i) {
        int r = i;
        const double s = ws.score[static_cast<std::size_t>(i)];
        while (r > 0 && ws.score[static_cast<std::size_t>(ws.order[static_cast<std::size_t>(r - 1)])] > s) {
            ws.order[static_cast<std::size_t>(r)] = ws.order[static_cast<std::size_t>(r - 1)];
            --r;
        }
        ws.order[static_cast<std::size_t>(r)] = i;
    }
    // Same grouping as selection_values: runs tied to their first member share their rank mass.
    int first = 0;
    for (int r = 1; r <= m; ++r) {
        const auto lead = static_cast<std::size_t>(ws.order[static_cast<std::size_t>(first)]);
        if (r == m || !scores_tied(ws.score[lead], ws.score[static_cast<std::size_t>(ws.order[static_cast<std::size_t>(r)])])) {
            const double share = ws.rank_probability.segment(first, r - first).sum() / static_cast<double>(r - first);
            for (int q = first; q < r; ++q) {
                join[static_cast<std::size_t>(ws.order[static_cast<std::size_t>(q)])] = share;
            }
            first = r;
        }
    }
}

int route_arrival(const ModelConfig& cfg, const SystemState& state, RandomStream& rng)
{
    std::vector<int> scratch;
    return route_arrival(cfg, state, rng, scratch);
}

}  // namespace hetsim
