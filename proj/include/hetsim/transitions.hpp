#pragma once

#include "model.hpp"
#include "random.hpp"
#include "selection.hpp"

#include <span>
#include <vector>

namespace hetsim {

enum class EventKind { Arrival, ServiceCompletion, Phantom };

struct EventTag {
    EventKind kind = EventKind::Phantom;
    int server = -1;  // 0-based; -1 for Phantom

    bool operator==(const EventTag&) const = default;
};

struct Transition {
    SystemState successor;
    double probability = 0.0;
    EventTag event;
};

// One step of the uniformized jump chain (rate omega = lambda + sum mu) at a state.
struct TransitionDistribution {
    std::vector<Transition> entries;
    // Mass of potential service events at idle servers. Zero in paper-literal mode,
    // where that mass is dropped instead and total_mass() < 1 whenever a server is idle.
    double self_loop_probability = 0.0;

    [[nodiscard]] double total_mass() const;
};

struct JumpOptions {
    // Drop idle-server events instead of turning them into a self-loop.
    bool paper_literal = false;
};

// Per-server probability that an arrival joins that server when ranks follow
// `profile.server_at_rank` exactly.
Eigen::VectorXd routing_probabilities(const ModelConfig& cfg, const SelectionProfile<double>& profile);

// Per-server join probability averaged over every rank order consistent with
// the ties in `profile`: a tied group spanning ranks [f, l) shares the rank
// mass k(f+1..l) equally. This is the exact law of route_arrival().
Eigen::VectorXd averaged_routing_probabilities(const ModelConfig& cfg, const SelectionProfile<double>& profile);

// Successors of `state`: arrivals to server_at_rank[i] with probability
// a*k(M, i+1, d), services at busy servers j with probability mu_j/omega.
TransitionDistribution jump_distribution(const ModelConfig& cfg, const SystemState& state,
                                         const SelectionProfile<double>& profile, JumpOptions options = {});

// Same, with arrival mass averaged over tie orders (deterministic, no PRNG).
TransitionDistribution averaged_jump_distribution(const ModelConfig& cfg, const SystemState& state,
                                                  JumpOptions options = {});

// Samples d distinct servers uniformly, returns the sampled server with minimal
// Delta; ties among the minima are broken uniformly at random. 0-based.
int route_arrival(const ModelConfig& cfg, const SystemState& state, RandomStream& rng);

// Scratch space for averaged_shares; reusable across states of one config.
struct RoutingWorkspace {
    explicit RoutingWorkspace(const ModelConfig& cfg);

    Eigen::VectorXd rank_probability;  // rank_law(M, d)
    std::vector<int> order;
    std::vector<double> score;
};

// Allocation-free averaged_routing_probabilities for raw queue lengths `x`:
// writes each server's share of an arrival into `join`.
void averaged_shares(const ModelConfig& cfg, std::span<const int> x, RoutingWorkspace& ws, std::span<double> join);

// Variant that reuses caller-owned scratch storage (size M) across calls.
int route_arrival(const ModelConfig& cfg, const SystemState& state, RandomStream& rng, std::vector<int>& scratch);

}  // namespace hetsim
