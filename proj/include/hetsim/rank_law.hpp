#pragma once

#include "errors.hpp"
#include "model.hpp"

#include <string>

namespace hetsim {

// Probability k(M, i, d) that the server of (1-based) rank i is the minimum of a
// uniformly random d-subset of M ranked servers:
//
//   k = d (M-i)! (M-d)! / ((M-i-d+1)! M!)   for i <= M-d+1, zero otherwise,
//
// evaluated as d/M * prod_{j=1}^{d-1} (M-i-j+1)/(M-j), which never forms a
// factorial. Works for any field type (double, rationals, ...).
template <typename Scalar = double>
Scalar rank_selection_probability(int servers, int rank, int choices)
{
    if (servers < 1) {
        throw ArgumentError("rank_selection_probability: M must be positive");
    }
    if (rank < 1 || rank > servers) {
        throw ArgumentError("rank_selection_probability: rank " + std::to_string(rank) + " outside [1, " +
                            std::to_string(servers) + "]");
    }
    if (choices < 1 || choices > servers) {
        throw ArgumentError("rank_selection_probability: d " + std::to_string(choices) + " outside [1, " +
                            std::to_string(servers) + "]");
    }
    if (rank > servers - choices + 1) {
        return Scalar(0);
    }
    Scalar p = Scalar(choices) / Scalar(servers);
    for (int j = 1; j < choices; ++j) {
        p *= Scalar(servers - rank - j + 1) / Scalar(servers - j);
    }
    return p;
}

// Poisson arrival rate seen by the server holding (1-based) rank `rank`.
template <typename Scalar>
Scalar arrival_rate_at_rank(const BasicModelConfig<Scalar>& cfg, int rank)
{
    return cfg.lambda * rank_selection_probability<Scalar>(cfg.servers, rank, cfg.choices);
}

// k(M, i, d) for i = 1..M, stored 0-based.
template <typename Scalar = double>
Vector<Scalar> rank_law(int servers, int choices)
{
    Vector<Scalar> k(servers);
    for (int i = 0; i < servers; ++i) {
        k[i] = rank_selection_probability<Scalar>(servers, i + 1, choices);
    }
    return k;
}

}  // namespace hetsim
