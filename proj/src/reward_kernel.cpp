#include "hetsim/reward_kernel.hpp"

#include "hetsim/errors.hpp"
#include "hetsim/parallel.hpp"
#include "hetsim/random.hpp"
#include "hetsim/transitions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <unordered_map>


namespace hetsim {

const char* to_string(EstimateMethod m)
{
    switch (m) {
    case EstimateMethod::ExactTree:
        return "exact-tree";
    case EstimateMethod::HybridTreeMC:
        return "hybrid-tree-mc";
    case EstimateMethod::MonteCarlo:
        return "monte-carlo";
    }
    return "unknown";
}

const char* to_string(BoundKind k)
{
    return k == BoundKind::Rigorous ? "rigorous" : "heuristic";
}

namespace {

struct StateHash {
    std::size_t operator()(const SystemState& s) const noexcept
    {
        std::size_t h = 0xcbf29ce484222325ULL;
        for (Eigen::Index i = 0; i < s.size(); ++i) {
            h ^= static_cast<std::size_t>(static_cast<std::uint32_t>(s[i]));
            h *= 0x100000001b3ULL;
        }
        return h;
    }
};

using Frontier = std::unordered_map<SystemState, double, StateHash>;

// One jump of the uniformized chain. Returns false when the jump is an idle-server
// event in paper-literal mode, which removes the path's mass.
bool jump(const ModelConfig& cfg, SystemState& state, RandomStream& rng, bool paper_literal,
          std::vector<int>& scratch)
{
    double u = rng.uniform() * cfg.omega();
    if (u < cfg.lambda) {
        ++state[route_arrival(cfg, state, rng, scratch)];
        return true;
    }
    u -= cfg.lambda;
    int j = 0;
    while (j + 1 < cfg.servers && u >= cfg.mu[j]) {
        u -= cfg.mu[j];
        ++j;
    }
    if (state[j] > 0) {
        --state[j];
        return true;
    }
    return !paper_literal;
}

struct SampleSummary {
    double mean = 0.0;
    double standard_error = 0.0;
};

// Monte Carlo estimate of sum_{k=first}^{weights.size()-1} weights[k] * r(X_k)
// over jump-chain paths from `state`. One substream per path; per-path results
// are reduced in path order so the estimate does not depend on thread count.
SampleSummary sample_level_tail(const ModelConfig& cfg, const SystemState& state, const RewardSpec& spec,
                                const std::vector<double>& weights, int first, long samples, std::uint64_t seed,
                                bool paper_literal)
{
    const int last = static_cast<int>(weights.size()) - 1;
    std::vector<double> per_path(static_cast<std::size_t>(samples), 0.0);
    const RandomStream root(seed, 0x7265776172646bULL);
    parallel_for(per_path.size(), [&](std::size_t p) {
        RandomStream rng = root.split(p);
        SystemState x = state;
        std::vector<int> scratch;
        double acc = 0.0;
        for (int k = 1; k <= last; ++k) {
            if (!jump(cfg, x, rng, paper_literal, scratch)) {
                break;
            }
            if (k >= first) {
                acc += weights[static_cast<std::size_t>(k)] * evaluate_reward(spec, cfg, x);
            }
        }
        per_path[p] = acc;
    });

    double sum = 0.0;
    for (double y : per_path) {
        sum += y;
    }
    const double n = static_cast<double>(samples);
    const double mean = sum / n;
    double ss = 0.0;
    for (double y : per_path) {
        ss += (y - mean) * (y - mean);
    }
    const double variance = samples > 1 ? ss / (n - 1.0) : 0.0;
    return {mean, std::sqrt(variance / n)};
}

double log_poisson(double mean, long n)
{
    if (mean == 0.0) {
        return n == 0 ? 0.0 : -std::numeric_limits<double>::infinity();
    }
    return -mean + static_cast<double>(n) * std::log(mean) - std::lgamma(static_cast<double>(n) + 1.0);
}

// Upper end of the range where Poisson(mean) mass is not negligible in double precision.
long poisson_support_limit(double mean)
{
    return static_cast<long>(std::ceil(mean + 40.0 * std::sqrt(mean + 1.0) + 60.0));
}

}  // namespace

std::vector<double> poisson_pmf(double mean, int n)
{
    std::vector<double> p(static_cast<std::size_t>(n) + 1);
    for (int i = 0; i <= n; ++i) {
        p[static_cast<std::size_t>(i)] = std::exp(log_poisson(mean, i));
    }
    return p;
}

int poisson_truncation_point(double mean, double epsilon)
{
    if (!(epsilon > 0.0)) {
        throw ArgumentError("poisson_truncation_point: epsilon must be positive");
    }
    const long limit = poisson_support_limit(mean);
    // Suffix sums accumulated from the far end keep full relative precision in the tail.
    double tail = 0.0;
    long n = limit;
    for (; n >= 0; --n) {
        const double next_tail = tail + std::exp(log_poisson(mean, n));
        if (next_tail >= epsilon) {
            break;  // P(N > n) = tail < epsilon but P(N > n-1) >= epsilon
        }
        tail = next_tail;
    }
    if (n < 0) {
        return 0;
    }
    if (n > std::numeric_limits<int>::max()) {
        throw CapacityError("poisson_truncation_point: series length exceeds int range");
    }
    return static_cast<int>(n);
}

HorizonParams HorizonParams::for_horizon(const ModelConfig& cfg, double t, double epsilon_tail,
                                         long mc_fallback_samples, std::uint64_t seed)
{
    HorizonParams p;
    p.t = t;
    p.epsilon_tail = epsilon_tail;
    p.n_max = poisson_truncation_point(cfg.omega() * t, epsilon_tail);
    p.k_max = p.n_max;
    p.mc_fallback_samples = mc_fallback_samples;
    p.seed = seed;
    return p;
}

namespace {

// sum_{k > depth} theta_k * bound_k with bound_k = sup|r| over k-jump reachable states.
double discounted_tail(const RewardSpec& spec, const ModelConfig& cfg, const SystemState& state, double beta,
                       int depth)
{
    const double omega = cfg.omega();
    const double q = omega / (omega + beta);
    const double qk = std::pow(q, depth + 1);
    if (is_bounded(spec)) {
        return reward_bound(spec, cfg, state, 0) * qk / beta;
    }
    // bound_k = s0 + k for queue-length rewards (one arrival per jump at most).
    const double s0 = reward_bound(spec, cfg, state, 0);
    const double one_minus_q = 1.0 - q;
    const double k = depth;
    return (s0 * qk / one_minus_q + qk * ((k + 1.0) - k * q) / (one_minus_q * one_minus_q)) / (omega + beta);
}

}  // namespace

DiscountParams DiscountParams::for_discount(const ModelConfig& cfg, const SystemState& state,
                                            const RewardSpec& spec, double beta, double epsilon_tail,
                                            long mc_fallback_samples, std::uint64_t seed)
{
    if (!(beta > 0.0)) {
        throw ArgumentError("discount rate beta must be positive");
    }
    DiscountParams p;
    p.beta = beta;
    p.epsilon_tail = epsilon_tail;
    p.mc_fallback_samples = mc_fallback_samples;
    p.seed = seed;
    constexpr int max_depth = 10'000'000;
    int k = 0;
    while (discounted_tail(spec, cfg, state, beta, k) >= epsilon_tail) {
        if (++k > max_depth) {
            throw CapacityError("discount series needs more than " + std::to_string(max_depth) +
                                " terms for the requested tail bound");
        }
    }
    p.k_max = k;
    return p;
}

namespace {

// Bits per coordinate needed to hold every queue length reachable within `depth` jumps,
// or 0 when the packed 64-bit key cannot hold the state.
int packed_width(const SystemState& state, int depth)
{
    const long top = static_cast<long>(state.maxCoeff()) + depth;
    int bits = 1;
    while ((1L << bits) <= top) {
        ++bits;
    }
    return bits * state.size() <= 64 ? bits : 0;
}

// Summation follows iteration order, so the table must iterate identically across runs:
// a fixed mixing hash in std::unordered_map (no per-process or per-table salt).
struct PackedHash {
    std::size_t operator()(std::uint64_t z) const noexcept
    {
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return static_cast<std::size_t>(z ^ (z >> 31));
    }
};
using PackedLevel = std::unordered_map<std::uint64_t, double, PackedHash>;

struct TreeLevels {
    std::vector<double> means;
    std::vector<double> dropped;  // cumulative probability mass pruned up to each level
};

// Removes the lightest nodes of a level whose masses sum to at most `allowance`;
// returns the mass removed.
template <class Map>
double prune_level(Map& level, double allowance, std::vector<double>& scratch)
{
    if (allowance <= 0.0 || level.size() < 64) {
        return 0.0;
    }
    scratch.clear();
    for (const auto& kv : level) {
        scratch.push_back(kv.second);
    }
    std::sort(scratch.begin(), scratch.end());
    double sum = 0.0;
    std::size_t j = 0;
    while (j < scratch.size() && sum + scratch[j] <= allowance) {
        sum += scratch[j];
        ++j;
    }
    if (j == 0) {
        return 0.0;
    }
    const double cutoff = j < scratch.size() ? scratch[j] : std::numeric_limits<double>::infinity();
    double removed = 0.0;
    for (auto it = level.begin(); it != level.end();) {
        if (it->second < cutoff) {
            removed += it->second;
            it = level.erase(it);
        } else {
            ++it;
        }
    }
    return removed;
}

// Level recursion over states packed into one 64-bit key (coordinate i in bits
// [i*w, (i+1)*w)). A jump adds or subtracts one coordinate stride.
TreeLevels packed_tree(const ModelConfig& cfg, const SystemState& state, const RewardSpec& spec, int depth,
                       const TreeOptions& options, int width, const std::vector<double>& allowance)
{
    const int m = cfg.servers;
    const std::uint64_t mask = (std::uint64_t{1} << width) - 1;
    SystemState x(m);
    auto decode = [&](std::uint64_t key) {
        for (int i = 0; i < m; ++i) {
            x[i] = static_cast<int>((key >> (i * width)) & mask);
        }
    };
    std::uint64_t origin = 0;
    for (int i = m - 1; i >= 0; --i) {
        origin = (origin << width) | static_cast<std::uint64_t>(state[i]);
    }

    const double omega = cfg.omega();
    const double a = cfg.lambda / omega;
    const Eigen::VectorXd b = cfg.mu / omega;
    RoutingWorkspace ws(cfg);
    std::vector<double> join(static_cast<std::size_t>(m));
    std::vector<double> scratch;

    TreeLevels out{{evaluate_reward(spec, cfg, state)}, {0.0}};
    PackedLevel frontier{{origin, 1.0}};
    PackedLevel next;
    double dropped = 0.0;
    for (int k = 1; k <= depth; ++k) {
        next.clear();
        next.reserve(std::min(options.node_budget, frontier.size() * 2 + 16));
        for (const auto& [key, mass] : frontier) {
            decode(key);
            averaged_shares(cfg, std::span<const int>(x.data(), static_cast<std::size_t>(m)), ws, join);
            double stay = 0.0;
            for (int i = 0; i < m; ++i) {
                const std::uint64_t stride = std::uint64_t{1} << (i * width);
                const double share = join[static_cast<std::size_t>(i)];
                if (share > 0.0) {
                    next[key + stride] += mass * a * share;
                }
                if (x[i] > 0) {
                    next[key - stride] += mass * b[i];
                } else if (!options.paper_literal) {
                    stay += b[i];
                }
            }
            if (stay > 0.0) {
                next[key] += mass * stay;
            }
            if (next.size() > options.node_budget) {
                return out;
            }
        }
        dropped += prune_level(next, allowance.empty() ? 0.0 : allowance[static_cast<std::size_t>(k)], scratch);
        double level = 0.0;
        for (const auto& [key, mass] : next) {
            decode(key);
            level += mass * evaluate_reward(spec, cfg, x);
        }
        out.means.push_back(level);
        out.dropped.push_back(dropped);
        frontier.swap(next);
    }
    return out;
}

TreeLevels general_tree(const ModelConfig& cfg, const SystemState& state, const RewardSpec& spec, int depth,
                        const TreeOptions& options, const std::vector<double>& allowance)
{
    TreeLevels out{{evaluate_reward(spec, cfg, state)}, {0.0}};
    Frontier frontier{{state, 1.0}};
    const JumpOptions jump_options{options.paper_literal};
    std::vector<double> scratch;
    double dropped = 0.0;
    for (int k = 1; k <= depth; ++k) {
        Frontier next;
        next.reserve(std::min(options.node_budget, frontier.size() * 3));
        for (const auto& [node, mass] : frontier) {
            const auto dist = averaged_jump_distribution(cfg, node, jump_options);
            for (const auto& e : dist.entries) {
                next[e.successor] += mass * e.probability;
            }
            if (dist.self_loop_probability > 0.0) {
                next[node] += mass * dist.self_loop_probability;
            }
            if (next.size() > options.node_budget) {
                return out;
            }
        }
        dropped += prune_level(next, allowance.empty() ? 0.0 : allowance[static_cast<std::size_t>(k)], scratch);
        double level = 0.0;
        for (const auto& [node, mass] : next) {
            level += mass * evaluate_reward(spec, cfg, node);
        }
        out.means.push_back(level);
        out.dropped.push_back(dropped);
        frontier = std::move(next);
    }
    return out;
}

TreeLevels run_tree(const ModelConfig& cfg, const SystemState& state, const RewardSpec& spec, int depth,
                    const TreeOptions& options, const std::vector<double>& allowance)
{
    check_state(cfg, state);
    if (const int width = packed_width(state, depth); width > 0) {
        return packed_tree(cfg, state, spec, depth, options, width, allowance);
    }
    return general_tree(cfg, state, spec, depth, options, allowance);
}

}  // namespace

std::vector<double> exact_level_means(const ModelConfig& cfg, const SystemState& state, const RewardSpec& spec,
                                      int depth, const TreeOptions& options)
{
    return run_tree(cfg, state, spec, depth, options, {}).means;
}

double re_k(const ModelConfig& cfg, const SystemState& state, const RewardSpec& spec, int k,
            const TreeOptions& options)
{
    if (k < 1) {
        throw ArgumentError("re_k: k must be at least 1");
    }
    const auto means = exact_level_means(cfg, state, spec, k, options);
    if (static_cast<int>(means.size()) <= k) {
        throw CapacityError("re_k: level " + std::to_string(means.size()) + " exceeds the node budget of " +
                            std::to_string(options.node_budget) + " states; use Monte Carlo fallback");
    }
    return means.back();
}

double theta_k(double omega, double beta, int k)
{
    if (!(beta > 0.0)) {
        throw ArgumentError("theta_k: beta must be positive");
    }
    if (k < 0) {
        throw ArgumentError("theta_k: k must be nonnegative");
    }
    return std::pow(omega / (omega + beta), k) / (omega + beta);
}

double theta_k(const ModelConfig& cfg, double beta, int k)
{
    return theta_k(cfg.omega(), beta, k);
}

namespace {

RewardEstimate combine(double exact_part, int exact_depth, int series_length, double tail_bound,
                       const std::vector<double>& weights, const ModelConfig& cfg, const SystemState& state,
                       const RewardSpec& spec, long samples, std::uint64_t seed, bool paper_literal)
{
    RewardEstimate est;
    est.value = exact_part;
    est.exact_depth = exact_depth;
    est.series_length = series_length;
    est.truncation_error_bound = tail_bound;
    if (exact_depth < series_length) {
        if (samples <= 0) {
            throw CapacityError("exact event tree stopped at level " + std::to_string(exact_depth) + " of " +
                                std::to_string(series_length) +
                                " (node budget); enable Monte Carlo fallback samples");
        }
        const auto mc = sample_level_tail(cfg, state, spec, weights, exact_depth + 1, samples, seed, paper_literal);
        est.value += mc.mean;
        est.mc_standard_error = mc.standard_error;
        est.truncation_error_bound += mc.standard_error;
        est.samples_used = samples;
        est.bound_kind = BoundKind::Heuristic;
        est.method = exact_depth == 0 ? EstimateMethod::MonteCarlo : EstimateMethod::HybridTreeMC;
    }
    return est;
}

}  // namespace

namespace {

// Per-level pruning allowances. Mass dropped at level j can affect levels j..depth,
// so level j may drop 0.5 * epsilon_tail / (depth * sum_{k>=j} w_k sup|r_k|); the
// worst-case total over all levels is then half of epsilon_tail.
std::vector<double> level_allowances(const std::vector<double>& weights, const RewardSpec& spec,
                                     const ModelConfig& cfg, const SystemState& state, int depth,
                                     double epsilon_tail, const TreeOptions& options)
{
    std::vector<double> allowance(static_cast<std::size_t>(depth) + 1, 0.0);
    if (!options.prune || depth <= 0) {
        return allowance;
    }
    double remaining = 0.0;
    for (int j = depth; j >= 1; --j) {
        remaining += weights[static_cast<std::size_t>(j)] * reward_bound(spec, cfg, state, j);
        if (remaining > 0.0) {
            allowance[static_cast<std::size_t>(j)] = 0.5 * epsilon_tail / (depth * remaining);
        }
    }
    return allowance;
}

// A level missing `dropped` probability mass is off by at most dropped * sup|r| over that level.
void add_pruning_error(RewardEstimate& est, const TreeLevels& tree, const std::vector<double>& weights,
                       const RewardSpec& spec, const ModelConfig& cfg, const SystemState& state)
{
    double err = 0.0;
    for (std::size_t k = 0; k < tree.dropped.size(); ++k) {
        err += weights[k] * tree.dropped[k] * reward_bound(spec, cfg, state, static_cast<long>(k));
    }
    est.pruned_mass = tree.dropped.back();
    est.truncation_error_bound += err;
}

}  // namespace

RewardEstimate expected_reward_finite(const ModelConfig& cfg, const SystemState& state, const RewardSpec& spec,
                                      const HorizonParams& params)
{
    check_state(cfg, state);
    if (params.t < 0.0) {
        throw ArgumentError("horizon t must be nonnegative");
    }
    if (params.t == 0.0) {
        return {};
    }
    if (params.n_max < 0 || params.k_max < 0) {
        throw ArgumentError("n_max and k_max must be nonnegative");
    }
    const double t = params.t;
    const double mean = cfg.omega() * t;
    const int n_max = params.n_max;
    const auto pmf = poisson_pmf(mean, n_max);

    // Regrouping sum_n p_n t/(n+1) sum_{k<=n} R_k gives weight W_k = sum_{n>=k} p_n t/(n+1) on R_k.
    std::vector<double> weights(static_cast<std::size_t>(n_max) + 1);
    double acc = 0.0;
    for (int n = n_max; n >= 0; --n) {
        acc += pmf[static_cast<std::size_t>(n)] * t / (n + 1.0);
        weights[static_cast<std::size_t>(n)] = acc;
    }

    const int depth = std::min(params.k_max, n_max);
    const auto tree = run_tree(cfg, state, spec, depth, params.tree,
                               level_allowances(weights, spec, cfg, state, depth, params.epsilon_tail, params.tree));
    const int exact_depth = static_cast<int>(tree.means.size()) - 1;
    double exact_part = 0.0;
    for (int k = 0; k <= exact_depth; ++k) {
        exact_part += weights[static_cast<std::size_t>(k)] * tree.means[static_cast<std::size_t>(k)];
    }

    // Dropped terms n > n_max: t * p_n * (average level bound over k = 0..n).
    double tail = 0.0;
    const double s0 = reward_bound(spec, cfg, state, 0);
    const bool bounded = is_bounded(spec);
    const long limit = std::max<long>(poisson_support_limit(mean), n_max + 1);
    for (long n = n_max + 1; n <= limit; ++n) {
        const double p = std::exp(log_poisson(mean, n));
        tail += p * t * (bounded ? s0 : s0 + 0.5 * static_cast<double>(n));
    }

    auto est = combine(exact_part, exact_depth, n_max, tail, weights, cfg, state, spec, params.mc_fallback_samples,
                       params.seed, params.tree.paper_literal);
    add_pruning_error(est, tree, weights, spec, cfg, state);
    return est;
}

RewardEstimate expected_reward_discounted(const ModelConfig& cfg, const SystemState& state, const RewardSpec& spec,
                                          const DiscountParams& params)
{
    check_state(cfg, state);
    if (!(params.beta > 0.0)) {
        throw ArgumentError("discount rate beta must be positive");
    }
    if (params.k_max < 0) {
        throw ArgumentError("k_max must be nonnegative");
    }
    const double omega = cfg.omega();
    std::vector<double> weights(static_cast<std::size_t>(params.k_max) + 1);
    for (int k = 0; k <= params.k_max; ++k) {
        weights[static_cast<std::size_t>(k)] = theta_k(omega, params.beta, k);
    }

    const auto tree =
        run_tree(cfg, state, spec, params.k_max, params.tree,
                 level_allowances(weights, spec, cfg, state, params.k_max, params.epsilon_tail, params.tree));
    const int exact_depth = static_cast<int>(tree.means.size()) - 1;
    double exact_part = 0.0;
    for (int k = 0; k <= exact_depth; ++k) {
        exact_part += weights[static_cast<std::size_t>(k)] * tree.means[static_cast<std::size_t>(k)];
    }
    const double tail = discounted_tail(spec, cfg, state, params.beta, params.k_max);
    auto est = combine(exact_part, exact_depth, params.k_max, tail, weights, cfg, state, spec,
                       params.mc_fallback_samples, params.seed, params.tree.paper_literal);
    add_pruning_error(est, tree, weights, spec, cfg, state);
    return est;
}

}  // namespace hetsim
