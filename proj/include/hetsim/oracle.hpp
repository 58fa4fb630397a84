#pragma once

#include "model.hpp"
#include "reward.hpp"

#include <Eigen/Sparse>

#include <cstddef>

namespace hetsim {

// How arrival mass is assigned when several servers share the same Delta.
enum class TieMode {
    Averaged,     // exact expectation over uniformly random tie orders
    LowestIndex,  // deterministic: lower server index takes the lower rank
};

// All states with 0 <= x_j <= buffer, indexed in mixed radix (server 0 least significant).
class TruncatedSpace {
public:
    static constexpr std::size_t default_state_cap = 200'000;

    TruncatedSpace(int servers, int buffer, std::size_t state_cap = default_state_cap);

    [[nodiscard]] int servers() const noexcept { return servers_; }
    [[nodiscard]] int buffer() const noexcept { return buffer_; }
    [[nodiscard]] std::size_t size() const noexcept { return size_; }
    [[nodiscard]] std::size_t stride(int server) const noexcept { return strides_[static_cast<std::size_t>(server)]; }

    [[nodiscard]] bool contains(const SystemState& x) const;
    [[nodiscard]] std::size_t index(const SystemState& x) const;
    [[nodiscard]] SystemState state(std::size_t index) const;

private:
    int servers_;
    int buffer_;
    std::size_t size_;
    std::vector<std::size_t> strides_;
};

struct GeneratorMatrix {
    TruncatedSpace space;
    Eigen::SparseMatrix<double, Eigen::RowMajor> rates;
    // Arrival rate lost at each state because the chosen server is at the buffer cap.
    Eigen::VectorXd blocked_rate;
    double lambda = 0.0;

    [[nodiscard]] double max_exit_rate() const;
    // Long-run fraction of arrivals lost under the state distribution `p`.
    [[nodiscard]] double blocking_probability(const Eigen::VectorXd& p) const;
};

// Arrivals at rate lambda split by the state's Delta-ranking (ties per `ties`),
// services at rate mu_j at busy servers. Arrivals routed to a full server are lost.
GeneratorMatrix build_generator(const ModelConfig& cfg, int buffer, TieMode ties = TieMode::Averaged,
                                std::size_t state_cap = TruncatedSpace::default_state_cap);

// Reward evaluated at every state of the truncated space.
Eigen::VectorXd reward_vector(const GeneratorMatrix& gen, const ModelConfig& cfg, const RewardSpec& spec);

struct TransientOptions {
    double tolerance = 1e-13;           // Poisson tail dropped per uniformization chunk
    double chunk_events = 64.0;         // expected uniformized events per chunk
    std::size_t max_terms = 200'000'000;  // total matrix-vector products allowed
};

// E[ integral_0^t r(X(s)) ds | X(0) = x0 ] on the truncated chain, by
// uniformization applied over successive chunks of the horizon.
double transient_expected_reward(const GeneratorMatrix& gen, const SystemState& x0, const Eigen::VectorXd& reward,
                                 double t, const TransientOptions& options = {});

// Resolvent solve (beta I - Q) v = r; returns v[x0].
double discounted_expected_reward(const GeneratorMatrix& gen, const SystemState& x0, const Eigen::VectorXd& reward,
                                  double beta);

// Full resolvent solution vector, for callers needing every start state.
Eigen::VectorXd discounted_value_vector(const GeneratorMatrix& gen, const Eigen::VectorXd& reward, double beta);

struct StationaryResult {
    Eigen::VectorXd pi;
    Eigen::VectorXd mean_queue_length;  // per server
    double blocking_probability = 0.0;
    double residual = 0.0;  // max |(pi Q)_j| / max exit rate
};

StationaryResult stationary_distribution(const GeneratorMatrix& gen);

}  // namespace hetsim
