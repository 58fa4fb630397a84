#include "hetsim/oracle.hpp"

#include "hetsim/errors.hpp"
#include "hetsim/parallel.hpp"
#include "hetsim/reward_kernel.hpp"
#include "hetsim/selection.hpp"
#include "hetsim/transitions.hpp"

#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <deque>
#include <string>

namespace hetsim {

TruncatedSpace::TruncatedSpace(int servers, int buffer, std::size_t state_cap)
    : servers_(servers), buffer_(buffer), size_(1)
{
    if (servers < 1 || buffer < 1) {
        throw ArgumentError("TruncatedSpace: servers and buffer must be positive");
    }
    strides_.reserve(static_cast<std::size_t>(servers));
    const auto radix = static_cast<std::size_t>(buffer) + 1;
    for (int j = 0; j < servers; ++j) {
        strides_.push_back(size_);
        if (size_ > state_cap / radix) {
            throw CapacityError("truncated state space (" + std::to_string(radix) + ")^" + std::to_string(servers) +
                                " exceeds the cap of " + std::to_string(state_cap) + " states");
        }
        size_ *= radix;
    }
    if (size_ > state_cap) {
        throw CapacityError("truncated state space exceeds the cap of " + std::to_string(state_cap) + " states");
    }
}

bool TruncatedSpace::contains(const SystemState& x) const
{
    return x.size() == servers_ && (x.array() >= 0).all() && (x.array() <= buffer_).all();
}

std::size_t TruncatedSpace::index(const SystemState& x) const
{
    if (!contains(x)) {
        throw ArgumentError("state lies outside the truncated space");
    }
    std::size_t idx = 0;
    for (int j = 0; j < servers_; ++j) {
        idx += static_cast<std::size_t>(x[j]) * strides_[static_cast<std::size_t>(j)];
    }
    return idx;
}

SystemState TruncatedSpace::state(std::size_t index) const
{
    SystemState x(servers_);
    const auto radix = static_cast<std::size_t>(buffer_) + 1;
    for (int j = 0; j < servers_; ++j) {
        x[j] = static_cast<int>(index % radix);
        index /= radix;
    }
    return x;
}

double GeneratorMatrix::max_exit_rate() const
{
    double m = 0.0;
    for (Eigen::Index i = 0; i < rates.rows(); ++i) {
        m = std::max(m, -rates.coeff(i, i));
    }
    return m;
}

double GeneratorMatrix::blocking_probability(const Eigen::VectorXd& p) const
{
    return p.dot(blocked_rate) / lambda;
}

GeneratorMatrix build_generator(const ModelConfig& cfg, int buffer, TieMode ties, std::size_t state_cap)
{
    validate(cfg);
    TruncatedSpace space(cfg.servers, buffer, state_cap);
    const std::size_t n = space.size();
    const int m = cfg.servers;

    // Rows are built independently and concatenated in state order.
    std::vector<std::vector<Eigen::Triplet<double>>> rows(n);
    Eigen::VectorXd blocked = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
    parallel_for(n, [&](std::size_t i) {
        const SystemState x = space.state(i);
        const auto profile = selection_values(cfg, x);
        const Eigen::VectorXd join = ties == TieMode::Averaged ? averaged_routing_probabilities(cfg, profile)
                                                                : routing_probabilities(cfg, profile);
        auto& row = rows[i];
        row.reserve(static_cast<std::size_t>(2 * m + 1));
        double exit = 0.0;
        const auto r = static_cast<int>(i);
        for (int s = 0; s < m; ++s) {
            const double rate = cfg.lambda * join[s];
            if (rate <= 0.0) {
                continue;
            }
            if (x[s] < buffer) {
                row.emplace_back(r, static_cast<int>(i + space.stride(s)), rate);
                exit += rate;
            } else {
                blocked[static_cast<Eigen::Index>(i)] += rate;
            }
        }
        for (int j = 0; j < m; ++j) {
            if (x[j] > 0) {
                row.emplace_back(r, static_cast<int>(i - space.stride(j)), cfg.mu[j]);
                exit += cfg.mu[j];
            }
        }
        row.emplace_back(r, r, -exit);
    });

    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(n * static_cast<std::size_t>(2 * m + 1));
    for (const auto& row : rows) {
        triplets.insert(triplets.end(), row.begin(), row.end());
    }
    const auto dim = static_cast<Eigen::Index>(n);
    Eigen::SparseMatrix<double, Eigen::RowMajor> q(dim, dim);
    q.setFromTriplets(triplets.begin(), triplets.end());
    return GeneratorMatrix{std::move(space), std::move(q), std::move(blocked), cfg.lambda};
}

Eigen::VectorXd reward_vector(const GeneratorMatrix& gen, const ModelConfig& cfg, const RewardSpec& spec)
{
    Eigen::VectorXd r(static_cast<Eigen::Index>(gen.space.size()));
    for (std::size_t i = 0; i < gen.space.size(); ++i) {
        r[static_cast<Eigen::Index>(i)] = evaluate_reward(spec, cfg, gen.space.state(i));
    }
    return r;
}

double transient_expected_reward(const GeneratorMatrix& gen, const SystemState& x0, const Eigen::VectorXd& reward,
                                 double t, const TransientOptions& options)
{
    if (t < 0.0) {
        throw ArgumentError("transient_expected_reward: t must be nonnegative");
    }
    const Eigen::Index dim = gen.rates.rows();
    Eigen::VectorXd p = Eigen::VectorXd::Zero(dim);
    p[static_cast<Eigen::Index>(gen.space.index(x0))] = 1.0;
    if (t == 0.0) {
        return 0.0;
    }
    const double unif = gen.max_exit_rate();
    if (unif == 0.0) {
        return p.dot(reward) * t;
    }

    // Row-vector products p P with P = I + Q/unif, done as P^T p.
    const Eigen::SparseMatrix<double> qt = gen.rates.transpose();
    const long chunks = std::max(1L, static_cast<long>(std::ceil(unif * t / options.chunk_events)));
    const double h = t / static_cast<double>(chunks);
    const int terms = poisson_truncation_point(unif * h, options.tolerance);
    if (static_cast<double>(chunks) * (terms + 1.0) > static_cast<double>(options.max_terms)) {
        throw CapacityError("transient_expected_reward: uniformization needs " +
                            std::to_string(static_cast<double>(chunks) * (terms + 1.0)) +
                            " matrix-vector products, above the budget of " + std::to_string(options.max_terms));
    }
    const auto pmf = poisson_pmf(unif * h, terms);
    // P(N(unif h) >= k + 1) for k = 0..terms, from suffix sums.
    std::vector<double> exceed(static_cast<std::size_t>(terms) + 1);
    double acc = 0.0;
    for (int k = terms; k >= 0; --k) {
        exceed[static_cast<std::size_t>(k)] = acc;
        acc += pmf[static_cast<std::size_t>(k)];
    }
    // Mass beyond `terms` is below tolerance; 1 - acc estimates it.
    for (auto& e : exceed) {
        e += std::max(0.0, 1.0 - acc);
    }

    double integral = 0.0;
    Eigen::VectorXd v(dim);
    Eigen::VectorXd next(dim);
    for (long c = 0; c < chunks; ++c) {
        v = p;
        p.setZero();
        for (int k = 0; k <= terms; ++k) {
            integral += exceed[static_cast<std::size_t>(k)] / unif * v.dot(reward);
            p += pmf[static_cast<std::size_t>(k)] * v;
            if (k < terms) {
                next.noalias() = qt * v;
                v += next / unif;
            }
        }
    }
    return integral;
}

Eigen::VectorXd discounted_value_vector(const GeneratorMatrix& gen, const Eigen::VectorXd& reward, double beta)
{
    if (!(beta > 0.0)) {
        throw ArgumentError("discounted_expected_reward: beta must be positive");
    }
    const Eigen::Index dim = gen.rates.rows();
    Eigen::SparseMatrix<double> a = -gen.rates;
    for (Eigen::Index i = 0; i < dim; ++i) {
        a.coeffRef(i, i) += beta;
    }
    a.makeCompressed();
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(a);
    if (lu.info() != Eigen::Success) {
        throw NumericalError("discounted_expected_reward: factorization failed: " + lu.lastErrorMessage());
    }
    Eigen::VectorXd v = lu.solve(reward);
    const double scale = std::max(reward.cwiseAbs().maxCoeff(), 1e-300);
    double residual = (a * v - reward).cwiseAbs().maxCoeff() / scale;
    if (residual > 1e-10) {
        v += lu.solve(reward - a * v);  // one step of iterative refinement
        residual = (a * v - reward).cwiseAbs().maxCoeff() / scale;
    }
    if (!(residual <= 1e-10)) {
        throw NumericalError("discounted_expected_reward: relative residual " + std::to_string(residual) +
                             " above 1e-10");
    }
    return v;
}

double discounted_expected_reward(const GeneratorMatrix& gen, const SystemState& x0, const Eigen::VectorXd& reward,
                                  double beta)
{
    const auto idx = static_cast<Eigen::Index>(gen.space.index(x0));
    return discounted_value_vector(gen, reward, beta)[idx];
}

namespace {

// States reachable from `origin` along positive off-diagonal rates.
std::vector<char> reachable(const Eigen::SparseMatrix<double, Eigen::RowMajor>& m, Eigen::Index origin)
{
    std::vector<char> seen(static_cast<std::size_t>(m.rows()), 0);
    std::deque<Eigen::Index> todo{origin};
    seen[static_cast<std::size_t>(origin)] = 1;
    while (!todo.empty()) {
        const Eigen::Index i = todo.front();
        todo.pop_front();
        for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(m, i); it; ++it) {
            if (it.col() != i && it.value() > 0.0 && !seen[static_cast<std::size_t>(it.col())]) {
                seen[static_cast<std::size_t>(it.col())] = 1;
                todo.push_back(it.col());
            }
        }
    }
    return seen;
}

}  // namespace

StationaryResult stationary_distribution(const GeneratorMatrix& gen)
{
    const Eigen::Index n = gen.rates.rows();
    // Routing can leave part of the box unreachable (rank probabilities vanish
    // for the worst d-1 ranks), so the chain lives on the class reachable from
    // the empty state. It is the unique closed class when every state leads back
    // to the empty state; anything else is reported as structural.
    const auto forward = reachable(gen.rates, 0);
    const Eigen::SparseMatrix<double, Eigen::RowMajor> transposed = gen.rates.transpose();
    const auto backward = reachable(transposed, 0);
    std::vector<Eigen::Index> local(static_cast<std::size_t>(n), -1);
    std::vector<Eigen::Index> members;
    for (Eigen::Index i = 0; i < n; ++i) {
        if (!backward[static_cast<std::size_t>(i)]) {
            throw StructuralError("stationary_distribution: state " + std::to_string(i) +
                                  " cannot return to the empty state; the generator is reducible");
        }
        if (forward[static_cast<std::size_t>(i)]) {
            local[static_cast<std::size_t>(i)] = static_cast<Eigen::Index>(members.size());
            members.push_back(i);
        }
    }
    const auto m = static_cast<Eigen::Index>(members.size());

    // Q^T pi = 0 on the closed class, last balance equation replaced by sum(pi) = 1.
    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(static_cast<std::size_t>(gen.rates.nonZeros() + m));
    for (Eigen::Index li = 0; li < m; ++li) {
        for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(gen.rates, members[static_cast<std::size_t>(li)]);
             it; ++it) {
            const Eigen::Index lj = local[static_cast<std::size_t>(it.col())];
            if (lj >= 0 && lj != m - 1) {
                triplets.emplace_back(lj, li, it.value());
            }
        }
        triplets.emplace_back(m - 1, li, 1.0);
    }
    Eigen::SparseMatrix<double> a(m, m);
    a.setFromTriplets(triplets.begin(), triplets.end());
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m);
    rhs[m - 1] = 1.0;

    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(a);
    if (lu.info() != Eigen::Success) {
        throw NumericalError("stationary_distribution: factorization failed: " + lu.lastErrorMessage());
    }
    Eigen::VectorXd local_pi = lu.solve(rhs);
    local_pi += lu.solve(rhs - a * local_pi);
    Eigen::VectorXd pi = Eigen::VectorXd::Zero(n);
    for (Eigen::Index li = 0; li < m; ++li) {
        pi[members[static_cast<std::size_t>(li)]] = local_pi[li];
    }

    if (pi.minCoeff() < -1e-12) {
        throw NumericalError("stationary_distribution: negative probability " + std::to_string(pi.minCoeff()));
    }
    pi = pi.cwiseMax(0.0);
    pi /= pi.sum();

    StationaryResult out;
    const Eigen::VectorXd balance = gen.rates.transpose() * pi;
    out.residual = balance.cwiseAbs().maxCoeff() / std::max(gen.max_exit_rate(), 1e-300);
    if (!(out.residual <= 1e-10)) {
        throw NumericalError("stationary_distribution: residual " + std::to_string(out.residual) + " above 1e-10");
    }
    out.mean_queue_length = Eigen::VectorXd::Zero(gen.space.servers());
    for (Eigen::Index i = 0; i < n; ++i) {
        out.mean_queue_length += pi[i] * gen.space.state(static_cast<std::size_t>(i)).cast<double>();
    }
    out.blocking_probability = gen.blocking_probability(pi);
    out.pi = std::move(pi);
    return out;
}

}  // namespace hetsim
