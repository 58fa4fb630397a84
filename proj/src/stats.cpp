#include "hetsim/stats.hpp"

#include "hetsim/errors.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

namespace hetsim {

double student_t_975(int df)
{
    static constexpr std::array<double, 30> table{
        12.706205, 4.302653, 3.182446, 2.776445, 2.570582, 2.446912, 2.364624, 2.306004, 2.262157, 2.228139,
        2.200985, 2.178813, 2.160369, 2.144787, 2.131450, 2.119905, 2.109816, 2.100922, 2.093024, 2.085963,
        2.079614, 2.073873, 2.068658, 2.063899, 2.059539, 2.055529, 2.051831, 2.048407, 2.045230, 2.042272};
    if (df < 1) {
        throw ArgumentError("student_t_975: df must be positive");
    }
    if (df <= 30) {
        return table[static_cast<std::size_t>(df - 1)];
    }
    // Cornish-Fisher expansion around the normal quantile.
    const double z = 1.959963984540054;
    const double n = df;
    const double z3 = z * z * z;
    const double z5 = z3 * z * z;
    const double z7 = z5 * z * z;
    return z + (z3 + z) / (4 * n) + (5 * z5 + 16 * z3 + 3 * z) / (96 * n * n) +
           (3 * z7 + 19 * z5 + 17 * z3 - 15 * z) / (384 * n * n * n);
}

namespace {

Eigen::VectorXd average_ranks(const Eigen::VectorXd& v)
{
    const auto n = static_cast<std::size_t>(v.size());
    std::vector<Eigen::Index> order(n);
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return v[a] < v[b]; });
    Eigen::VectorXd ranks(v.size());
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && v[order[j + 1]] == v[order[i]]) {
            ++j;
        }
        const double r = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) {
            ranks[order[k]] = r;
        }
        i = j + 1;
    }
    return ranks;
}

}  // namespace

double spearman_correlation(const Eigen::VectorXd& a, const Eigen::VectorXd& b)
{
    if (a.size() != b.size() || a.size() < 2) {
        throw ArgumentError("spearman_correlation: need two vectors of equal length >= 2");
    }
    const Eigen::VectorXd ra = average_ranks(a);
    const Eigen::VectorXd rb = average_ranks(b);
    const Eigen::VectorXd ca = ra.array() - ra.mean();
    const Eigen::VectorXd cb = rb.array() - rb.mean();
    return ca.dot(cb) / std::sqrt(ca.squaredNorm() * cb.squaredNorm());
}

MeanCI mean_ci95(std::span<const double> samples)
{
    if (samples.empty()) {
        throw ArgumentError("mean_ci95: no samples");
    }
    const double n = static_cast<double>(samples.size());
    double sum = 0.0;
    for (double s : samples) {
        sum += s;
    }
    MeanCI out;
    out.mean = sum / n;
    if (samples.size() == 1) {
        out.halfwidth = std::numeric_limits<double>::infinity();
        return out;
    }
    double ss = 0.0;
    for (double s : samples) {
        ss += (s - out.mean) * (s - out.mean);
    }
    out.halfwidth = student_t_975(static_cast<int>(samples.size()) - 1) * std::sqrt(ss / (n - 1.0) / n);
    return out;
}

}  // namespace hetsim
