#pragma once

#include <Eigen/Dense>

#include <span>

namespace hetsim {

// Two-sided 95% Student-t critical value t_{0.975, df}; df >= 1.
double student_t_975(int df);

// Spearman rank correlation with average ranks for ties.
double spearman_correlation(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

struct MeanCI {
    double mean = 0.0;
    double halfwidth = 0.0;  // 95%, infinite for a single sample
};

MeanCI mean_ci95(std::span<const double> samples);

}  // namespace hetsim
