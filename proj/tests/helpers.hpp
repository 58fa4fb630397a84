#pragma once

#include "hetsim/model.hpp"

#include <initializer_list>
#include <vector>

namespace test {

inline hetsim::ModelConfig tandem(double lambda, std::initializer_list<double> mu, std::initializer_list<double> g,
                                  int d)
{
    hetsim::ModelConfig cfg;
    cfg.servers = static_cast<int>(mu.size());
    cfg.lambda = lambda;
    cfg.mu = Eigen::Map<const Eigen::VectorXd>(std::data(mu), static_cast<Eigen::Index>(mu.size()));
    cfg.g = Eigen::Map<const Eigen::VectorXd>(std::data(g), static_cast<Eigen::Index>(g.size()));
    cfg.choices = d;
    return cfg;
}

inline hetsim::SystemState state(std::initializer_list<int> x)
{
    return Eigen::Map<const Eigen::VectorXi>(std::data(x), static_cast<Eigen::Index>(x.size()));
}

}  // namespace test
