#pragma once

#include <Eigen/Dense>

#include "arbe/core.hpp"

namespace arbe {

struct DesignResult {
    Eigen::VectorXd weights;
    Eigen::MatrixXd covariance;
    double max_leverage = 0.0;
    std::size_t support_size = 0;
    std::size_t iterations = 0;
};

struct DesignError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// rows of `points` are actions; Frank-Wolfe / Fedorov-Wynn g-optimal design
DesignResult optimal_design(const Eigen::MatrixXd& points, double eps = 0.05);
DesignResult optimal_design(const ActionSet& actions, double eps = 0.05);

// leverages a^T M^{-1} a of every row under the given weights
Eigen::VectorXd leverages(const Eigen::MatrixXd& points, const Eigen::VectorXd& weights);

double design_min_eigenvalue(const DesignResult& res);

}  // namespace arbe
