#include "arbe/design.hpp"

#include <cmath>

namespace arbe {

namespace {

Eigen::MatrixXd moment(const Eigen::MatrixXd& X, const Eigen::VectorXd& w) {
    return X.transpose() * w.asDiagonal() * X;
}

}  // namespace

Eigen::VectorXd leverages(const Eigen::MatrixXd& points, const Eigen::VectorXd& weights) {
    const Eigen::MatrixXd M = moment(points, weights);
    Eigen::LLT<Eigen::MatrixXd> llt(M);
    if (llt.info() != Eigen::Success) throw DesignError("design covariance is singular");
    const Eigen::MatrixXd Z = llt.matrixL().solve(points.transpose());
    return Z.colwise().squaredNorm().transpose();
}

DesignResult optimal_design(const Eigen::MatrixXd& X, double eps) {
    if (!(eps > 0.0 && eps < 1.0)) throw DomainError("design tolerance must lie in (0,1)");
    const auto n = X.rows();
    const auto d = static_cast<double>(X.cols());
    if (n == 0) throw DomainError("empty action set");
    {
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
        qr.setThreshold(1e-10);
        if (qr.rank() < X.cols()) throw DomainError("actions do not span the action space");
    }

    Eigen::VectorXd w = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
    const double target = d * (1.0 + eps);
    const auto cap = static_cast<std::size_t>(std::ceil(10.0 * d * std::log(static_cast<double>(n)) / eps)) + 1;

    DesignResult res;
    Eigen::VectorXd lev = leverages(X, w);
    Eigen::Index k = 0;
    double top = lev.maxCoeff(&k);
    std::size_t it = 0;
    while (top > target) {
        if (it == cap) throw DesignError("design did not reach tolerance within the iteration cap");
        // exact line search for the log-det objective
        const double step = (top / d - 1.0) / (top - 1.0);
        w *= 1.0 - step;
        w(k) += step;
        lev = leverages(X, w);
        top = lev.maxCoeff(&k);
        ++it;
    }

    for (Eigen::Index i = 0; i < n; ++i)
        if (w(i) < 1e-10) w(i) = 0.0;
    w /= w.sum();
    lev = leverages(X, w);

    res.weights = w;
    res.covariance = moment(X, w);
    res.covariance = 0.5 * (res.covariance + res.covariance.transpose());
    res.max_leverage = lev.maxCoeff();
    res.support_size = static_cast<std::size_t>((w.array() > 0.0).count());
    res.iterations = it;
    return res;
}

DesignResult optimal_design(const ActionSet& actions, double eps) { return optimal_design(actions.matrix(), eps); }

double design_min_eigenvalue(const DesignResult& res) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(res.covariance, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

}  // namespace arbe
