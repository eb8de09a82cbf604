#include <doctest.h>

#include <cmath>
#include <functional>

#include "arbe/design.hpp"
#include "arbe/envs.hpp"
#include "arbe/rng.hpp"

using namespace arbe;

namespace {

// max leverage of the design w, or +inf when singular
double max_leverage(const Eigen::MatrixXd& X, const Eigen::VectorXd& w) {
    const Eigen::MatrixXd M = X.transpose() * w.asDiagonal() * X;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(M);
    if (!lu.isInvertible()) return INFINITY;
    const Eigen::MatrixXd Minv = lu.inverse();
    double top = 0.0;
    for (Eigen::Index i = 0; i < X.rows(); ++i) top = std::max(top, X.row(i).dot(Minv * X.row(i).transpose()));
    return top;
}

// best max leverage over a simplex grid of resolution 1/steps
double grid_oracle(const Eigen::MatrixXd& X, int steps) {
    const auto n = X.rows();
    double best = INFINITY;
    Eigen::VectorXd w(n);
    std::function<void(Eigen::Index, int)> rec = [&](Eigen::Index i, int left) {
        if (i == n - 1) {
            w(i) = left / double(steps);
            best = std::min(best, max_leverage(X, w));
            return;
        }
        for (int k = 0; k <= left; ++k) {
            w(i) = k / double(steps);
            rec(i + 1, left - k);
        }
    };
    rec(0, steps);
    return best;
}

double power_min_eigenvalue(const Eigen::MatrixXd& M) {
    const double shift = M.cwiseAbs().rowwise().sum().maxCoeff();
    const Eigen::MatrixXd B = shift * Eigen::MatrixXd::Identity(M.rows(), M.cols()) - M;
    Eigen::VectorXd v = Eigen::VectorXd::Ones(M.rows()).normalized();
    v(0) += 0.1;
    double mu = 0.0;
    for (int it = 0; it < 200000; ++it) {
        Eigen::VectorXd u = B * v;
        const double next = v.dot(u);
        v = u.normalized();
        if (it > 10 && std::abs(next - mu) < 1e-15 * shift) {
            mu = next;
            break;
        }
        mu = next;
    }
    return shift - mu;
}

void check_result(const Eigen::MatrixXd& X, const DesignResult& r, double eps) {
    const double d = static_cast<double>(X.cols());
    CHECK(r.weights.sum() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(r.weights.minCoeff() >= 0.0);
    CHECK((r.covariance - r.covariance.transpose()).cwiseAbs().maxCoeff() < 1e-9);
    CHECK(design_min_eigenvalue(r) > 0.0);
    CHECK(r.max_leverage >= d - 1e-9);
    CHECK(r.max_leverage <= d * (1.0 + eps) + 1e-9);
    CHECK(r.max_leverage == doctest::Approx(max_leverage(X, r.weights)).epsilon(1e-9));
    CHECK(r.support_size == static_cast<std::size_t>((r.weights.array() > 0.0).count()));
}

}  // namespace

TEST_CASE("design: standard basis is uniform with leverage d") {
    for (int d = 1; d <= 6; ++d) {
        const Eigen::MatrixXd X = Eigen::MatrixXd::Identity(d, d);
        auto r = optimal_design(X);
        for (int i = 0; i < d; ++i) CHECK(r.weights(i) == doctest::Approx(1.0 / d));
        CHECK(r.max_leverage == doctest::Approx(double(d)));
        CHECK(r.iterations == 0);
        CHECK(design_min_eigenvalue(r) == doctest::Approx(1.0 / d));
    }
}

TEST_CASE("design: signed basis in the plane") {
    Eigen::MatrixXd X(4, 2);
    X << 1, 0, -1, 0, 0, 1, 0, -1;
    auto r = optimal_design(X);
    CHECK(r.max_leverage == doctest::Approx(2.0));
    CHECK(design_min_eigenvalue(r) == doctest::Approx(0.5));
}

TEST_CASE("design: random unit vectors meet the KW condition") {
    Rng rng(4, "test");
    for (int rep = 0; rep < 10; ++rep) {
        const Eigen::MatrixXd X = sample_unit_actions(20, 4, rng);
        auto r = optimal_design(X, 0.05);
        check_result(X, r, 0.05);
        CHECK(r.max_leverage <= 4.2);
    }
}

TEST_CASE("design: within five percent of a simplex-grid oracle on small sets") {
    Rng rng(5, "test");
    for (int rep = 0; rep < 6; ++rep) {
        const int d = 2 + rep % 2;
        const int n = d + 1 + rep % 2;
        const Eigen::MatrixXd X = sample_unit_actions(n, d, rng);
        auto r = optimal_design(X, 0.05);
        const double oracle = grid_oracle(X, n == 5 ? 24 : 40);
        CHECK(oracle >= d - 1e-9);
        CHECK(r.max_leverage <= 1.05 * oracle);
    }
}

TEST_CASE("design: min eigenvalue matches power iteration") {
    Rng rng(6, "test");
    for (int rep = 0; rep < 5; ++rep) {
        const Eigen::MatrixXd X = sample_unit_actions(12, 3 + rep % 3, rng);
        auto r = optimal_design(X);
        CHECK(std::abs(design_min_eigenvalue(r) - power_min_eigenvalue(r.covariance)) < 1e-8);
    }
}

TEST_CASE("design: mixing with any distribution keeps gamma times the design eigenvalue") {
    Rng rng(7, "test");
    for (int rep = 0; rep < 20; ++rep) {
        const Eigen::MatrixXd X = sample_unit_actions(15, 4, rng);
        auto r = optimal_design(X);
        Eigen::VectorXd q(X.rows());
        for (Eigen::Index i = 0; i < q.size(); ++i) q(i) = std::pow(rng.uniform(), 6.0);
        q /= q.sum();
        const double gamma = 0.05 + 0.5 * rng.uniform();
        const Eigen::VectorXd p = (1.0 - gamma) * q + gamma * r.weights;
        const Eigen::MatrixXd S = X.transpose() * p.asDiagonal() * X;
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
        CHECK(es.eigenvalues().minCoeff() >= gamma * design_min_eigenvalue(r) - 1e-12);
    }
}

TEST_CASE("design: deterministic and rejects rank deficiency") {
    Rng rng(8, "test");
    const Eigen::MatrixXd X = sample_unit_actions(30, 5, rng);
    auto a = optimal_design(X), b = optimal_design(X);
    CHECK(a.weights == b.weights);
    Eigen::MatrixXd flat(3, 3);
    flat << 1, 0, 0, 0, 1, 0, 1, 1, 0;
    CHECK_THROWS_AS(optimal_design(flat), DomainError);
    CHECK_THROWS_AS(optimal_design(X, 0.0), DomainError);
}

TEST_CASE("design: large sets stay within tolerance after pruning") {
    Rng rng(9, "test");
    for (int d : {2, 5, 8}) {
        const Eigen::MatrixXd X = sample_unit_actions(64, d, rng);
        auto r = optimal_design(X, 0.05);
        check_result(X, r, 0.05);
    }
}
