#include "arbe/learners.hpp"

#include <algorithm>
#include <cmath>

namespace arbe {

namespace {

double eta_formula(std::size_t t, std::size_t d, double log_a, double rho, double delta, double c_eta) {
    const double td = static_cast<double>(t);
    const double dd = static_cast<double>(d);
    const double gamma = std::min(std::sqrt(dd * log_a * std::log(td / delta) / (rho * td)), 0.5);
    return c_eta * rho * gamma / (dd + std::sqrt(dd / td) * std::sqrt(rho * log_a * std::log(td / delta)));
}

}  // namespace

GeoSchedule geo_schedule(std::size_t t, std::size_t d, std::size_t a_count, double rho, double delta,
                         double c_eta) {
    if (t < 1 || d < 1 || a_count < 1) throw DomainError("schedule needs t, d, |A| >= 1");
    if (!(rho > 0.0 && rho <= 1.0) || !(delta > 0.0 && delta < 1.0)) throw DomainError("bad rho or delta");
    const double td = static_cast<double>(t);
    const double log_a = std::log(static_cast<double>(std::max<std::size_t>(a_count, 2)));
    GeoSchedule s;
    s.gamma = std::min(std::sqrt(static_cast<double>(d) * log_a * std::log(td / delta) / (rho * td)), 0.5);
    // capped at its t = 1 value
    s.eta = std::min(eta_formula(t, d, log_a, rho, delta, c_eta), eta_formula(1, d, log_a, rho, delta, c_eta));
    return s;
}

double geo_hedge_complexity(std::size_t d, std::size_t a_count) {
    return std::max(1.0, std::sqrt(static_cast<double>(d) * std::log(static_cast<double>(a_count))));
}

GeometricHedge::GeometricHedge(ActionSet actions, std::vector<ActionRef> routing, std::vector<std::size_t> policy_of,
                               GeoHedgeParams params)
    : actions_(std::move(actions)), routing_(std::move(routing)), policy_of_(std::move(policy_of)), params_(params) {
    const std::size_t n = actions_.size();
    if (routing_.empty())
        for (std::size_t k = 0; k < n; ++k) routing_.push_back(ActionRef{false, k});
    if (policy_of_.empty())
        for (std::size_t k = 0; k < n; ++k) policy_of_.push_back(k);
    if (routing_.size() != n || policy_of_.size() != n) throw DomainError("routing must cover every action");
    if (!(params_.rho > 0.0 && params_.rho <= 1.0)) throw DomainError("rho must lie in (0,1]");
    if (actions_.matrix().rows() > 0) {
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(actions_.matrix());
        qr.setThreshold(1e-10);
        if (static_cast<std::size_t>(qr.rank()) < actions_.dim())
            throw DomainError("GeometricHedge actions must span their space");
    }
    complexity_ = params_.complexity > 0.0 ? params_.complexity : geo_hedge_complexity(actions_.dim(), n);
    design_ = optimal_design(actions_.matrix(), params_.eps_design);
    restart(params_.delta);
}

void GeometricHedge::restart(double delta) {
    if (!(delta > 0.0 && delta < 1.0)) throw DomainError("delta must lie in (0,1)");
    params_.delta = delta;
    t_ = 0;
    S_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(actions_.size()));
    eta_cap_ = 0.0;
    eta_now_ = 0.0;
    clips_ = 0;
    fresh_ = false;
    last_.reset();
}

void GeometricHedge::ensure_proposal() {
    if (fresh_) return;
    const std::size_t n = actions_.size();
    const std::size_t d = actions_.dim();
    sched_ = geo_schedule(t_ + 1, d, n, params_.rho, params_.delta, params_.c_eta);
    eta_now_ = eta_cap_ > 0.0 ? std::min(sched_.eta, eta_cap_) : sched_.eta;

    Eigen::VectorXd z = eta_now_ * S_;
    z.array() -= z.maxCoeff();
    Eigen::VectorXd q = z.array().exp();
    q /= q.sum();
    p_ = (1.0 - sched_.gamma) * q + sched_.gamma * design_.weights;

    const Eigen::MatrixXd& X = actions_.matrix();
    sigma_ = X.transpose() * p_.asDiagonal() * X;
    llt_.compute(sigma_);
    if (llt_.info() != Eigen::Success) throw std::logic_error("GeometricHedge covariance lost definiteness");
    const Eigen::MatrixXd Z = llt_.matrixL().solve(X.transpose());
    lev_ = Z.colwise().squaredNorm().transpose();

    p_std_.assign(p_.data(), p_.data() + p_.size());
    fresh_ = true;
}

std::span<const double> GeometricHedge::propose(const Context&) {
    ensure_proposal();
    return p_std_;
}

Draw GeometricHedge::draw(const Context& x, Rng& rng) {
    propose(x);
    Draw d;
    d.local = rng.categorical(p_std_);
    d.policy = policy_of_[d.local];
    d.ref = routing_[d.local];
    last_ = d.local;
    return d;
}

Eigen::VectorXd GeometricHedge::estimate(std::size_t played, double reward_pm, bool b) const {
    const auto d = static_cast<Eigen::Index>(actions_.dim());
    if (!b) return Eigen::VectorXd::Zero(d);
    return reward_pm * llt_.solve(actions_.point(played)) / params_.rho;
}

void GeometricHedge::update(std::size_t played, double reward_pm, bool b) {
    ensure_proposal();
    const double td = static_cast<double>(t_ + 1);
    const double n = static_cast<double>(actions_.size());
    const double d = static_cast<double>(actions_.dim());
    const double delta_p = params_.delta / n;
    const double bonus = 2.0 * std::sqrt(std::log(12.0 * td * td / delta_p) / (params_.rho * d * td));

    r_tilde_ = bonus * lev_;
    if (b) r_tilde_ += actions_.matrix() * estimate(played, reward_pm, b);
    S_ += r_tilde_;

    const double peak = r_tilde_.cwiseAbs().maxCoeff();
    if (eta_now_ * peak > 1.0) {
        eta_cap_ = 1.0 / peak;
        ++clips_;
    } else {
        eta_cap_ = eta_now_;
    }
    ++t_;
    fresh_ = false;
    last_.reset();
}

void GeometricHedge::observe(double iw_reward, bool selected) {
    if (!last_) throw std::logic_error("observe without a draw this round");
    const double r01 = selected ? iw_reward * params_.rho : 0.0;
    update(*last_, 2.0 * r01 - 1.0, selected);
}

std::unique_ptr<GeometricHedge> make_extended_geo_hedge(const ActionSet& base_actions, std::size_t k,
                                                        GeoHedgeParams params, std::vector<ActionRef> base_routing,
                                                        std::vector<ActionRef> extra_routing) {
    const auto n = static_cast<Eigen::Index>(base_actions.size());
    const auto d = static_cast<Eigen::Index>(base_actions.dim());
    const auto kk = static_cast<Eigen::Index>(k);
    Eigen::MatrixXd X = Eigen::MatrixXd::Zero(n + kk, d + kk);
    X.topLeftCorner(n, d) = base_actions.matrix();
    for (Eigen::Index i = 0; i < kk; ++i) X(n + i, d + i) = 1.0;

    if (base_routing.empty())
        for (std::size_t a = 0; a < base_actions.size(); ++a) base_routing.push_back(ActionRef{false, a});
    if (extra_routing.empty())
        for (std::size_t i = 0; i < k; ++i) extra_routing.push_back(ActionRef{false, base_actions.size() + i});
    if (base_routing.size() != base_actions.size() || extra_routing.size() != k)
        throw DomainError("routing size mismatch");

    std::vector<LinkTag> tags;
    std::vector<ActionRef> routing = base_routing;
    for (std::size_t a = 0; a < base_actions.size(); ++a) tags.push_back(base_actions.tag(a));
    for (std::size_t i = 0; i < k; ++i) {
        const ActionRef& ref = extra_routing[i];
        tags.push_back(ref.linked ? LinkTag{LinkTag::Kind::learner, ref.index}
                                  : LinkTag{LinkTag::Kind::extension, i});
        routing.push_back(ref);
    }
    std::vector<std::size_t> policy_of(routing.size());
    for (std::size_t i = 0; i < policy_of.size(); ++i) policy_of[i] = i;
    return std::make_unique<GeometricHedge>(ActionSet(std::move(X), std::move(tags)), std::move(routing),
                                            std::move(policy_of), params);
}

}  // namespace arbe
