#include <algorithm>
#include <cmath>
#include <limits>

#include "arbe/learners.hpp"

namespace arbe {

double exp4_complexity(std::size_t a_count, std::size_t policy_count) {
    return std::max(1.0, std::sqrt(static_cast<double>(a_count) * std::log(static_cast<double>(policy_count))));
}

Exp4::Exp4(ExtendedPolicyClass cls, std::size_t n_actions, Exp4Params params)
    : cls_(std::move(cls)), n_actions_(n_actions), params_(params) {
    if (!(params_.rho > 0.0 && params_.rho <= 1.0)) throw DomainError("rho must lie in (0,1]");
    for (std::size_t a = 0; a < n_actions_; ++a) routing_.push_back(ActionRef{false, a});
    for (const auto& e : cls_.extras) routing_.push_back(ActionRef{true, e.target()});
    complexity_ = params_.complexity > 0.0 ? params_.complexity : exp4_complexity(routing_.size(), cls_.size());
    restart(params_.delta);
}

void Exp4::restart(double delta) {
    if (!(delta > 0.0 && delta < 1.0)) throw DomainError("delta must lie in (0,1)");
    params_.delta = delta;
    t_ = 0;
    G_.assign(cls_.size(), 0.0);
    fresh_ = false;
    last_.reset();
}

double Exp4::policy_prob(std::size_t j, std::size_t local, const Context& x) const {
    const std::size_t nb = cls_.base.size();
    if (j < nb) return local < n_actions_ ? cls_.base[j].prob(local, x) : 0.0;
    return local == n_actions_ + (j - nb) ? 1.0 : 0.0;
}

std::span<const double> Exp4::propose(const Context& x) {
    if (fresh_ && x == ctx_) return p_;
    const double K = static_cast<double>(routing_.size());
    const double td = static_cast<double>(t_ + 1);
    eta_ = std::sqrt(std::log(static_cast<double>(cls_.size())) / (K * td));
    gamma_ = eta_ * K / 2.0;

    q_.assign(cls_.size(), 0.0);
    double top = -std::numeric_limits<double>::infinity();
    for (double g : G_) top = std::max(top, eta_ * g);
    double z = 0.0;
    for (std::size_t j = 0; j < q_.size(); ++j) z += q_[j] = std::exp(eta_ * G_[j] - top);
    for (double& v : q_) v /= z;

    p_.assign(routing_.size(), 0.0);
    for (std::size_t j = 0; j < q_.size(); ++j)
        for (std::size_t a = 0; a < p_.size(); ++a) p_[a] += q_[j] * policy_prob(j, a, x);
    ctx_ = x;
    fresh_ = true;
    return p_;
}

Draw Exp4::draw(const Context& x, Rng& rng) {
    propose(x);
    Draw d;
    d.policy = rng.categorical(q_);
    std::vector<double> row(routing_.size());
    for (std::size_t a = 0; a < row.size(); ++a) row[a] = policy_prob(d.policy, a, x);
    d.local = rng.categorical(row);
    d.ref = routing_[d.local];
    last_ = d;
    return d;
}

void Exp4::observe(double iw_reward, bool selected) {
    if (!last_) throw std::logic_error("observe without a draw this round");
    const std::size_t a = last_->local;
    const double gain = selected ? iw_reward : 0.0;
    const double est = (gain - 1.0) / (p_[a] + gamma_);
    for (std::size_t j = 0; j < G_.size(); ++j) G_[j] += policy_prob(j, a, ctx_) * est;
    ++t_;
    fresh_ = false;
    last_.reset();
}

std::unique_ptr<BaseLearner> make_learner(const LearnerSpec& spec, const ActionSet& global_actions,
                                          const ExtendedPolicyClass& cls, double rho, double delta) {
    if (spec.kind == LearnerKind::exp4)
        return std::make_unique<Exp4>(cls, global_actions.size(), Exp4Params{rho, delta, cls.complexity});

    std::vector<std::vector<double>> rows;
    std::vector<ActionRef> base_routing;
    const std::size_t d = spec.dim == 0 ? global_actions.dim() : spec.dim;
    for (const auto& pol : cls.base.policies()) {
        if (pol.kind() != Policy::Kind::point) throw ConfigError("GeometricHedge needs point policies");
        const Eigen::VectorXd a = global_actions.point(pol.target()).head(static_cast<Eigen::Index>(d));
        rows.emplace_back(a.data(), a.data() + a.size());
        base_routing.push_back(ActionRef{false, pol.target()});
    }
    std::vector<ActionRef> extra_routing;
    for (const auto& e : cls.extras) extra_routing.push_back(ActionRef{true, e.target()});
    GeoHedgeParams gp{rho, delta, spec.c_eta, spec.eps_design, cls.complexity};
    return make_extended_geo_hedge(ActionSet(d, rows, {}, true), cls.extras.size(), gp, std::move(base_routing),
                                   std::move(extra_routing));
}

}  // namespace arbe
