#include "arbe/core.hpp"

#include <cmath>
#include <numeric>
#include <unordered_set>

namespace arbe {

namespace {

void check_distribution(const std::vector<double>& p) {
    double total = 0.0;
    for (double v : p) {
        if (!(v >= 0.0)) throw DomainError("negative or NaN probability");
        total += v;
    }
    if (std::abs(total - 1.0) > kProbTol) throw DomainError("probabilities do not sum to 1");
}

}  // namespace

ActionSet::ActionSet(std::size_t dim, const std::vector<std::vector<double>>& points, std::vector<LinkTag> tags,
                     bool require_span)
    : tags_(std::move(tags)) {
    if (dim == 0) throw DomainError("action dimension must be positive");
    points_.resize(static_cast<Eigen::Index>(points.size()), static_cast<Eigen::Index>(dim));
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (points[i].size() != dim) throw DomainError("action " + std::to_string(i) + " has wrong dimension");
        for (std::size_t k = 0; k < dim; ++k)
            points_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = points[i][k];
    }
    if (tags_.empty()) tags_.resize(points.size());
    check(require_span);
}

ActionSet::ActionSet(Eigen::MatrixXd points, std::vector<LinkTag> tags, bool require_span)
    : points_(std::move(points)), tags_(std::move(tags)) {
    if (points_.cols() == 0) throw DomainError("action dimension must be positive");
    if (tags_.empty()) tags_.resize(static_cast<std::size_t>(points_.rows()));
    check(require_span);
}

void ActionSet::check(bool require_span) const {
    if (points_.rows() == 0) throw DomainError("empty action set");
    if (tags_.size() != size()) throw DomainError("one tag per action required");
    if (!points_.allFinite()) throw DomainError("non-finite action coordinates");
    if (require_span && base_rank() < dim()) throw DomainError("actions do not span the action space");
}

std::size_t ActionSet::base_rank() const {
    std::vector<Eigen::Index> rows;
    for (std::size_t i = 0; i < size(); ++i)
        if (!linked(i)) rows.push_back(static_cast<Eigen::Index>(i));
    if (rows.empty()) return 0;
    Eigen::MatrixXd base(static_cast<Eigen::Index>(rows.size()), points_.cols());
    for (std::size_t r = 0; r < rows.size(); ++r) base.row(static_cast<Eigen::Index>(r)) = points_.row(rows[r]);
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(base);
    qr.setThreshold(1e-10);
    return static_cast<std::size_t>(qr.rank());
}

ActionSet ActionSet::project(std::size_t d) const {
    if (d == 0 || d > dim()) throw DomainError("projection dimension out of range");
    return ActionSet(Eigen::MatrixXd(points_.leftCols(static_cast<Eigen::Index>(d))), tags_);
}

Policy Policy::point(PolicyId id, ActionIndex a) {
    Policy p;
    p.kind_ = Kind::point;
    p.id_ = id;
    p.target_ = a;
    return p;
}

Policy Policy::table(PolicyId id, std::vector<std::vector<double>> rows) {
    if (rows.empty()) throw DomainError("table policy needs at least one context row");
    for (const auto& row : rows) {
        if (row.size() != rows.front().size()) throw DomainError("ragged table policy");
        check_distribution(row);
    }
    Policy p;
    p.kind_ = Kind::table;
    p.id_ = id;
    p.rows_ = std::move(rows);
    return p;
}

Policy Policy::linked(PolicyId id, LearnerIndex j) {
    Policy p;
    p.kind_ = Kind::linked;
    p.id_ = id;
    p.target_ = j;
    return p;
}

double Policy::prob(ActionIndex a, const Context& x) const {
    switch (kind_) {
    case Kind::point: return a == target_ ? 1.0 : 0.0;
    case Kind::table: {
        if (x.token >= rows_.size()) throw DomainError("context outside policy table");
        const auto& row = rows_[x.token];
        return a < row.size() ? row[a] : 0.0;
    }
    case Kind::linked: return 0.0;
    }
    return 0.0;
}

std::vector<double> Policy::distribution(const Context& x, std::size_t n_actions) const {
    std::vector<double> p(n_actions, 0.0);
    for (std::size_t a = 0; a < n_actions; ++a) p[a] = prob(a, x);
    return p;
}

PolicyClass::PolicyClass(std::vector<Policy> policies, double complexity)
    : policies_(std::move(policies)), complexity_(complexity) {
    if (policies_.empty()) throw DomainError("empty policy class");
    if (!(complexity_ >= 1.0)) throw DomainError("class complexity must be at least 1");
    std::unordered_set<PolicyId> seen;
    for (const auto& p : policies_)
        if (!seen.insert(p.id()).second) throw DomainError("duplicate policy id " + std::to_string(p.id()));
}

std::optional<std::size_t> PolicyClass::position(PolicyId id) const {
    for (std::size_t i = 0; i < policies_.size(); ++i)
        if (policies_[i].id() == id) return i;
    return std::nullopt;
}

PolicyClass point_policy_class(std::size_t n_actions, double complexity) {
    std::vector<Policy> ps;
    ps.reserve(n_actions);
    for (std::size_t a = 0; a < n_actions; ++a) ps.push_back(Policy::point(a, a));
    return PolicyClass(std::move(ps), complexity);
}

ExtendedPolicyClass extend_policy_class(const PolicyClass& base, LearnerIndex owner, LearnerIndex top,
                                        std::optional<double> complexity) {
    if (owner > top) throw DomainError("owner index above top learner");
    ExtendedPolicyClass ext;
    ext.base = base;
    PolicyId next = 0;
    for (const auto& p : base.policies()) next = std::max(next, p.id() + 1);
    for (LearnerIndex j = owner + 1; j <= top; ++j) ext.extras.push_back(Policy::linked(next++, j));
    ext.complexity = complexity.value_or(base.complexity() + static_cast<double>(ext.extras.size()));
    if (!(ext.complexity >= 1.0)) throw DomainError("class complexity must be at least 1");
    return ext;
}

PolicyClass remove_policy(const PolicyClass& cls, PolicyId id) {
    auto pos = cls.position(id);
    if (!pos) throw NotFoundError("policy " + std::to_string(id) + " not in class");
    if (cls.size() < 2) throw DomainError("cannot remove the last policy");
    std::vector<Policy> rest;
    rest.reserve(cls.size() - 1);
    for (std::size_t i = 0; i < cls.size(); ++i)
        if (i != *pos) rest.push_back(cls[i]);
    return PolicyClass(std::move(rest), cls.complexity());
}

double RewardFunction::evaluate(ActionIndex a, const Context& x) const {
    if (!(x == context)) throw DomainError("reward function queried off its context");
    if (a >= values.size()) throw DomainError("action index out of range");
    return values[a];
}

double policy_expected_reward(const Policy& policy, const Context& x, const RewardFunction& r) {
    switch (policy.kind()) {
    case Policy::Kind::point: return r.evaluate(policy.target(), x);
    case Policy::Kind::table: {
        double s = 0.0;
        for (std::size_t a = 0; a < r.values.size(); ++a) s += policy.prob(a, x) * r.evaluate(a, x);
        return s;
    }
    case Policy::Kind::linked: throw DomainError("linked policy must be resolved before evaluation");
    }
    return 0.0;
}

Resolution resolve_linked_action(const std::vector<std::optional<ActionRef>>& proposals, LearnerIndex start) {
    Resolution res;
    LearnerIndex cur = start;
    for (;;) {
        if (cur >= proposals.size() || !proposals[cur]) throw ConfigError("link to inactive learner");
        res.chain.push_back(cur);
        const ActionRef& ref = *proposals[cur];
        if (!ref.linked) {
            res.action = ref.index;
            return res;
        }
        if (ref.index <= cur) throw ConfigError("linked action must point to a larger learner index");
        cur = ref.index;
    }
}

}  // namespace arbe
