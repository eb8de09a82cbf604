#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace arbe {

using ActionIndex = std::size_t;
using LearnerIndex = std::size_t;
using PolicyId = std::size_t;

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DomainError : std::domain_error {
    using std::domain_error::domain_error;
};
struct NotFoundError : std::out_of_range {
    using std::out_of_range::out_of_range;
};

inline constexpr double kProbTol = 1e-9;

struct LinkTag {
    enum class Kind { none, learner, extension };
    Kind kind = Kind::none;
    std::size_t target = 0;
};

class ActionSet {
public:
    ActionSet() = default;
    ActionSet(std::size_t dim, const std::vector<std::vector<double>>& points,
              std::vector<LinkTag> tags = {}, bool require_span = false);
    ActionSet(Eigen::MatrixXd points, std::vector<LinkTag> tags = {}, bool require_span = false);

    std::size_t dim() const { return static_cast<std::size_t>(points_.cols()); }
    std::size_t size() const { return static_cast<std::size_t>(points_.rows()); }
    const Eigen::MatrixXd& matrix() const { return points_; }
    Eigen::VectorXd point(std::size_t i) const { return points_.row(static_cast<Eigen::Index>(i)).transpose(); }
    const LinkTag& tag(std::size_t i) const { return tags_[i]; }
    bool linked(std::size_t i) const { return tags_[i].kind != LinkTag::Kind::none; }

    // rank of the untagged points
    std::size_t base_rank() const;

    // leading `d` coordinates of every point
    ActionSet project(std::size_t d) const;

private:
    void check(bool require_span) const;

    Eigen::MatrixXd points_;
    std::vector<LinkTag> tags_;
};

struct Context {
    std::size_t token = 0;
    bool operator==(const Context&) const = default;
};

class Policy {
public:
    enum class Kind { point, table, linked };

    static Policy point(PolicyId id, ActionIndex a);
    static Policy table(PolicyId id, std::vector<std::vector<double>> rows);
    static Policy linked(PolicyId id, LearnerIndex j);

    Kind kind() const { return kind_; }
    PolicyId id() const { return id_; }
    // action index (point) or learner index (linked)
    std::size_t target() const { return target_; }
    const std::vector<std::vector<double>>& rows() const { return rows_; }

    // probability of action `a` among `n_actions` base actions under context x
    double prob(ActionIndex a, const Context& x) const;
    std::vector<double> distribution(const Context& x, std::size_t n_actions) const;

private:
    Kind kind_ = Kind::point;
    PolicyId id_ = 0;
    std::size_t target_ = 0;
    std::vector<std::vector<double>> rows_;
};

class PolicyClass {
public:
    PolicyClass() = default;
    PolicyClass(std::vector<Policy> policies, double complexity);

    const std::vector<Policy>& policies() const { return policies_; }
    std::size_t size() const { return policies_.size(); }
    double complexity() const { return complexity_; }
    const Policy& operator[](std::size_t i) const { return policies_[i]; }
    std::optional<std::size_t> position(PolicyId id) const;
    bool contains(PolicyId id) const { return position(id).has_value(); }

private:
    std::vector<Policy> policies_;
    double complexity_ = 1.0;
};

// every action as a point policy, ids = action indices
PolicyClass point_policy_class(std::size_t n_actions, double complexity);

struct ExtendedPolicyClass {
    PolicyClass base;
    std::vector<Policy> extras;
    double complexity = 1.0;

    std::size_t size() const { return base.size() + extras.size(); }
    const Policy& at(std::size_t i) const { return i < base.size() ? base[i] : extras[i - base.size()]; }
};

// extras: linked indicators for learners owner+1..top; complexity base + |extras| unless overridden
ExtendedPolicyClass extend_policy_class(const PolicyClass& base, LearnerIndex owner, LearnerIndex top,
                                        std::optional<double> complexity = std::nullopt);

PolicyClass remove_policy(const PolicyClass& cls, PolicyId id);

// realized reward of every base action under one context
struct RewardFunction {
    Context context;
    std::vector<double> values;

    double evaluate(ActionIndex a, const Context& x) const;
    double operator()(ActionIndex a) const { return values[a]; }
};

double policy_expected_reward(const Policy& policy, const Context& x, const RewardFunction& r);

// a learner's local action: a base action, or a link to the proposal of learner `index`
struct ActionRef {
    bool linked = false;
    std::size_t index = 0;
};

struct Resolution {
    ActionIndex action = 0;
    std::vector<LearnerIndex> chain;
};

// proposals indexed by learner; inactive learners are nullopt
Resolution resolve_linked_action(const std::vector<std::optional<ActionRef>>& proposals, LearnerIndex start);

}  // namespace arbe
