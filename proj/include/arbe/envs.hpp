#pragma once

#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "arbe/core.hpp"
#include "arbe/rng.hpp"

namespace arbe {

enum class EnvKind { stochastic, adversarial, switching };

struct RoundData {
    Context x;
    RewardFunction r;

    double observe(ActionIndex a) const { return r.evaluate(a, x); }
};

class Environment {
public:
    virtual ~Environment() = default;

    virtual EnvKind kind() const = 0;
    virtual const ActionSet& actions() const = 0;
    // the richest policy class; regret is measured against it
    virtual const PolicyClass& policy_class() const = 0;
    virtual RoundData next_round(std::size_t t) = 0;

    // stochastic accessors; DomainError otherwise
    virtual double mean_reward(const Policy& pi) const;
    virtual double gap() const;
    virtual PolicyId best_policy() const;
    bool stochastic() const { return kind() == EnvKind::stochastic; }
};

struct NestedInstance {
    std::vector<std::size_t> dims;
    std::size_t i_star = 1;  // 1-based
    Eigen::VectorXd omega;
    double noise_sd = 0.05;
    std::size_t action_count = 0;
    Eigen::MatrixXd actions;  // rows, d_M columns
};

// mean reward (1 + a^T w) / 2, realized reward = mean + truncated symmetric Gaussian noise
class LinearEnvironment : public Environment {
public:
    const ActionSet& actions() const override { return actions_; }
    const PolicyClass& policy_class() const override { return policies_; }
    RoundData next_round(std::size_t t) override;

    // mean reward of every action at round t
    virtual Eigen::VectorXd means_at(std::size_t t) const = 0;
    double noise_sd() const { return noise_sd_; }

protected:
    LinearEnvironment(Eigen::MatrixXd actions, double noise_sd, std::uint64_t seed);

    ActionSet actions_;
    PolicyClass policies_;
    double noise_sd_;
    Rng rng_;
};

class StochasticLinear final : public LinearEnvironment {
public:
    StochasticLinear(NestedInstance inst, std::uint64_t seed);

    EnvKind kind() const override { return EnvKind::stochastic; }
    Eigen::VectorXd means_at(std::size_t) const override { return means_; }
    double mean_reward(const Policy& pi) const override;
    double gap() const override;
    PolicyId best_policy() const override;

    const NestedInstance& instance() const { return inst_; }
    const Eigen::VectorXd& means() const { return means_; }

private:
    NestedInstance inst_;
    Eigen::VectorXd means_;
};

struct AdversarySpec {
    enum class Kind { constant, oblivious, phase_switching, sign_flipping };
    Kind kind = Kind::oblivious;
    Eigen::VectorXd omega_a;     // base vector (constant, oblivious drift, phase a, sign flip)
    Eigen::VectorXd omega_b;     // phase b
    std::size_t t_switch = 0;    // phase_switching: omega_b from t_switch + 1 on
    std::size_t period = 1;      // sign_flipping half-period; oblivious block length
    double perturbation = 0.5;   // oblivious: radius of per-block random component
};

class AdversarialLinear final : public LinearEnvironment {
public:
    AdversarialLinear(Eigen::MatrixXd actions, AdversarySpec spec, double noise_sd, std::uint64_t seed);

    EnvKind kind() const override { return EnvKind::adversarial; }
    Eigen::VectorXd means_at(std::size_t t) const override;
    Eigen::VectorXd omega_at(std::size_t t) const;

private:
    AdversarySpec spec_;
    // oblivious per-block components, generated in block order on demand
    mutable Rng block_rng_;
    mutable std::vector<Eigen::VectorXd> blocks_;
};

struct PostSwitch {
    enum class Kind { drop_action, linear };
    Kind kind = Kind::drop_action;
    ActionIndex action = 0;   // drop_action target
    double amount = 0.0;      // drop size in mean reward
    Eigen::VectorXd omega;    // linear: post-switch reward vector
};

// stochastic up to and including t_switch, then post-switch means; same noise stream throughout
class SwitchingEnvironment final : public LinearEnvironment {
public:
    SwitchingEnvironment(NestedInstance inst, std::size_t t_switch, PostSwitch post, std::uint64_t seed);

    EnvKind kind() const override { return t_switch_ == 0 ? EnvKind::adversarial : EnvKind::switching; }
    Eigen::VectorXd means_at(std::size_t t) const override { return t <= t_switch_ ? pre_ : post_; }
    std::size_t t_switch() const { return t_switch_; }

private:
    std::size_t t_switch_;
    Eigen::VectorXd pre_;
    Eigen::VectorXd post_;
};

class ContextualFinite final : public Environment {
public:
    ContextualFinite(std::size_t policy_count, std::size_t action_count, std::size_t context_count,
                     std::uint64_t seed);

    EnvKind kind() const override { return EnvKind::stochastic; }
    const ActionSet& actions() const override { return actions_; }
    const PolicyClass& policy_class() const override { return policies_; }
    RoundData next_round(std::size_t t) override;
    double mean_reward(const Policy& pi) const override;
    double gap() const override;
    PolicyId best_policy() const override;

    const std::vector<std::vector<double>>& mean_table() const { return table_; }  // [context][action]

private:
    std::size_t contexts_;
    ActionSet actions_;
    PolicyClass policies_;
    std::vector<std::vector<double>> table_;
    Rng rng_;
};

NestedInstance make_nested_instance(std::vector<std::size_t> dims, std::size_t i_star, double target_gap,
                                    std::size_t action_count, double noise_sd, std::uint64_t seed);

std::unique_ptr<StochasticLinear> make_stochastic_linear(std::vector<std::size_t> dims, std::size_t i_star,
                                                         double target_gap, std::size_t action_count, double noise_sd,
                                                         std::uint64_t seed);

std::unique_ptr<AdversarialLinear> make_adversarial_linear(std::vector<std::size_t> dims, std::size_t action_count,
                                                           AdversarySpec script, std::uint64_t seed,
                                                           double noise_sd = 0.0);

std::unique_ptr<SwitchingEnvironment> make_switching_bowb(const NestedInstance& inst, std::size_t t_switch,
                                                          PostSwitch post, std::uint64_t seed);

std::unique_ptr<ContextualFinite> make_contextual_finite(std::size_t policy_count, std::size_t action_count,
                                                         std::size_t context_count, std::uint64_t seed);

// unit vectors drawn uniformly from the sphere in R^d
Eigen::MatrixXd sample_unit_actions(std::size_t count, std::size_t d, Rng& rng);

// max minus second max over point policies
double point_gap(const Eigen::VectorXd& means);

}  // namespace arbe
