#pragma once

#include <memory>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "arbe/core.hpp"
#include "arbe/design.hpp"
#include "arbe/rng.hpp"

namespace arbe {

struct Draw {
    std::size_t local = 0;   // index into the learner's local actions
    std::size_t policy = 0;  // index into the learner's extended class
    ActionRef ref;
};

class BaseLearner {
public:
    virtual ~BaseLearner() = default;

    // distribution over local actions for this round; repeated calls give the same answer
    virtual std::span<const double> propose(const Context& x) = 0;
    virtual Draw draw(const Context& x, Rng& rng) = 0;
    // reward already importance weighted: 1{selected} r / rho
    virtual void observe(double iw_reward, bool selected) = 0;
    virtual void restart(double delta) = 0;
    virtual double complexity() const = 0;
    virtual double rho() const = 0;
    virtual const std::vector<ActionRef>& routing() const = 0;
    virtual std::size_t round() const = 0;
};

struct GeoSchedule {
    double eta = 0.0;
    double gamma = 0.0;
};

GeoSchedule geo_schedule(std::size_t t, std::size_t d, std::size_t a_count, double rho, double delta,
                         double c_eta = 1.0);

struct GeoHedgeParams {
    double rho = 1.0;
    double delta = 0.05;
    double c_eta = 1.0;
    double eps_design = 0.05;
    double complexity = 0.0;  // 0 means sqrt(d ln |A|)
};

class GeometricHedge final : public BaseLearner {
public:
    // routing[k] says where local action k goes; policy_of[k] is its index in the owner's extended class
    GeometricHedge(ActionSet actions, std::vector<ActionRef> routing, std::vector<std::size_t> policy_of,
                   GeoHedgeParams params);

    std::span<const double> propose(const Context& x) override;
    Draw draw(const Context& x, Rng& rng) override;
    void observe(double iw_reward, bool selected) override;
    void restart(double delta) override;
    double complexity() const override { return complexity_; }
    double rho() const override { return params_.rho; }
    const std::vector<ActionRef>& routing() const override { return routing_; }
    std::size_t round() const override { return t_; }

    // state after propose
    const Eigen::VectorXd& p() const { return p_; }
    const Eigen::MatrixXd& sigma() const { return sigma_; }
    const Eigen::VectorXd& leverage() const { return lev_; }
    double gamma() const { return sched_.gamma; }
    double eta() const { return eta_now_; }
    const Eigen::VectorXd& scores() const { return S_; }
    const Eigen::VectorXd& last_bonus_reward() const { return r_tilde_; }
    const DesignResult& design() const { return design_; }
    const ActionSet& actions() const { return actions_; }
    std::size_t eta_clips() const { return clips_; }

    // update with an explicit played action and [-1,1] reward (b = selected)
    void update(std::size_t played, double reward_pm, bool b);
    // omega-hat for played/reward under the cached covariance
    Eigen::VectorXd estimate(std::size_t played, double reward_pm, bool b) const;

private:
    void ensure_proposal();

    ActionSet actions_;
    std::vector<ActionRef> routing_;
    std::vector<std::size_t> policy_of_;
    GeoHedgeParams params_;
    double complexity_;
    DesignResult design_;

    std::size_t t_ = 0;  // completed rounds
    Eigen::VectorXd S_;
    double eta_cap_ = 0.0;
    double eta_now_ = 0.0;
    std::size_t clips_ = 0;
    GeoSchedule sched_;
    bool fresh_ = false;
    Eigen::VectorXd p_;
    std::vector<double> p_std_;
    Eigen::MatrixXd sigma_;
    Eigen::LLT<Eigen::MatrixXd> llt_;
    Eigen::VectorXd lev_;
    Eigen::VectorXd r_tilde_;
    std::optional<std::size_t> last_;
};

// zero-pads to d+k coordinates and appends e_{d+1..d+k}, routed by `extra_routing`
std::unique_ptr<GeometricHedge> make_extended_geo_hedge(const ActionSet& base_actions, std::size_t k,
                                                        GeoHedgeParams params,
                                                        std::vector<ActionRef> base_routing = {},
                                                        std::vector<ActionRef> extra_routing = {});

struct Exp4Params {
    double rho = 1.0;
    double delta = 0.05;
    double complexity = 0.0;  // 0 means sqrt(|A| ln |Pi|)
};

// exponential weights over policies with implicit exploration; local actions are base actions then links
class Exp4 final : public BaseLearner {
public:
    Exp4(ExtendedPolicyClass cls, std::size_t n_actions, Exp4Params params);

    std::span<const double> propose(const Context& x) override;
    Draw draw(const Context& x, Rng& rng) override;
    void observe(double iw_reward, bool selected) override;
    void restart(double delta) override;
    double complexity() const override { return complexity_; }
    double rho() const override { return params_.rho; }
    const std::vector<ActionRef>& routing() const override { return routing_; }
    std::size_t round() const override { return t_; }

    const std::vector<double>& policy_weights() const { return q_; }
    const std::vector<double>& cumulative_estimates() const { return G_; }
    double eta() const { return eta_; }
    double gamma_ix() const { return gamma_; }

    // local probabilities of every policy under context x
    double policy_prob(std::size_t policy, std::size_t local, const Context& x) const;

private:
    ExtendedPolicyClass cls_;
    std::size_t n_actions_;
    Exp4Params params_;
    double complexity_;
    std::vector<ActionRef> routing_;

    std::size_t t_ = 0;
    std::vector<double> G_;
    double eta_ = 0.0;
    double gamma_ = 0.0;
    bool fresh_ = false;
    Context ctx_;
    std::vector<double> q_;
    std::vector<double> p_;
    std::optional<Draw> last_;
};

double geo_hedge_complexity(std::size_t d, std::size_t a_count);
double exp4_complexity(std::size_t a_count, std::size_t policy_count);

enum class LearnerKind { geo_hedge, exp4 };

// blueprint for re-instantiating a base learner with a fresh extension, rho and delta
struct LearnerSpec {
    LearnerKind kind = LearnerKind::geo_hedge;
    std::size_t dim = 0;  // geo_hedge: leading coordinates of the global actions
    PolicyClass policies;
    double c_eta = 1.0;
    double eps_design = 0.05;
};

std::unique_ptr<BaseLearner> make_learner(const LearnerSpec& spec, const ActionSet& global_actions,
                                          const ExtendedPolicyClass& cls, double rho, double delta);

}  // namespace arbe
