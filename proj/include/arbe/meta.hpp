#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "arbe/concentration.hpp"
#include "arbe/core.hpp"
#include "arbe/envs.hpp"
#include "arbe/learners.hpp"
#include "arbe/rng.hpp"

namespace arbe {

std::vector<double> balancing_probabilities(const std::vector<double>& complexities);

// strict comparison; conc_scale multiplies the radii, balance_scale the balancing slack
bool elimination_test(double crew_i, double crew_j, std::size_t t0, std::size_t t, double rho_i, double rho_j,
                      double R_i, const BoundaryParams& p, double conc_scale = 1.0, double balance_scale = 1.0);
double elimination_threshold(std::size_t t0, std::size_t t, double rho_i, double rho_j, double R_i,
                             const BoundaryParams& p, double conc_scale = 1.0, double balance_scale = 1.0);

double gap_estimate(double crew_M, double crew_M1, std::size_t t0, std::size_t t, double W);
bool gap_test(double gap_hat, double W, double R_M);

std::optional<PolicyId> candidate_policy_test(const std::map<PolicyId, std::size_t>& counts, std::size_t t,
                                              PolicyId current);

struct ExploitEpoch {
    std::size_t k = 0;
    double rho = 0.0;
    double delta = 0.0;
};

double exploit_k0(double gap_hat, double R, double delta, double c_k0);
ExploitEpoch exploit_epoch_init(std::size_t e, double gap_hat, double R, double delta, double c_k0, double c_rho);

enum class Verdict { proceed, adversarial_low, adversarial_high };
Verdict exploit_tests(double crew0, double crew1, std::size_t t_e, std::size_t t, double gap_hat, double V);

enum class RestartUnion { factor3, per_restart };

struct MetaConstants {
    double delta = 0.05;
    double c_W = 1.0;
    double c_V = 1.0;
    double c_k0 = 6.0;
    double c_rho = 1.0;
    double conc_scale = 1.0;
    double balance_scale = 1.0;
    RestartUnion restart_union = RestartUnion::factor3;
    double restart_factor = 3.0;
};

// learners are 1-based: specs[0] is learner 1, specs.back() is learner M
struct ModelSelectionSetup {
    ActionSet actions;
    std::vector<LearnerSpec> learners;
    std::vector<std::optional<double>> extended_complexity;  // per learner override, may be empty

    std::size_t M() const { return learners.size(); }
    const LearnerSpec& spec(LearnerIndex i) const { return learners.at(i - 1); }
    std::optional<double> override_for(LearnerIndex i) const;
};

struct Event {
    enum class Kind { elimination, restart, gap_found, exploit_return, policy_switch };
    Kind kind = Kind::elimination;
    std::size_t t = 0;
    std::size_t index = 0;   // eliminated learner, restart counter, or policy id
    double value = 0.0;      // gap estimate
    std::string reason;

    std::string describe() const;
};

enum class Phase { gap_estimation, exploit, fallback, arbe, solo };
std::string phase_name(Phase p);

struct MetaRngs {
    explicit MetaRngs(std::uint64_t seed);
    Rng select;
    Rng draw;
    Rng exploit;
};

struct StepResult {
    ActionIndex action = 0;
    PolicyId policy = 0;
    double reward = 0.0;
    LearnerIndex chosen = 0;
    std::vector<LearnerIndex> chain;
    std::vector<Event> events;
};

struct BaseLearnerSlot {
    LearnerIndex index = 0;
    std::unique_ptr<BaseLearner> learner;
    ExtendedPolicyClass extended_class;
    double rho = 0.0;
    double crew = 0.0;
    std::map<PolicyId, std::size_t> selection_count;
};

// one balanced round over a set of slots: sample, collect, resolve, play, update
class SlotPool {
public:
    SlotPool() = default;
    explicit SlotPool(std::vector<BaseLearnerSlot> slots);

    StepResult play(const RoundData& round, MetaRngs& rngs, std::optional<LearnerIndex> forced = std::nullopt);

    std::vector<BaseLearnerSlot>& slots() { return slots_; }
    const std::vector<BaseLearnerSlot>& slots() const { return slots_; }
    BaseLearnerSlot& slot(LearnerIndex i);
    const BaseLearnerSlot& slot(LearnerIndex i) const;

private:
    std::vector<BaseLearnerSlot> slots_;
    std::vector<double> rho_;
    std::vector<std::optional<ActionRef>> proposals_;
    std::vector<Draw> draws_;
};

class MetaAlgorithm {
public:
    virtual ~MetaAlgorithm() = default;
    virtual StepResult step(std::size_t t, const RoundData& round) = 0;
    virtual Phase phase() const = 0;
    virtual LearnerIndex active_s() const = 0;
    virtual std::optional<PolicyId> candidate() const { return std::nullopt; }
    virtual std::optional<double> gap_estimate_value() const { return std::nullopt; }
};

class Arbe {
public:
    Arbe(const ModelSelectionSetup& setup, const MetaConstants& c, LearnerIndex s, std::size_t t0);

    // plays round t; returns eliminations via events
    StepResult step(std::size_t t, const RoundData& round, MetaRngs& rngs);
    LearnerIndex s() const { return s_; }
    std::size_t t0() const { return t0_; }
    const SlotPool& pool() const { return pool_; }
    SlotPool& pool() { return pool_; }

private:
    void start(LearnerIndex s, std::size_t t0);

    const ModelSelectionSetup* setup_;
    MetaConstants c_;
    LearnerIndex s_ = 1;
    std::size_t t0_ = 0;
    SlotPool pool_;
};

class ArbeGap {
public:
    ArbeGap(const ModelSelectionSetup& setup, const MetaConstants& c, PolicyId initial_candidate);

    struct Outcome {
        StepResult step;
        std::optional<double> enter_exploit;  // gap estimate that passed the test
    };
    Outcome step(std::size_t t, const RoundData& round, MetaRngs& rngs);

    LearnerIndex s() const { return s_; }
    std::size_t t0() const { return t0_; }
    std::size_t n() const { return n_; }
    PolicyId candidate() const { return pi_hat_; }
    std::optional<double> last_gap_estimate() const { return last_gap_; }
    const SlotPool& pool() const { return pool_; }
    const std::map<PolicyId, std::size_t>& counts() const { return counts_; }
    BoundaryParams boundary() const;

private:
    void start(LearnerIndex s, std::size_t t0, PolicyId pi_hat, std::size_t n);

    const ModelSelectionSetup* setup_;
    MetaConstants c_;
    LearnerIndex s_ = 1;
    std::size_t t0_ = 0;
    std::size_t n_ = 1;
    PolicyId pi_hat_ = 0;
    std::optional<double> last_gap_;
    SlotPool pool_;
    std::map<PolicyId, std::size_t> counts_;
};

class Exploit {
public:
    Exploit(const ModelSelectionSetup& setup, const MetaConstants& c, std::size_t t_gap, PolicyId pi_hat,
            double gap_hat);

    struct Outcome {
        StepResult step;
        Verdict verdict = Verdict::proceed;
    };
    Outcome step(std::size_t t, const RoundData& round, MetaRngs& rngs);

    std::size_t epoch() const { return e_; }
    std::size_t t_e() const { return t_e_; }
    const ExploitEpoch& params() const { return ep_; }
    double crew0() const { return crew0_; }
    double crew1() const { return crew1_; }
    double gap_hat() const { return gap_hat_; }
    PolicyId candidate() const { return pi_hat_; }
    double complexity() const { return R_; }
    const BaseLearner& inner() const { return *inner_; }

private:
    void start_epoch(std::size_t e, std::size_t t_e);

    const ModelSelectionSetup* setup_;
    MetaConstants c_;
    PolicyId pi_hat_;
    Policy pi_hat_policy_;
    double gap_hat_;
    double R_;
    LearnerSpec inner_spec_;
    ExtendedPolicyClass inner_class_;
    std::size_t e_ = 0;
    std::size_t t_e_ = 0;
    ExploitEpoch ep_;
    double crew0_ = 0.0;
    double crew1_ = 0.0;
    std::unique_ptr<BaseLearner> inner_;
};

class ArbeRunner final : public MetaAlgorithm {
public:
    ArbeRunner(const ModelSelectionSetup& setup, const MetaConstants& c, std::uint64_t seed);
    StepResult step(std::size_t t, const RoundData& round) override;
    Phase phase() const override { return Phase::arbe; }
    LearnerIndex active_s() const override { return arbe_.s(); }
    const Arbe& arbe() const { return arbe_; }

private:
    MetaRngs rngs_;
    Arbe arbe_;
};

class BestOfBothDriver final : public MetaAlgorithm {
public:
    BestOfBothDriver(const ModelSelectionSetup& setup, const MetaConstants& c, std::uint64_t seed,
                     PolicyId initial_candidate = 0);
    StepResult step(std::size_t t, const RoundData& round) override;
    Phase phase() const override { return phase_; }
    LearnerIndex active_s() const override;
    std::optional<PolicyId> candidate() const override;
    std::optional<double> gap_estimate_value() const override;

    const ArbeGap* gap_state() const { return gap_.get(); }
    const Exploit* exploit_state() const { return exploit_.get(); }
    const Arbe* fallback_state() const { return fallback_.get(); }

private:
    const ModelSelectionSetup* setup_;
    MetaConstants c_;
    MetaRngs rngs_;
    Phase phase_ = Phase::gap_estimation;
    LearnerIndex surviving_s_ = 1;
    std::unique_ptr<ArbeGap> gap_;
    std::unique_ptr<Exploit> exploit_;
    std::unique_ptr<Arbe> fallback_;
};

// a single learner fed importance-weighted observations with keep probability rho
class SoloRunner final : public MetaAlgorithm {
public:
    SoloRunner(std::unique_ptr<BaseLearner> learner, std::uint64_t seed, PolicyClass cls);
    StepResult step(std::size_t t, const RoundData& round) override;
    Phase phase() const override { return Phase::solo; }
    LearnerIndex active_s() const override { return 1; }
    BaseLearner& learner() { return *learner_; }

private:
    std::unique_ptr<BaseLearner> learner_;
    MetaRngs rngs_;
    PolicyClass cls_;
};

}  // namespace arbe
