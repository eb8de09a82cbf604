#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "arbe/envs.hpp"
#include "arbe/meta.hpp"

namespace arbe {

inline constexpr const char* kVersion = "0.1.0";

enum class Algorithm { arbe, arbe_gap_bowb, geo_hedge_solo, exp4_solo };
std::string algorithm_name(Algorithm a);
Algorithm parse_algorithm(const std::string& s);

struct EnvironmentSpec {
    std::string kind = "stochastic_linear";  // stochastic_linear | adversarial_linear | switching | contextual_finite
    std::vector<std::size_t> dims{2, 4};
    std::size_t i_star = 1;
    double gap = 0.2;
    std::size_t action_count = 8;
    double noise_sd = 0.05;
    std::uint64_t instance_seed = 1;
    std::vector<std::vector<double>> actions;  // explicit instance, optional
    std::vector<double> omega;

    std::string script = "oblivious";
    std::size_t period = 1000;
    double perturbation = 0.5;
    std::size_t t_switch = 0;
    std::vector<double> omega_b;

    std::string post = "drop_action";
    std::optional<std::size_t> drop_action;  // default: the optimal action
    double drop_amount = 0.0;

    std::size_t policy_count = 16;
    std::size_t context_count = 4;
    std::vector<std::size_t> policy_counts;  // nested prefixes for exp4 model selection
};

struct ExperimentConfig {
    Algorithm algorithm = Algorithm::arbe_gap_bowb;
    EnvironmentSpec environment;
    std::size_t horizon = 10000;
    std::vector<std::uint64_t> seeds{1};
    std::string learner = "geo_hedge";  // geo_hedge | exp4
    std::vector<double> complexity_overrides;
    MetaConstants meta;
    double c_eta = 1.0;
    double eps_design = 0.05;
    double solo_rho = 1.0;
    PolicyId initial_candidate = 0;
    std::string output = "out";
    std::size_t log_cadence = 0;  // rows every k rounds; 0: every round up to 1e5 rounds, every 16 above

    void validate() const;
};

ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig load_config(const std::string& path);
std::string config_to_json(const ExperimentConfig& cfg);

struct Row {
    std::size_t t = 0;
    double reward = 0.0;
    double regret = 0.0;
    std::optional<double> pseudo_regret;
    Phase phase = Phase::gap_estimation;
    LearnerIndex active_s = 1;
    std::optional<PolicyId> candidate;
    std::optional<double> gap_estimate;
    std::string event;
};

struct RunRecord {
    std::uint64_t seed = 0;
    std::vector<Row> rows;
    std::vector<Event> events;
    double final_regret = 0.0;
    std::optional<double> final_pseudo_regret;
    double cumulative_reward = 0.0;
    Phase final_phase = Phase::gap_estimation;
    std::vector<Phase> phases;  // distinct phases in order of appearance
    std::optional<std::size_t> t_gap;
    std::optional<double> gap_hat;
    std::optional<PolicyId> gap_candidate;
    std::optional<PolicyId> optimal_policy;
    std::optional<double> true_gap;
};

// exact regret against the environment's policy class, pseudo-regret for stochastic environments
class RegretTracker {
public:
    RegretTracker(const Environment& env);

    void record(const RoundData& round, double played_reward, PolicyId selected);
    double regret() const;
    std::optional<double> pseudo_regret() const { return pseudo_; }
    double cumulative_reward() const { return realized_; }
    const std::vector<double>& policy_totals() const { return totals_; }

private:
    const PolicyClass* cls_;
    std::vector<double> totals_;
    double realized_ = 0.0;
    std::optional<double> pseudo_;
    std::map<PolicyId, double> mean_gap_;
};

// regret and pseudo-regret from explicit traces; rewards[l][k] = expected reward of policy k in round l
struct RegretPair {
    double regret = 0.0;
    std::optional<double> pseudo_regret;
};
RegretPair track_regret(const std::vector<std::vector<double>>& policy_rewards, const std::vector<double>& played,
                        const std::optional<std::vector<double>>& selected_mean_gaps = std::nullopt);

std::unique_ptr<Environment> build_environment(const ExperimentConfig& cfg, std::uint64_t seed);
ModelSelectionSetup build_setup(const ExperimentConfig& cfg, const Environment& env);
std::unique_ptr<MetaAlgorithm> build_algorithm(const ExperimentConfig& cfg, const ModelSelectionSetup& setup,
                                               const Environment& env, std::uint64_t seed);

struct RunOptions {
    bool keep_rows = true;
    std::function<void(const Row&, const StepResult&)> observer;  // called every round
};

RunRecord run_single(const ExperimentConfig& cfg, std::uint64_t seed, const RunOptions& opts = {});
RunRecord run_with(const ExperimentConfig& cfg, Environment& env, MetaAlgorithm& algo, std::uint64_t seed,
                   const RunOptions& opts = {});
std::vector<RunRecord> run_experiment(const ExperimentConfig& cfg, const RunOptions& opts = {});

inline constexpr const char* kCsvHeader =
    "t,reward,regret,pseudo_regret,phase,active_s,candidate_policy,gap_estimate,event";

std::string format_number(double v);
std::string csv_row(const Row& r);
void write_run_csv(const RunRecord& rec, const std::string& path);
std::string summary_json(const std::vector<RunRecord>& records, const ExperimentConfig& cfg,
                         const std::vector<std::string>& csv_names);
void write_outputs(const std::vector<RunRecord>& records, const ExperimentConfig& cfg, const std::string& dir);
std::string csv_name(std::uint64_t seed);

}  // namespace arbe
