#include "arbe/harness.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <json.hpp>

namespace arbe {

RegretTracker::RegretTracker(const Environment& env) : cls_(&env.policy_class()), totals_(cls_->size(), 0.0) {
    if (env.stochastic()) {
        pseudo_ = 0.0;
        double best = -1.0;
        for (const auto& p : cls_->policies()) best = std::max(best, env.mean_reward(p));
        for (const auto& p : cls_->policies()) mean_gap_[p.id()] = best - env.mean_reward(p);
    }
}

void RegretTracker::record(const RoundData& round, double played_reward, PolicyId selected) {
    for (std::size_t k = 0; k < cls_->size(); ++k) totals_[k] += policy_expected_reward((*cls_)[k], round.x, round.r);
    realized_ += played_reward;
    if (pseudo_) {
        auto it = mean_gap_.find(selected);
        if (it == mean_gap_.end()) throw DomainError("selected policy outside the tracked class");
        *pseudo_ += it->second;
    }
}

double RegretTracker::regret() const {
    double best = totals_.front();
    for (double v : totals_) best = std::max(best, v);
    return best - realized_;
}

RegretPair track_regret(const std::vector<std::vector<double>>& policy_rewards, const std::vector<double>& played,
                        const std::optional<std::vector<double>>& selected_mean_gaps) {
    if (policy_rewards.size() != played.size()) throw DomainError("trace lengths differ");
    RegretPair out;
    if (policy_rewards.empty()) return out;
    std::vector<double> tot(policy_rewards.front().size(), 0.0);
    double got = 0.0;
    for (std::size_t l = 0; l < played.size(); ++l) {
        for (std::size_t k = 0; k < tot.size(); ++k) tot[k] += policy_rewards[l][k];
        got += played[l];
    }
    double best = tot.front();
    for (double v : tot) best = std::max(best, v);
    out.regret = best - got;
    if (selected_mean_gaps) {
        double s = 0.0;
        for (double g : *selected_mean_gaps) s += g;
        out.pseudo_regret = s;
    }
    return out;
}

namespace {

Eigen::MatrixXd explicit_actions(const EnvironmentSpec& e) {
    const std::size_t d = e.dims.back();
    Eigen::MatrixXd X(static_cast<Eigen::Index>(e.actions.size()), static_cast<Eigen::Index>(d));
    for (std::size_t i = 0; i < e.actions.size(); ++i) {
        if (e.actions[i].size() != d) throw ConfigError("explicit action has wrong dimension");
        for (std::size_t k = 0; k < d; ++k) X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = e.actions[i][k];
    }
    return X;
}

Eigen::VectorXd to_vec(const std::vector<double>& v) {
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

NestedInstance nested_from(const EnvironmentSpec& e) {
    if (e.actions.empty())
        return make_nested_instance(e.dims, e.i_star, e.gap, e.action_count, e.noise_sd, e.instance_seed);
    NestedInstance inst;
    inst.dims = e.dims;
    inst.i_star = e.i_star;
    inst.actions = explicit_actions(e);
    inst.omega = to_vec(e.omega);
    inst.noise_sd = e.noise_sd;
    inst.action_count = e.actions.size();
    return inst;
}

}  // namespace

std::unique_ptr<Environment> build_environment(const ExperimentConfig& cfg, std::uint64_t seed) {
    const auto& e = cfg.environment;
    if (e.kind == "stochastic_linear") return std::make_unique<StochasticLinear>(nested_from(e), seed);
    if (e.kind == "switching") {
        NestedInstance inst = nested_from(e);
        PostSwitch post;
        if (e.post == "linear") {
            post.kind = PostSwitch::Kind::linear;
            post.omega = to_vec(e.omega_b);
        } else {
            post.kind = PostSwitch::Kind::drop_action;
            StochasticLinear probe(inst, seed);
            post.action = e.drop_action.value_or(probe.best_policy());
            post.amount = e.drop_amount;
        }
        return make_switching_bowb(inst, e.t_switch, post, seed);
    }
    if (e.kind == "adversarial_linear") {
        AdversarySpec spec;
        static const std::map<std::string, AdversarySpec::Kind> kinds{
            {"constant", AdversarySpec::Kind::constant},
            {"oblivious", AdversarySpec::Kind::oblivious},
            {"phase_switching", AdversarySpec::Kind::phase_switching},
            {"sign_flipping", AdversarySpec::Kind::sign_flipping}};
        spec.kind = kinds.at(e.script);
        spec.period = e.period;
        spec.perturbation = e.perturbation;
        spec.t_switch = e.t_switch;
        Eigen::MatrixXd X;
        if (e.actions.empty()) {
            Rng rng(e.instance_seed, "adversarial-instance");
            X = sample_unit_actions(e.action_count, e.dims.back(), rng);
        } else {
            X = explicit_actions(e);
        }
        spec.omega_a = e.omega.empty() ? Eigen::VectorXd::Zero(X.cols()) : to_vec(e.omega);
        spec.omega_b = e.omega_b.empty() ? Eigen::VectorXd(-spec.omega_a) : to_vec(e.omega_b);
        return std::make_unique<AdversarialLinear>(std::move(X), spec, e.noise_sd, seed);
    }
    if (e.kind == "contextual_finite") {
        auto env = std::make_unique<ContextualFinite>(e.policy_count, e.action_count, e.context_count, e.instance_seed);
        return env;
    }
    throw ConfigError("unknown environment kind '" + e.kind + "'");
}

ModelSelectionSetup build_setup(const ExperimentConfig& cfg, const Environment& env) {
    ModelSelectionSetup setup;
    setup.actions = env.actions();
    const std::size_t N = env.actions().size();
    if (cfg.learner == "geo_hedge") {
        const auto& dims = cfg.environment.dims;
        const bool solo = cfg.algorithm == Algorithm::geo_hedge_solo;
        for (std::size_t i = solo ? dims.size() - 1 : 0; i < dims.size(); ++i) {
            LearnerSpec s;
            s.kind = LearnerKind::geo_hedge;
            s.dim = dims[i];
            s.policies = point_policy_class(N, geo_hedge_complexity(dims[i], N));
            s.c_eta = cfg.c_eta;
            s.eps_design = cfg.eps_design;
            setup.learners.push_back(std::move(s));
        }
    } else {
        const PolicyClass& full = env.policy_class();
        std::vector<std::size_t> counts = cfg.environment.policy_counts;
        if (counts.empty() || cfg.algorithm == Algorithm::exp4_solo) counts = {full.size()};
        for (std::size_t n : counts) {
            if (n < 1 || n > full.size()) throw ConfigError("policy count out of range");
            std::vector<Policy> ps(full.policies().begin(), full.policies().begin() + static_cast<std::ptrdiff_t>(n));
            LearnerSpec s;
            s.kind = LearnerKind::exp4;
            s.policies = PolicyClass(std::move(ps), exp4_complexity(N, n));
            setup.learners.push_back(std::move(s));
        }
    }
    for (double v : cfg.complexity_overrides) setup.extended_complexity.push_back(v > 0.0 ? std::optional<double>(v)
                                                                                          : std::nullopt);
    return setup;
}

std::unique_ptr<MetaAlgorithm> build_algorithm(const ExperimentConfig& cfg, const ModelSelectionSetup& setup,
                                               const Environment&, std::uint64_t seed) {
    switch (cfg.algorithm) {
    case Algorithm::arbe: return std::make_unique<ArbeRunner>(setup, cfg.meta, seed);
    case Algorithm::arbe_gap_bowb:
        return std::make_unique<BestOfBothDriver>(setup, cfg.meta, seed, cfg.initial_candidate);
    case Algorithm::geo_hedge_solo:
    case Algorithm::exp4_solo: {
        const LearnerSpec& top = setup.spec(setup.M());
        auto learner = make_learner(top, setup.actions, extend_policy_class(top.policies, 1, 1), cfg.solo_rho,
                                    cfg.meta.delta);
        return std::make_unique<SoloRunner>(std::move(learner), seed, top.policies);
    }
    }
    throw ConfigError("unknown algorithm");
}

namespace {

int log_level() {
    const char* v = std::getenv("ARBE_LOG");
    if (!v) return 0;
    const std::string s(v);
    if (s == "debug") return 2;
    if (s == "info") return 1;
    return 0;
}

}  // namespace

RunRecord run_with(const ExperimentConfig& cfg, Environment& env, MetaAlgorithm& algo, std::uint64_t seed,
                   const RunOptions& opts) {
    const int level = log_level();
    std::size_t cadence = cfg.log_cadence;
    if (cadence == 0) cadence = cfg.horizon <= 100000 ? 1 : 16;

    RunRecord rec;
    rec.seed = seed;
    if (env.stochastic()) {
        rec.optimal_policy = env.best_policy();
        rec.true_gap = env.gap();
    }
    RegretTracker tracker(env);
    for (std::size_t t = 1; t <= cfg.horizon; ++t) {
        const RoundData round = env.next_round(t);
        const StepResult st = algo.step(t, round);
        tracker.record(round, st.reward, st.policy);

        Row row;
        row.t = t;
        row.reward = st.reward;
        row.regret = tracker.regret();
        row.pseudo_regret = tracker.pseudo_regret();
        row.phase = algo.phase();
        row.active_s = algo.active_s();
        row.candidate = algo.candidate();
        row.gap_estimate = algo.gap_estimate_value();
        for (const auto& ev : st.events) {
            if (!row.event.empty()) row.event += '|';
            row.event += ev.describe();
            rec.events.push_back(ev);
            if (ev.kind == Event::Kind::gap_found && !rec.t_gap) {
                rec.t_gap = t;
                rec.gap_hat = ev.value;
                rec.gap_candidate = ev.index;
            }
            if (level >= 1)
                std::cerr << "[arbe] seed=" << seed << " t=" << t << " " << ev.describe() << '\n';
        }
        if (rec.phases.empty() || rec.phases.back() != row.phase) rec.phases.push_back(row.phase);
        if (level >= 2 && t % 10000 == 0)
            std::cerr << "[arbe] seed=" << seed << " t=" << t << " phase=" << phase_name(row.phase)
                      << " s=" << row.active_s << " regret=" << format_number(row.regret) << '\n';
        if (opts.observer) opts.observer(row, st);
        if (opts.keep_rows && (t % cadence == 0 || t == cfg.horizon || !row.event.empty()))
            rec.rows.push_back(std::move(row));
    }
    rec.final_regret = tracker.regret();
    rec.final_pseudo_regret = tracker.pseudo_regret();
    rec.cumulative_reward = tracker.cumulative_reward();
    rec.final_phase = algo.phase();
    return rec;
}

RunRecord run_single(const ExperimentConfig& cfg, std::uint64_t seed, const RunOptions& opts) {
    cfg.validate();
    auto env = build_environment(cfg, seed);
    const ModelSelectionSetup setup = build_setup(cfg, *env);
    auto algo = build_algorithm(cfg, setup, *env, seed);
    return run_with(cfg, *env, *algo, seed, opts);
}

std::vector<RunRecord> run_experiment(const ExperimentConfig& cfg, const RunOptions& opts) {
    cfg.validate();
    std::vector<RunRecord> out;
    for (std::uint64_t s : cfg.seeds) out.push_back(run_single(cfg, s, opts));
    return out;
}

std::string format_number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string csv_row(const Row& r) {
    std::string s;
    s += std::to_string(r.t);
    s += ',' + format_number(r.reward);
    s += ',' + format_number(r.regret);
    s += ',' + (r.pseudo_regret ? format_number(*r.pseudo_regret) : std::string());
    s += ',' + phase_name(r.phase);
    s += ',' + std::to_string(r.active_s);
    s += ',' + (r.candidate ? std::to_string(*r.candidate) : std::string());
    s += ',' + (r.gap_estimate ? format_number(*r.gap_estimate) : std::string());
    s += ',' + r.event;
    return s;
}

std::string csv_name(std::uint64_t seed) { return "run_seed" + std::to_string(seed) + ".csv"; }

void write_run_csv(const RunRecord& rec, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << kCsvHeader << '\n';
    for (const auto& r : rec.rows) out << csv_row(r) << '\n';
    if (!out) throw std::runtime_error("write failed for " + path);
}

std::string summary_json(const std::vector<RunRecord>& records, const ExperimentConfig& cfg,
                         const std::vector<std::string>& csv_names) {
    using nlohmann::ordered_json;
    ordered_json runs = ordered_json::array();
    for (std::size_t k = 0; k < records.size(); ++k) {
        const auto& r = records[k];
        ordered_json counts{{"elimination", 0}, {"restart", 0}, {"gap_found", 0}, {"exploit_return", 0},
                            {"policy_switch", 0}};
        for (const auto& ev : r.events) {
            const char* key = ev.kind == Event::Kind::elimination      ? "elimination"
                              : ev.kind == Event::Kind::restart        ? "restart"
                              : ev.kind == Event::Kind::gap_found      ? "gap_found"
                              : ev.kind == Event::Kind::exploit_return ? "exploit_return"
                                                                       : "policy_switch";
            counts[key] = counts[key].get<int>() + 1;
        }
        ordered_json phases = ordered_json::array();
        for (Phase p : r.phases) phases.push_back(phase_name(p));
        auto opt = [](const auto& o) { return o ? ordered_json(*o) : ordered_json(nullptr); };
        ordered_json j{{"seed", r.seed},
                       {"csv", k < csv_names.size() ? ordered_json(csv_names[k]) : ordered_json(nullptr)},
                       {"horizon", cfg.horizon},
                       {"final_regret", r.final_regret},
                       {"final_pseudo_regret", opt(r.final_pseudo_regret)},
                       {"cumulative_reward", r.cumulative_reward},
                       {"final_phase", phase_name(r.final_phase)},
                       {"phases", phases},
                       {"event_counts", counts},
                       {"t_gap", opt(r.t_gap)},
                       {"gap_estimate", opt(r.gap_hat)},
                       {"gap_candidate", opt(r.gap_candidate)},
                       {"optimal_policy", opt(r.optimal_policy)},
                       {"true_gap", opt(r.true_gap)}};
        runs.push_back(std::move(j));
    }
    ordered_json top{{"artifact_version", kVersion},
                     {"algorithm", algorithm_name(cfg.algorithm)},
                     {"run_count", records.size()},
                     {"config", ordered_json::parse(config_to_json(cfg))},
                     {"runs", runs}};
    return top.dump(2) + "\n";
}

void write_outputs(const std::vector<RunRecord>& records, const ExperimentConfig& cfg, const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw std::runtime_error("cannot create " + dir + ": " + ec.message());
    std::vector<std::string> names;
    for (const auto& r : records) {
        names.push_back(csv_name(r.seed));
        write_run_csv(r, (std::filesystem::path(dir) / names.back()).string());
    }
    const std::string path = (std::filesystem::path(dir) / "summary.json").string();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << summary_json(records, cfg, names);
}

}  // namespace arbe
