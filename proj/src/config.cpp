#include <fstream>
#include <set>
#include <sstream>

#include <toml.hpp>
#include <json.hpp>

#include "arbe/harness.hpp"

namespace arbe {

std::string algorithm_name(Algorithm a) {
    switch (a) {
    case Algorithm::arbe: return "arbe";
    case Algorithm::arbe_gap_bowb: return "arbe_gap_bowb";
    case Algorithm::geo_hedge_solo: return "geo_hedge_solo";
    case Algorithm::exp4_solo: return "exp4_solo";
    }
    return "";
}

Algorithm parse_algorithm(const std::string& s) {
    if (s == "arbe") return Algorithm::arbe;
    if (s == "arbe_gap_bowb") return Algorithm::arbe_gap_bowb;
    if (s == "geo_hedge_solo") return Algorithm::geo_hedge_solo;
    if (s == "exp4_solo") return Algorithm::exp4_solo;
    throw ConfigError("unknown algorithm '" + s + "'");
}

void ExperimentConfig::validate() const {
    if (horizon < 1) throw ConfigError("horizon must be at least 1");
    if (seeds.empty()) throw ConfigError("at least one seed required");
    if (!(meta.delta > 0.0 && meta.delta < 1.0)) throw ConfigError("delta must lie in (0,1)");
    if (!(meta.c_k0 >= 6.0 * meta.c_rho * (1.0 - 1e-12))) throw ConfigError("c_k0 must be at least 6 c_rho");
    for (double v : {meta.c_W, meta.c_V, meta.c_k0, meta.c_rho, c_eta})
        if (!(v > 0.0)) throw ConfigError("width and rate constants must be positive");
    if (!(meta.conc_scale >= 0.0) || !(meta.balance_scale >= 0.0)) throw ConfigError("scales must be nonnegative");
    if (!(meta.restart_factor >= 1.0)) throw ConfigError("restart_factor must be at least 1");
    if (!(eps_design > 0.0 && eps_design < 1.0)) throw ConfigError("eps_design must lie in (0,1)");
    if (!(solo_rho > 0.0 && solo_rho <= 1.0)) throw ConfigError("solo_rho must lie in (0,1]");
    const auto& e = environment;
    static const std::set<std::string> kinds{"stochastic_linear", "adversarial_linear", "switching",
                                             "contextual_finite"};
    if (!kinds.count(e.kind)) throw ConfigError("unknown environment kind '" + e.kind + "'");
    if (learner != "geo_hedge" && learner != "exp4") throw ConfigError("unknown learner '" + learner + "'");
    const bool contextual = e.kind == "contextual_finite";
    if (contextual != (learner == "exp4")) throw ConfigError("exp4 learners pair with contextual_finite");
    if (algorithm == Algorithm::exp4_solo && !contextual) throw ConfigError("exp4_solo needs contextual_finite");
    if (algorithm == Algorithm::geo_hedge_solo && contextual) throw ConfigError("geo_hedge_solo needs a linear env");
    if (e.dims.empty()) throw ConfigError("dims must be nonempty");
    for (std::size_t i = 1; i < e.dims.size(); ++i)
        if (e.dims[i] <= e.dims[i - 1]) throw ConfigError("dims must be strictly increasing");
    if (e.i_star < 1 || e.i_star > e.dims.size()) throw ConfigError("i_star out of range");
    if (!e.actions.empty() && e.omega.size() != e.dims.back())
        throw ConfigError("explicit actions need omega of length d_M");
    static const std::set<std::string> scripts{"constant", "oblivious", "phase_switching", "sign_flipping"};
    if (!scripts.count(e.script)) throw ConfigError("unknown adversary script '" + e.script + "'");
    if (e.post != "drop_action" && e.post != "linear") throw ConfigError("unknown post-switch adversary");
    if (!e.omega_b.empty() && e.omega_b.size() != e.dims.back())
        throw ConfigError("omega_b must have length d_M");
    for (std::size_t i = 1; i < e.policy_counts.size(); ++i)
        if (e.policy_counts[i] <= e.policy_counts[i - 1]) throw ConfigError("policy_counts must increase");
    if (!e.policy_counts.empty() && e.policy_counts.back() != e.policy_count)
        throw ConfigError("last policy_counts entry must equal policy_count");
}

namespace {

void reject_unknown(const toml::table& t, const std::set<std::string>& allowed, const std::string& where) {
    for (const auto& [k, v] : t) {
        const std::string key(k.str());
        if (!allowed.count(key)) throw ConfigError("unknown key '" + key + "' in " + where);
    }
}

double num(const toml::node& n, const std::string& key) {
    if (auto v = n.value<double>()) return *v;
    throw ConfigError("key '" + key + "' must be a number");
}

std::uint64_t uint(const toml::node& n, const std::string& key) {
    auto v = n.value<std::int64_t>();
    if (!v || *v < 0) throw ConfigError("key '" + key + "' must be a nonnegative integer");
    return static_cast<std::uint64_t>(*v);
}

std::string str(const toml::node& n, const std::string& key) {
    if (auto v = n.value<std::string>()) return *v;
    throw ConfigError("key '" + key + "' must be a string");
}

const toml::array& arr(const toml::node& n, const std::string& key) {
    if (auto a = n.as_array()) return *a;
    throw ConfigError("key '" + key + "' must be an array");
}

template <class T, class F>
std::vector<T> list(const toml::node& n, const std::string& key, F f) {
    std::vector<T> out;
    for (const auto& x : arr(n, key)) out.push_back(f(x, key));
    return out;
}

void parse_constants(const toml::table& t, ExperimentConfig& cfg) {
    reject_unknown(t, {"c_W", "c_V", "c_k0", "c_rho", "conc_scale", "balance_scale", "c_eta", "eps_design",
                       "restart_union", "restart_factor"},
                   "[constants]");
    for (const auto& [k, v] : t) {
        const std::string key(k.str());
        if (key == "c_W") cfg.meta.c_W = num(v, key);
        else if (key == "c_V") cfg.meta.c_V = num(v, key);
        else if (key == "c_k0") cfg.meta.c_k0 = num(v, key);
        else if (key == "c_rho") cfg.meta.c_rho = num(v, key);
        else if (key == "conc_scale") cfg.meta.conc_scale = num(v, key);
        else if (key == "balance_scale") cfg.meta.balance_scale = num(v, key);
        else if (key == "c_eta") cfg.c_eta = num(v, key);
        else if (key == "eps_design") cfg.eps_design = num(v, key);
        else if (key == "restart_factor") cfg.meta.restart_factor = num(v, key);
        else if (key == "restart_union") {
            const std::string u = str(v, key);
            if (u == "factor3") cfg.meta.restart_union = RestartUnion::factor3;
            else if (u == "per_restart") cfg.meta.restart_union = RestartUnion::per_restart;
            else throw ConfigError("restart_union must be factor3 or per_restart");
        }
    }
}

void parse_environment(const toml::table& t, EnvironmentSpec& e) {
    reject_unknown(t, {"kind", "dims", "i_star", "gap", "action_count", "noise_sd", "instance_seed", "actions",
                       "omega", "script", "period", "perturbation", "t_switch", "omega_b", "post", "drop_action",
                       "drop_amount", "policy_count", "context_count", "policy_counts"},
                   "[environment]");
    auto as_size = [](const toml::node& n, const std::string& k) { return static_cast<std::size_t>(uint(n, k)); };
    for (const auto& [k, v] : t) {
        const std::string key(k.str());
        if (key == "kind") e.kind = str(v, key);
        else if (key == "dims") e.dims = list<std::size_t>(v, key, as_size);
        else if (key == "i_star") e.i_star = as_size(v, key);
        else if (key == "gap") e.gap = num(v, key);
        else if (key == "action_count") e.action_count = as_size(v, key);
        else if (key == "noise_sd") e.noise_sd = num(v, key);
        else if (key == "instance_seed") e.instance_seed = uint(v, key);
        else if (key == "actions") {
            e.actions.clear();
            for (const auto& row : arr(v, key)) e.actions.push_back(list<double>(row, key, num));
        } else if (key == "omega") e.omega = list<double>(v, key, num);
        else if (key == "script") e.script = str(v, key);
        else if (key == "period") e.period = as_size(v, key);
        else if (key == "perturbation") e.perturbation = num(v, key);
        else if (key == "t_switch") e.t_switch = as_size(v, key);
        else if (key == "omega_b") e.omega_b = list<double>(v, key, num);
        else if (key == "post") e.post = str(v, key);
        else if (key == "drop_action") e.drop_action = as_size(v, key);
        else if (key == "drop_amount") e.drop_amount = num(v, key);
        else if (key == "policy_count") e.policy_count = as_size(v, key);
        else if (key == "context_count") e.context_count = as_size(v, key);
        else if (key == "policy_counts") e.policy_counts = list<std::size_t>(v, key, as_size);
    }
}

}  // namespace

ExperimentConfig parse_config_text(const std::string& text) {
    toml::table root;
    try {
        root = toml::parse(text);
    } catch (const toml::parse_error& err) {
        std::ostringstream os;
        os << "config parse error: " << err.description() << " at line " << err.source().begin.line;
        throw ConfigError(os.str());
    }
    ExperimentConfig cfg;
    reject_unknown(root, {"algorithm", "horizon", "seeds", "delta", "output", "log_cadence", "learner",
                          "complexity_overrides", "solo_rho", "initial_candidate", "constants", "environment"},
                   "top level");
    for (const auto& [k, v] : root) {
        const std::string key(k.str());
        if (key == "algorithm") cfg.algorithm = parse_algorithm(str(v, key));
        else if (key == "horizon") cfg.horizon = static_cast<std::size_t>(uint(v, key));
        else if (key == "seeds") cfg.seeds = list<std::uint64_t>(v, key, uint);
        else if (key == "delta") cfg.meta.delta = num(v, key);
        else if (key == "output") cfg.output = str(v, key);
        else if (key == "log_cadence") cfg.log_cadence = static_cast<std::size_t>(uint(v, key));
        else if (key == "learner") cfg.learner = str(v, key);
        else if (key == "complexity_overrides") cfg.complexity_overrides = list<double>(v, key, num);
        else if (key == "solo_rho") cfg.solo_rho = num(v, key);
        else if (key == "initial_candidate") cfg.initial_candidate = uint(v, key);
        else if (key == "constants") {
            if (!v.is_table()) throw ConfigError("[constants] must be a table");
            parse_constants(*v.as_table(), cfg);
        } else if (key == "environment") {
            if (!v.is_table()) throw ConfigError("[environment] must be a table");
            parse_environment(*v.as_table(), cfg.environment);
        }
    }
    cfg.validate();
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

std::string config_to_json(const ExperimentConfig& cfg) {
    using nlohmann::ordered_json;
    const auto& e = cfg.environment;
    ordered_json env{{"kind", e.kind},
                     {"dims", e.dims},
                     {"i_star", e.i_star},
                     {"gap", e.gap},
                     {"action_count", e.action_count},
                     {"noise_sd", e.noise_sd},
                     {"instance_seed", e.instance_seed}};
    if (!e.actions.empty()) {
        env["actions"] = e.actions;
        env["omega"] = e.omega;
    }
    if (e.kind == "adversarial_linear") {
        env["script"] = e.script;
        env["period"] = e.period;
        env["perturbation"] = e.perturbation;
        env["t_switch"] = e.t_switch;
        if (!e.omega_b.empty()) env["omega_b"] = e.omega_b;
    }
    if (e.kind == "switching") {
        env["t_switch"] = e.t_switch;
        env["post"] = e.post;
        if (e.drop_action) env["drop_action"] = *e.drop_action;
        env["drop_amount"] = e.drop_amount;
        if (!e.omega_b.empty()) env["omega_b"] = e.omega_b;
    }
    if (e.kind == "contextual_finite") {
        env["policy_count"] = e.policy_count;
        env["context_count"] = e.context_count;
        env["policy_counts"] = e.policy_counts;
    }
    ordered_json c{{"c_W", cfg.meta.c_W},
                   {"c_V", cfg.meta.c_V},
                   {"c_k0", cfg.meta.c_k0},
                   {"c_rho", cfg.meta.c_rho},
                   {"conc_scale", cfg.meta.conc_scale},
                   {"balance_scale", cfg.meta.balance_scale},
                   {"c_eta", cfg.c_eta},
                   {"eps_design", cfg.eps_design},
                   {"restart_union", cfg.meta.restart_union == RestartUnion::factor3 ? "factor3" : "per_restart"},
                   {"restart_factor", cfg.meta.restart_factor}};
    ordered_json j{{"algorithm", algorithm_name(cfg.algorithm)},
                   {"horizon", cfg.horizon},
                   {"seeds", cfg.seeds},
                   {"delta", cfg.meta.delta},
                   {"learner", cfg.learner},
                   {"complexity_overrides", cfg.complexity_overrides},
                   {"solo_rho", cfg.solo_rho},
                   {"initial_candidate", cfg.initial_candidate},
                   {"output", cfg.output},
                   {"log_cadence", cfg.log_cadence},
                   {"constants", c},
                   {"environment", env}};
    return j.dump();
}

}  // namespace arbe
