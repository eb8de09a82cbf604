#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "arbe/harness.hpp"

using namespace arbe;

namespace {

const char* kSmall = R"(
algorithm = "arbe_gap_bowb"
horizon = 600
seeds = [3, 4]
delta = 0.05
[environment]
kind = "stochastic_linear"
dims = [2, 3]
i_star = 1
gap = 0.2
action_count = 6
)";

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

}  // namespace

TEST_CASE("config: defaults and parsed values") {
    auto cfg = parse_config_text(kSmall);
    CHECK(cfg.algorithm == Algorithm::arbe_gap_bowb);
    CHECK(cfg.horizon == 600);
    CHECK(cfg.seeds == std::vector<std::uint64_t>{3, 4});
    CHECK(cfg.environment.dims == std::vector<std::size_t>{2, 3});
    CHECK(cfg.meta.c_k0 == 6.0);
    CHECK(cfg.meta.restart_union == RestartUnion::factor3);
}

TEST_CASE("config: unknown keys are rejected at every level") {
    CHECK_THROWS_AS(parse_config_text(std::string(kSmall) + "bogus = 1\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("horizon = 5\nsurprise = 2\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_text(std::string(kSmall) + "[constants]\nc_Q = 1.0\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("horizon = 5\n[environment]\nkind = \"stochastic_linear\"\nwidth = 3\n"),
                    ConfigError);
}

TEST_CASE("config: type and range errors") {
    CHECK_THROWS_AS(parse_config_text("horizon = \"long\"\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("horizon = 0\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("delta = 1.5\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("algorithm = \"ucb\"\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("[constants]\nc_k0 = 1.0\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("[environment]\ndims = [4, 2]\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("horizon = [\n"), ConfigError);
    CHECK_NOTHROW(parse_config_text("[constants]\nc_rho = 0.1\nc_k0 = 0.6\n"));
}

TEST_CASE("config: json round trip names the algorithm") {
    auto j = nlohmann::json::parse(config_to_json(parse_config_text(kSmall)));
    CHECK(j["algorithm"] == "arbe_gap_bowb");
    CHECK(j["horizon"] == 600);
}

TEST_CASE("csv: fixed header and seventeen significant digits") {
    CHECK(std::string(kCsvHeader) == "t,reward,regret,pseudo_regret,phase,active_s,candidate_policy,gap_estimate,event");
    CHECK(format_number(0.1) == "0.10000000000000001");
    CHECK(format_number(2.0) == "2");
    Row r;
    r.t = 7;
    r.reward = 0.5;
    r.regret = 1.25;
    r.phase = Phase::exploit;
    r.active_s = 2;
    r.candidate = 3;
    CHECK(csv_row(r) == "7,0.5,1.25,,exploit,2,3,,");
    r.pseudo_regret = 0.75;
    r.gap_estimate = 0.125;
    r.event = "gap_found:0.125";
    CHECK(csv_row(r) == "7,0.5,1.25,0.75,exploit,2,3,0.125,gap_found:0.125");
}

TEST_CASE("regret: trace oracle") {
    const std::vector<std::vector<double>> rewards{{0.5, 0.2}, {0.1, 0.9}, {0.7, 0.6}};
    auto r = track_regret(rewards, {0.5, 0.1, 0.6}, std::vector<double>{0.0, 0.2, 0.1});
    CHECK(r.regret == doctest::Approx((0.2 + 0.9 + 0.6) - 1.2));
    CHECK(*r.pseudo_regret == doctest::Approx(0.3));
    CHECK(!track_regret(rewards, {0.5, 0.1, 0.6}).pseudo_regret);
    CHECK_THROWS_AS(track_regret(rewards, {0.1}), DomainError);
}

TEST_CASE("regret: tracker matches the trace oracle on a live run") {
    auto cfg = parse_config_text(kSmall);
    auto env = build_environment(cfg, 3);
    auto setup = build_setup(cfg, *env);
    auto algo = build_algorithm(cfg, setup, *env, 3);
    auto env2 = build_environment(cfg, 3);
    RegretTracker tracker(*env);
    std::vector<std::vector<double>> traces;
    std::vector<double> played, gaps;
    const double best = env->mean_reward(env->policy_class()[env->best_policy()]);
    for (std::size_t t = 1; t <= 300; ++t) {
        auto round = env->next_round(t);
        CHECK_UNARY(round.r.values == env2->next_round(t).r.values);
        auto st = algo->step(t, round);
        tracker.record(round, st.reward, st.policy);
        traces.push_back(round.r.values);
        played.push_back(st.reward);
        gaps.push_back(best - env->mean_reward(env->policy_class()[st.policy]));
    }
    auto ref = track_regret(traces, played, gaps);
    CHECK(tracker.regret() == doctest::Approx(ref.regret).epsilon(1e-12));
    CHECK(*tracker.pseudo_regret() == doctest::Approx(*ref.pseudo_regret).epsilon(1e-12));
    CHECK(*tracker.pseudo_regret() >= 0.0);
}

TEST_CASE("outputs: csv bytes and summary are deterministic") {
    auto cfg = parse_config_text(kSmall);
    const auto base = std::filesystem::temp_directory_path() / "arbe_harness_test";
    std::filesystem::remove_all(base);
    write_outputs(run_experiment(cfg), cfg, (base / "a").string());
    write_outputs(run_experiment(cfg), cfg, (base / "b").string());
    for (const char* name : {"run_seed3.csv", "run_seed4.csv", "summary.json"})
        CHECK(slurp(base / "a" / name) == slurp(base / "b" / name));

    const std::string csv = slurp(base / "a" / "run_seed3.csv");
    CHECK(csv.rfind(std::string(kCsvHeader) + "\n", 0) == 0);
    CHECK(csv.find('\r') == std::string::npos);
    std::istringstream lines(csv);
    std::string line;
    std::getline(lines, line);
    std::size_t count = 0, last_t = 0;
    while (std::getline(lines, line)) {
        CHECK(std::count(line.begin(), line.end(), ',') == 8);
        last_t = std::stoul(line.substr(0, line.find(',')));
        ++count;
    }
    CHECK(count == 600);
    CHECK(last_t == 600);

    auto j = nlohmann::json::parse(slurp(base / "a" / "summary.json"));
    CHECK(j["run_count"] == 2);
    CHECK(j["algorithm"] == "arbe_gap_bowb");
    CHECK(j["runs"][0]["seed"] == 3);
    CHECK(j["runs"][0]["csv"] == "run_seed3.csv");
    CHECK(j["runs"][1]["horizon"] == 600);
    CHECK(j["runs"][0].contains("event_counts"));
    CHECK(j["runs"][0]["final_pseudo_regret"].is_number());
    std::filesystem::remove_all(base);
}

TEST_CASE("harness: every algorithm runs on a matching environment") {
    auto base = parse_config_text(kSmall);
    base.horizon = 200;
    base.seeds = {1};
    for (auto algo : {Algorithm::arbe, Algorithm::arbe_gap_bowb, Algorithm::geo_hedge_solo}) {
        auto cfg = base;
        cfg.algorithm = algo;
        auto rec = run_single(cfg, 1);
        CHECK(rec.rows.size() == 200);
        CHECK(std::isfinite(rec.final_regret));
    }
    auto cfg = base;
    cfg.learner = "exp4";
    cfg.environment.kind = "contextual_finite";
    cfg.environment.policy_count = 8;
    cfg.environment.action_count = 3;
    for (auto algo : {Algorithm::arbe, Algorithm::exp4_solo}) {
        cfg.algorithm = algo;
        auto rec = run_single(cfg, 2);
        CHECK(rec.rows.size() == 200);
    }
}
