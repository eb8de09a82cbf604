#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "arbe/concentration.hpp"
#include "arbe/design.hpp"
#include "arbe/harness.hpp"

using namespace arbe;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

ExperimentConfig config(const std::string& name) { return load_config((fs::path(ARBE_ACCEPTANCE_CONFIGS) / name).string()); }

RunOptions quiet() {
    RunOptions o;
    o.keep_rows = false;
    return o;
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// criterion 1: importance-weighted estimators of omega and of cumulative rewards
Outcome c1() {
    Rng rng(101, "acceptance");
    const Eigen::MatrixXd X = sample_unit_actions(32, 4, rng);
    Eigen::VectorXd omega(4);
    omega << 0.3, -0.2, 0.25, 0.1;
    const double rho = 0.4;
    GeoHedgeParams gp;
    gp.rho = rho;
    GeometricHedge h(ActionSet(X), {}, {}, gp);
    for (int t = 0; t < 50; ++t) {
        auto d = h.draw(Context{}, rng);
        h.update(d.local, X.row(d.local).dot(omega), rng.bernoulli(rho));
    }
    h.propose(Context{});
    const std::vector<double> p(h.p().data(), h.p().data() + h.p().size());
    const int n = 100000;
    Eigen::VectorXd s = Eigen::VectorXd::Zero(4), s2 = Eigen::VectorXd::Zero(4);
    for (int k = 0; k < n; ++k) {
        const std::size_t a = rng.categorical(p);
        const double r = X.row(a).dot(omega) + 0.1 * (2.0 * rng.uniform() - 1.0);
        const Eigen::VectorXd e = h.estimate(a, r, rng.bernoulli(rho));
        s += e;
        s2 += e.cwiseProduct(e);
    }
    double worst = 0.0;
    for (int i = 0; i < 4; ++i) {
        const double m = s(i) / n, se = std::sqrt((s2(i) / n - m * m) / n);
        worst = std::max(worst, std::abs(m - omega(i)) / se);
    }

    // cumulative reward estimates of every active learner in a balanced pool
    auto cfg = config("elimination_safety.toml");
    auto env = build_environment(cfg, 1);
    auto setup = build_setup(cfg, *env);
    Arbe arbe(setup, cfg.meta, 1, 0);
    MetaRngs rngs(7);
    const double mu = 0.6;
    std::vector<double> inc_sum(setup.M() + 1), inc_sq(setup.M() + 1);
    for (int t = 1; t <= n; ++t) {
        RoundData round;
        round.r.values.assign(setup.actions.size(), rng.bernoulli(mu) ? 1.0 : 0.0);
        auto out = arbe.step(t, round, rngs);
        if (!out.events.empty()) return {false, "unexpected elimination under action-independent rewards"};
        for (const auto& slot : arbe.pool().slots()) {
            const double inc = slot.index == out.chosen ? out.reward / slot.rho : 0.0;
            inc_sum[slot.index] += inc;
            inc_sq[slot.index] += inc * inc;
        }
    }
    double worst_crew = 0.0;
    for (std::size_t i = 1; i <= setup.M(); ++i) {
        const auto& slot = arbe.pool().slot(i);
        const double m = inc_sum[i] / n, se = std::sqrt((inc_sq[i] / n - m * m) / n);
        if (std::abs(slot.crew / n - m) > 1e-9) return {false, "pool crew differs from the replayed increments"};
        worst_crew = std::max(worst_crew, std::abs(m - mu) / se);
    }
    return {worst <= 3.0 && worst_crew <= 3.0,
            fmt("omega-hat max |z| = %.2f, crew max |z| = %.2f over 1e5 resamples", worst, worst_crew)};
}

// criterion 2: time-uniform boundaries over 1000 bounded martingales
Outcome c2() {
    const int paths = 1000, horizon = 10000;
    BoundaryParams bp{0.05, 1.0, 0.0, 1.0};
    const double q = 0.1;
    std::vector<double> hoef(horizon + 1), bern(horizon + 1);
    for (int t = 1; t <= horizon; ++t) {
        hoef[t] = hoeffding_radius(t, bp);
        bern[t] = bernstein_radius(t * q * (1.0 - q), 1.0, bp);
    }
    Rng rng(202, "acceptance");
    int h_cross = 0, b_cross = 0;
    for (int p = 0; p < paths; ++p) {
        double sh = 0.0, sb = 0.0;
        bool hc = false, bc = false;
        for (int t = 1; t <= horizon && !(hc && bc); ++t) {
            sh += rng.bernoulli(0.5) ? 1.0 : -1.0;
            sb += (rng.bernoulli(q) ? 1.0 : 0.0) - q;
            hc = hc || sh >= hoef[t];
            bc = bc || sb >= bern[t];
        }
        h_cross += hc;
        b_cross += bc;
    }
    const double hf = double(h_cross) / paths, bf = double(b_cross) / paths;
    return {hf <= 0.07 && bf <= 0.07, fmt("Hoeffding crossed %.1f%%, Bernstein crossed %.1f%%", 100 * hf, 100 * bf)};
}

double max_leverage_of(const Eigen::MatrixXd& X, const Eigen::VectorXd& w) {
    const Eigen::MatrixXd M = X.transpose() * w.asDiagonal() * X;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(M);
    if (!lu.isInvertible()) return INFINITY;
    const Eigen::MatrixXd Minv = lu.inverse();
    double top = 0.0;
    for (Eigen::Index i = 0; i < X.rows(); ++i) top = std::max(top, X.row(i).dot(Minv * X.row(i).transpose()));
    return top;
}

double grid_oracle(const Eigen::MatrixXd& X, int steps) {
    const auto n = X.rows();
    double best = INFINITY;
    Eigen::VectorXd w(n);
    std::function<void(Eigen::Index, int)> rec = [&](Eigen::Index i, int left) {
        if (i == n - 1) {
            w(i) = left / double(steps);
            best = std::min(best, max_leverage_of(X, w));
            return;
        }
        for (int k = 0; k <= left; ++k) {
            w(i) = k / double(steps);
            rec(i + 1, left - k);
        }
    };
    rec(0, steps);
    return best;
}

// criterion 3: design quality
Outcome c3() {
    Rng rng(303, "acceptance");
    double worst_ratio = 0.0, min_eig = INFINITY;
    for (int rep = 0; rep < 20; ++rep) {
        const std::size_t d = 2 + rng.next() % 7;
        const std::size_t n = d + rng.next() % (65 - d);
        const Eigen::MatrixXd X = sample_unit_actions(n, d, rng);
        auto r = optimal_design(X, 0.05);
        worst_ratio = std::max(worst_ratio, r.max_leverage / double(d));
        min_eig = std::min(min_eig, design_min_eigenvalue(r));
    }
    double worst_oracle = 0.0;
    for (int rep = 0; rep < 10; ++rep) {
        const std::size_t d = 2 + rep % 2;
        const std::size_t n = std::min<std::size_t>(5, d + 1 + rep % 3);
        const Eigen::MatrixXd X = sample_unit_actions(n, d, rng);
        auto r = optimal_design(X, 0.05);
        worst_oracle = std::max(worst_oracle, r.max_leverage / grid_oracle(X, n == 5 ? 24 : 40));
    }
    return {worst_ratio <= 1.05 + 1e-12 && min_eig > 0.0 && worst_oracle <= 1.05,
            fmt("max leverage / d = %.4f, min eigenvalue %.3g, design / grid oracle = %.4f", worst_ratio, min_eig,
                worst_oracle)};
}

struct SoloTrace {
    std::vector<double> regret_at;
    double worst_identity = 0.0;
};

SoloTrace solo_run(const ExperimentConfig& cfg, std::uint64_t seed, const std::vector<std::size_t>& grid) {
    auto env = build_environment(cfg, seed);
    auto setup = build_setup(cfg, *env);
    auto algo = build_algorithm(cfg, setup, *env, seed);
    auto* solo = dynamic_cast<SoloRunner*>(algo.get());
    auto* hedge = solo ? dynamic_cast<GeometricHedge*>(&solo->learner()) : nullptr;
    if (!hedge) throw std::logic_error("geo_hedge_solo did not build a GeometricHedge");
    SoloTrace out;
    out.regret_at.assign(grid.size(), 0.0);
    const double d = double(hedge->actions().dim());
    RunOptions o = quiet();
    o.observer = [&](const Row& row, const StepResult&) {
        out.worst_identity = std::max(out.worst_identity, std::abs(hedge->p().dot(hedge->leverage()) - d));
        for (std::size_t k = 0; k < grid.size(); ++k)
            if (row.t == grid[k]) out.regret_at[k] = row.regret;
    };
    run_with(cfg, *env, *algo, seed, o);
    return out;
}

// criterion 4: leverage identity every round and regret growth across the doubling grid
Outcome c4() {
    auto cfg = config("geo_adversarial.toml");
    const std::vector<std::size_t> grid{2000, 4000, 8000, 16000, 32000, 64000};
    std::vector<double> sum(grid.size(), 0.0);
    double worst = 0.0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        auto tr = solo_run(cfg, seed, grid);
        worst = std::max(worst, tr.worst_identity);
        for (std::size_t k = 0; k < grid.size(); ++k) sum[k] += tr.regret_at[k];
    }
    int good = 0;
    std::string ratios;
    for (std::size_t k = 1; k < grid.size(); ++k) {
        const double r = sum[k] / sum[k - 1];
        good += r <= 1.8;
        ratios += fmt(" %.2f", r);
    }
    return {worst <= 1e-6 && good >= 4,
            fmt("identity max error %.2g; Reg(2T)/Reg(T) for 2T in 4k..64k:%s", worst, ratios.c_str())};
}

// criterion 5: regret inflation from a keep probability of 1/4
Outcome c5() {
    auto cfg = config("geo_adversarial.toml");
    auto low = cfg;
    low.solo_rho = 0.25;
    const std::vector<std::size_t> grid{cfg.horizon};
    std::vector<double> ratios;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const double full = solo_run(cfg, seed, grid).regret_at[0];
        const double part = solo_run(low, seed, grid).regret_at[0];
        ratios.push_back(part / full);
    }
    const double m = median(ratios);
    return {m <= 2.5, fmt("median Reg(rho=1/4)/Reg(rho=1) = %.3f over 10 seeds", m)};
}

// criterion 6: no elimination of a learner that contains the optimum
Outcome c6() {
    auto cfg = config("elimination_safety.toml");
    const std::size_t i_star = cfg.environment.i_star;
    int bad = 0, total = 0;
    for (std::uint64_t seed = 1; seed <= 50; ++seed) {
        auto rec = run_single(cfg, seed, quiet());
        bool hit = false;
        for (const auto& ev : rec.events)
            if (ev.kind == Event::Kind::elimination) {
                ++total;
                hit = hit || ev.index >= i_star;
            }
        bad += hit;
    }
    return {bad <= 3, fmt("%d of 50 runs eliminated an index >= i_star (%d eliminations in total)", bad, total)};
}

// criterion 7: a misspecified first learner is eliminated
Outcome c7() {
    auto cfg = config("deceptive_learner.toml");
    {
        auto env = build_environment(cfg, 1);
        auto* lin = dynamic_cast<StochasticLinear*>(env.get());
        const auto& inst = lin->instance();
        const Eigen::Index d1 = static_cast<Eigen::Index>(inst.dims.front());
        const Eigen::VectorXd proj = inst.actions.leftCols(d1) * inst.omega.head(d1);
        Eigen::Index k = 0;
        proj.maxCoeff(&k);
        const double trail = lin->means().maxCoeff() - lin->means()(k);
        if (std::abs(trail - 0.3) > 1e-5) return {false, fmt("instance trails by %.6f instead of 0.3", trail)};
    }
    int ok = 0;
    for (std::uint64_t seed = 1; seed <= 50; ++seed) {
        auto rec = run_single(cfg, seed, quiet());
        for (const auto& ev : rec.events)
            if (ev.kind == Event::Kind::elimination && ev.t < 20000) {
                ++ok;
                break;
            }
    }
    return {ok >= 45, fmt("learner 1 eliminated before 20k in %d of 50 runs", ok)};
}

struct GapBatch {
    std::vector<RunRecord> records;
    std::vector<double> window;
};

GapBatch gap_batch(const ExperimentConfig& cfg, int seeds) {
    GapBatch b;
    for (std::uint64_t seed = 1; seed <= std::uint64_t(seeds); ++seed) {
        double half = 0.0;
        RunOptions o = quiet();
        o.observer = [&](const Row& r, const StepResult&) {
            if (r.t == cfg.horizon / 2) half = r.pseudo_regret.value_or(0.0);
        };
        b.records.push_back(run_single(cfg, seed, o));
        b.window.push_back(b.records.back().final_pseudo_regret.value_or(0.0) - half);
    }
    return b;
}

bool returned(const RunRecord& r) {
    return std::any_of(r.events.begin(), r.events.end(),
                       [](const Event& e) { return e.kind == Event::Kind::exploit_return; });
}

// criterion 8: candidate and gap sandwich among runs that reach Exploit
Outcome c8(const GapBatch& b) {
    int reach = 0, good = 0;
    for (const auto& r : b.records) {
        if (!r.t_gap) continue;
        ++reach;
        const double g = *r.gap_hat, D = *r.true_gap;
        good += *r.gap_candidate == *r.optimal_policy && g <= D && D <= 2.0 * g;
    }
    const double frac = reach ? double(good) / reach : 0.0;
    return {reach > 0 && frac >= 0.95, fmt("%d of 50 reached Exploit; sandwich held in %d (%.0f%%)", reach, good,
                                           100 * frac)};
}

// criterion 9: window pseudo-regret of the pipeline against plain Arbe
Outcome c9(const GapBatch& b) {
    auto cfg = config("gap_plain_arbe.toml");
    auto plain = gap_batch(cfg, 50);
    const double full = median(b.window), base = median(plain.window);
    return {full <= 0.3 * base,
            fmt("median window pseudo-regret %.1f vs plain Arbe %.1f (ratio %.3f)", full, base, full / base)};
}

// criterion 10: no adversarial verdict on stochastic runs
Outcome c10(const GapBatch& b) {
    int verdicts = 0, reach = 0;
    for (const auto& r : b.records) {
        if (r.t_gap) ++reach;
        verdicts += returned(r);
    }
    const double frac = reach ? double(verdicts) / reach : 1.0;
    return {reach > 0 && frac <= 0.05, fmt("%d adversarial verdicts across %d Exploit runs", verdicts, reach)};
}

// criterion 11: the candidate's mean drops by 3 gap_hat right after the gap is found
Outcome c11() {
    auto cfg = config("switching_detect.toml");
    int detected = 0, fallback = 0;
    std::string worst;
    double worst_frac = 0.0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        auto first = run_single(cfg, seed, quiet());
        if (!first.t_gap) continue;
        auto sw = cfg;
        sw.environment.kind = "switching";
        sw.environment.post = "drop_action";
        sw.environment.t_switch = *first.t_gap + 1;
        sw.environment.drop_action = *first.gap_candidate;
        sw.environment.drop_amount = 3.0 * *first.gap_hat;
        auto rec = run_single(sw, seed, quiet());
        const double limit = 50.0 / (*first.gap_hat * *first.gap_hat);
        for (const auto& ev : rec.events)
            if (ev.kind == Event::Kind::exploit_return) {
                const double lag = double(ev.t) - double(sw.environment.t_switch);
                if (lag >= 0.0 && lag <= limit) {
                    ++detected;
                    worst_frac = std::max(worst_frac, lag / limit);
                }
                break;
            }
        fallback += std::find(rec.phases.begin(), rec.phases.end(), Phase::fallback) != rec.phases.end();
    }
    return {detected >= 18 && fallback >= detected,
            fmt("detected within 50/gap^2 in %d of 20 runs (slowest at %.0f%% of the limit); %d reached fallback",
                detected, 100 * worst_frac, fallback)};
}

// criterion 12: consecutive candidate switches are at least a factor three apart
Outcome c12(const GapBatch& b) {
    auto cfg = config("restart_geometry.toml");
    std::vector<RunRecord> runs = b.records;
    for (std::uint64_t seed = 1; seed <= 200; ++seed) runs.push_back(run_single(cfg, seed, quiet()));
    int eligible = 0, violations = 0, pairs = 0;
    for (const auto& r : runs) {
        std::vector<std::size_t> ts;
        for (const auto& ev : r.events)
            if (ev.kind == Event::Kind::policy_switch) ts.push_back(ev.t);
        if (ts.size() < 2) continue;
        ++eligible;
        for (std::size_t k = 1; k < ts.size(); ++k) {
            ++pairs;
            violations += ts[k] < 3 * ts[k - 1];
        }
    }
    return {eligible > 0 && violations == 0,
            fmt("%d runs with two or more switches, %d consecutive pairs, %d violations", eligible, pairs, violations)};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

// criterion 13: repeated invocations write identical bytes
Outcome c13() {
    const fs::path base = fs::temp_directory_path() / "arbe_acceptance_determinism";
    fs::remove_all(base);
    const std::string cfg = (fs::path(ARBE_ACCEPTANCE_CONFIGS) / "gap_pipeline.toml").string();
    int same = 0, files = 0;
    for (const char* seed : {"3", "4"}) {
        const fs::path out = base / seed / "out";
        const std::string cmd = std::string("\"") + ARBE_CLI_PATH + "\" run --config \"" + cfg + "\" --seed " + seed +
                                " --horizon 20000 --out \"" + out.string() + "\" > /dev/null";
        if (std::system(cmd.c_str()) != 0) return {false, "cli run failed: " + cmd};
        fs::rename(out, base / seed / "first");
        if (std::system(cmd.c_str()) != 0) return {false, "cli run failed: " + cmd};
        for (const auto& entry : fs::directory_iterator(base / seed / "first")) {
            ++files;
            const auto other = out / entry.path().filename();
            same += fs::exists(other) && slurp(entry.path()) == slurp(other);
        }
    }
    fs::remove_all(base);
    return {files > 0 && same == files, fmt("%d of %d output files byte-identical across repeated runs", same, files)};
}

}  // namespace

int main() {
    int failed = 0;
    auto report = [&](int id, const std::function<Outcome()>& f) {
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = f();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::printf("%s criterion %d: %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", id, o.detail.c_str(), secs);
        std::fflush(stdout);
        failed += !o.pass;
    };
    report(1, c1);
    report(2, c2);
    report(3, c3);
    report(4, c4);
    report(5, c5);
    report(6, c6);
    report(7, c7);
    GapBatch batch;
    try {
        batch = gap_batch(config("gap_pipeline.toml"), 50);
    } catch (const std::exception& e) {
        std::printf("gap pipeline batch failed: %s\n", e.what());
    }
    report(8, [&] { return c8(batch); });
    report(9, [&] { return c9(batch); });
    report(10, [&] { return c10(batch); });
    report(11, c11);
    report(12, [&] { return c12(batch); });
    report(13, c13);
    return failed == 0 ? 0 : 1;
}
