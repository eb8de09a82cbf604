#include "arbe/envs.hpp"

#include <algorithm>
#include <cmath>

#include "arbe/learners.hpp"

namespace arbe {

double Environment::mean_reward(const Policy&) const { throw DomainError("environment has no mean rewards"); }
double Environment::gap() const { throw DomainError("environment has no gap"); }
PolicyId Environment::best_policy() const { throw DomainError("environment has no optimal policy"); }

Eigen::MatrixXd sample_unit_actions(std::size_t count, std::size_t d, Rng& rng) {
    Eigen::MatrixXd X(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(d));
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        double norm = 0.0;
        while (norm < 1e-8) {
            for (Eigen::Index k = 0; k < X.cols(); ++k) X(i, k) = rng.normal();
            norm = X.row(i).norm();
        }
        X.row(i) /= norm;
    }
    return X;
}

double point_gap(const Eigen::VectorXd& means) {
    if (means.size() < 2) throw DomainError("gap needs at least two policies");
    double best = -1e300, second = -1e300;
    for (double m : means) {
        if (m > best) {
            second = best;
            best = m;
        } else if (m > second) {
            second = m;
        }
    }
    return best - second;
}

LinearEnvironment::LinearEnvironment(Eigen::MatrixXd actions, double noise_sd, std::uint64_t seed)
    : actions_(std::move(actions)),
      policies_(point_policy_class(actions_.size(), geo_hedge_complexity(actions_.dim(), actions_.size()))),
      noise_sd_(noise_sd),
      rng_(seed, "env-noise") {
    if (!(noise_sd_ >= 0.0)) throw DomainError("noise_sd must be nonnegative");
}

RoundData LinearEnvironment::next_round(std::size_t t) {
    const Eigen::VectorXd mu = means_at(t);
    RoundData rd;
    rd.r.context = rd.x;
    rd.r.values.resize(static_cast<std::size_t>(mu.size()));
    for (Eigen::Index a = 0; a < mu.size(); ++a) {
        const double m = mu(a);
        const double band = std::min(m, 1.0 - m);
        double v = m;
        if (noise_sd_ > 0.0 && band > 0.0) {
            double e = noise_sd_ * rng_.normal();
            while (std::abs(e) > band) e = noise_sd_ * rng_.normal();
            v = m + e;
        }
        rd.r.values[static_cast<std::size_t>(a)] = std::clamp(v, 0.0, 1.0);
    }
    return rd;
}

namespace {

Eigen::VectorXd linear_means(const Eigen::MatrixXd& X, const Eigen::VectorXd& w) {
    if (w.size() != X.cols()) throw DomainError("reward vector dimension mismatch");
    Eigen::VectorXd m = (1.0 + (X * w).array()) / 2.0;
    if ((m.array() < -1e-12).any() || (m.array() > 1.0 + 1e-12).any())
        throw DomainError("|a^T w| must not exceed 1");
    return m.cwiseMax(0.0).cwiseMin(1.0);
}

}  // namespace

StochasticLinear::StochasticLinear(NestedInstance inst, std::uint64_t seed)
    : LinearEnvironment(inst.actions, inst.noise_sd, seed), inst_(std::move(inst)) {
    means_ = linear_means(inst_.actions, inst_.omega);
}

double StochasticLinear::mean_reward(const Policy& pi) const {
    if (pi.kind() == Policy::Kind::point) return means_(static_cast<Eigen::Index>(pi.target()));
    double s = 0.0;
    for (Eigen::Index a = 0; a < means_.size(); ++a) s += pi.prob(static_cast<std::size_t>(a), Context{}) * means_(a);
    return s;
}

double StochasticLinear::gap() const { return point_gap(means_); }

PolicyId StochasticLinear::best_policy() const {
    Eigen::Index k = 0;
    means_.maxCoeff(&k);
    return static_cast<PolicyId>(k);
}

AdversarialLinear::AdversarialLinear(Eigen::MatrixXd actions, AdversarySpec spec, double noise_sd, std::uint64_t seed)
    : LinearEnvironment(std::move(actions), noise_sd, seed), spec_(std::move(spec)), block_rng_(seed, "adversary") {
    if (spec_.omega_a.size() != static_cast<Eigen::Index>(actions_.dim()))
        throw DomainError("adversary vector dimension mismatch");
    if (spec_.kind == AdversarySpec::Kind::phase_switching && spec_.omega_b.size() != spec_.omega_a.size())
        throw DomainError("adversary vector dimension mismatch");
    if (spec_.period == 0) throw DomainError("adversary period must be positive");
}

Eigen::VectorXd AdversarialLinear::omega_at(std::size_t t) const {
    switch (spec_.kind) {
    case AdversarySpec::Kind::constant: return spec_.omega_a;
    case AdversarySpec::Kind::phase_switching: return t <= spec_.t_switch ? spec_.omega_a : spec_.omega_b;
    case AdversarySpec::Kind::sign_flipping: {
        const bool flip = ((t - 1) / spec_.period) % 2 == 1;
        return flip ? Eigen::VectorXd(-spec_.omega_a) : spec_.omega_a;
    }
    case AdversarySpec::Kind::oblivious: {
        const std::size_t block = (t - 1) / spec_.period;
        while (blocks_.size() <= block) {
            Eigen::VectorXd z = sample_unit_actions(1, actions_.dim(), block_rng_).row(0).transpose();
            blocks_.push_back(spec_.perturbation * block_rng_.uniform() * z);
        }
        return spec_.omega_a + blocks_[block];
    }
    }
    return spec_.omega_a;
}

Eigen::VectorXd AdversarialLinear::means_at(std::size_t t) const {
    const Eigen::VectorXd w = omega_at(t);
    Eigen::VectorXd m = (1.0 + (actions_.matrix() * w).array()) / 2.0;
    return m.cwiseMax(0.0).cwiseMin(1.0);
}

SwitchingEnvironment::SwitchingEnvironment(NestedInstance inst, std::size_t t_switch, PostSwitch post,
                                           std::uint64_t seed)
    : LinearEnvironment(inst.actions, inst.noise_sd, seed), t_switch_(t_switch) {
    pre_ = linear_means(inst.actions, inst.omega);
    if (post.kind == PostSwitch::Kind::drop_action) {
        if (post.action >= actions_.size()) throw DomainError("drop target out of range");
        post_ = pre_;
        post_(static_cast<Eigen::Index>(post.action)) =
            std::max(0.0, post_(static_cast<Eigen::Index>(post.action)) - post.amount);
    } else {
        post_ = linear_means(inst.actions, post.omega);
    }
}

ContextualFinite::ContextualFinite(std::size_t policy_count, std::size_t action_count, std::size_t context_count,
                                   std::uint64_t seed)
    : contexts_(context_count), rng_(seed, "env-noise") {
    if (action_count < 2) throw DomainError("contextual environment needs at least two actions");
    if (policy_count < 2) throw DomainError("contextual environment needs at least two policies");
    if (context_count < 1) throw DomainError("contextual environment needs a context");
    actions_ = ActionSet(Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(action_count),
                                                   static_cast<Eigen::Index>(action_count)));
    Rng gen(seed, "contextual-instance");
    table_.assign(context_count, std::vector<double>(action_count));
    for (auto& row : table_)
        for (double& v : row) v = 0.1 + 0.8 * gen.uniform();

    std::vector<Policy> ps;
    std::vector<std::vector<double>> argmax_rows;
    for (const auto& row : table_) {
        std::vector<double> r(action_count, 0.0);
        r[static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin())] = 1.0;
        argmax_rows.push_back(std::move(r));
    }
    ps.push_back(Policy::table(0, argmax_rows));
    while (ps.size() < policy_count) {
        std::vector<std::vector<double>> rows;
        for (std::size_t x = 0; x < context_count; ++x) {
            std::vector<double> r(action_count, 0.0);
            r[static_cast<std::size_t>(gen.next() % action_count)] = 1.0;
            rows.push_back(std::move(r));
        }
        if (rows == argmax_rows) continue;
        ps.push_back(Policy::table(ps.size(), std::move(rows)));
    }
    policies_ = PolicyClass(std::move(ps), exp4_complexity(action_count, policy_count));
    if (!(gap() > 0.0)) throw DomainError("contextual instance has no unique optimal policy");
}

RoundData ContextualFinite::next_round(std::size_t) {
    RoundData rd;
    rd.x.token = static_cast<std::size_t>(rng_.next() % contexts_);
    rd.r.context = rd.x;
    const auto& row = table_[rd.x.token];
    rd.r.values.resize(row.size());
    for (std::size_t a = 0; a < row.size(); ++a) rd.r.values[a] = rng_.bernoulli(row[a]) ? 1.0 : 0.0;
    return rd;
}

double ContextualFinite::mean_reward(const Policy& pi) const {
    double s = 0.0;
    for (std::size_t x = 0; x < contexts_; ++x)
        for (std::size_t a = 0; a < table_[x].size(); ++a) s += pi.prob(a, Context{x}) * table_[x][a];
    return s / static_cast<double>(contexts_);
}

double ContextualFinite::gap() const {
    Eigen::VectorXd m(static_cast<Eigen::Index>(policies_.size()));
    for (std::size_t i = 0; i < policies_.size(); ++i) m(static_cast<Eigen::Index>(i)) = mean_reward(policies_[i]);
    return point_gap(m);
}

PolicyId ContextualFinite::best_policy() const {
    std::size_t best = 0;
    for (std::size_t i = 1; i < policies_.size(); ++i)
        if (mean_reward(policies_[i]) > mean_reward(policies_[best])) best = i;
    return policies_[best].id();
}

NestedInstance make_nested_instance(std::vector<std::size_t> dims, std::size_t i_star, double target_gap,
                                    std::size_t action_count, double noise_sd, std::uint64_t seed) {
    if (dims.empty()) throw DomainError("need at least one dimension");
    for (std::size_t i = 1; i < dims.size(); ++i)
        if (dims[i] <= dims[i - 1]) throw DomainError("dims must be strictly increasing");
    if (i_star < 1 || i_star > dims.size()) throw DomainError("i_star out of range");
    if (!(target_gap > 0.0 && target_gap <= 0.5)) throw DomainError("target gap must lie in (0, 0.5]");
    const std::size_t dM = dims.back();
    const std::size_t ds = dims[i_star - 1];
    if (action_count < dM) throw DomainError("need at least d_M actions to span");

    Rng rng(seed, "nested-instance");
    for (int attempt = 0; attempt < 200; ++attempt) {
        Eigen::MatrixXd X = sample_unit_actions(action_count, dM, rng);
        {
            Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
            bool ok = static_cast<std::size_t>(qr.rank()) == dM;
            for (std::size_t d : dims) {
                Eigen::ColPivHouseholderQR<Eigen::MatrixXd> q2(X.leftCols(static_cast<Eigen::Index>(d)));
                ok = ok && static_cast<std::size_t>(q2.rank()) == d;
            }
            if (!ok) continue;
        }
        Eigen::VectorXd w0 = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dM));
        for (std::size_t k = 0; k < ds; ++k) w0(static_cast<Eigen::Index>(k)) = rng.normal();
        w0 *= 0.5 / w0.norm();
        Eigen::VectorXd s = X * w0;
        Eigen::Index top = 0;
        s.maxCoeff(&top);
        Eigen::VectorXd u = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dM));
        u.head(static_cast<Eigen::Index>(ds)) = X.row(top).head(static_cast<Eigen::Index>(ds)).transpose();
        if (u.norm() < 1e-6) continue;
        u /= u.norm();

        // gap of `top` over the rest along w0 + lambda u, in mean-reward units
        auto gap_at = [&](double lambda) {
            const Eigen::VectorXd v = X * (w0 + lambda * u);
            double g = 1e300;
            for (Eigen::Index a = 0; a < v.size(); ++a)
                if (a != top) g = std::min(g, (v(top) - v(a)) / 2.0);
            return g;
        };
        auto feasible = [&](double lambda) { return (X * (w0 + lambda * u)).cwiseAbs().maxCoeff() <= 1.0; };

        const int steps = 4000;
        const double lo = -1.0, hi = 1.0;
        double prev = lo;
        double prev_gap = gap_at(lo);
        std::optional<double> found;
        for (int k = 1; k <= steps && !found; ++k) {
            const double lam = lo + (hi - lo) * k / steps;
            const double g = gap_at(lam);
            if ((prev_gap - target_gap) * (g - target_gap) <= 0.0 && feasible(prev) && feasible(lam)) {
                double a = prev, b = lam, ga = prev_gap;
                for (int it = 0; it < 200; ++it) {
                    const double mid = 0.5 * (a + b);
                    const double gm = gap_at(mid);
                    if ((ga - target_gap) * (gm - target_gap) <= 0.0) {
                        b = mid;
                    } else {
                        a = mid;
                        ga = gm;
                    }
                }
                found = 0.5 * (a + b);
            }
            prev = lam;
            prev_gap = g;
        }
        if (!found) continue;
        const Eigen::VectorXd w = w0 + *found * u;
        if (std::abs(gap_at(*found) - target_gap) > 1e-9 || !feasible(*found)) continue;

        NestedInstance inst;
        inst.dims = std::move(dims);
        inst.i_star = i_star;
        inst.omega = w;
        inst.noise_sd = noise_sd;
        inst.action_count = action_count;
        inst.actions = X;
        return inst;
    }
    throw DomainError("could not construct an instance with the requested gap");
}

std::unique_ptr<StochasticLinear> make_stochastic_linear(std::vector<std::size_t> dims, std::size_t i_star,
                                                         double target_gap, std::size_t action_count, double noise_sd,
                                                         std::uint64_t seed) {
    return std::make_unique<StochasticLinear>(
        make_nested_instance(std::move(dims), i_star, target_gap, action_count, noise_sd, seed), seed);
}

std::unique_ptr<AdversarialLinear> make_adversarial_linear(std::vector<std::size_t> dims, std::size_t action_count,
                                                           AdversarySpec script, std::uint64_t seed, double noise_sd) {
    if (dims.empty()) throw DomainError("need at least one dimension");
    Rng rng(seed, "adversarial-instance");
    Eigen::MatrixXd X = sample_unit_actions(action_count, dims.back(), rng);
    return std::make_unique<AdversarialLinear>(std::move(X), std::move(script), noise_sd, seed);
}

std::unique_ptr<SwitchingEnvironment> make_switching_bowb(const NestedInstance& inst, std::size_t t_switch,
                                                          PostSwitch post, std::uint64_t seed) {
    return std::make_unique<SwitchingEnvironment>(inst, t_switch, std::move(post), seed);
}

std::unique_ptr<ContextualFinite> make_contextual_finite(std::size_t policy_count, std::size_t action_count,
                                                         std::size_t context_count, std::uint64_t seed) {
    return std::make_unique<ContextualFinite>(policy_count, action_count, context_count, seed);
}

}  // namespace arbe
