#include "arbe/meta.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace arbe {

std::vector<double> balancing_probabilities(const std::vector<double>& complexities) {
    if (complexities.empty()) throw DomainError("no active learners");
    std::vector<double> rho(complexities.size());
    double z = 0.0;
    for (std::size_t i = 0; i < rho.size(); ++i) {
        if (!(complexities[i] >= 1.0)) throw DomainError("complexities must be at least 1");
        z += rho[i] = 1.0 / (complexities[i] * complexities[i]);
    }
    for (double& r : rho) r /= z;
    return rho;
}

double elimination_threshold(std::size_t t0, std::size_t t, double rho_i, double rho_j, double R_i,
                             const BoundaryParams& p, double conc_scale, double balance_scale) {
    const double span = static_cast<double>(t - t0);
    const double conc = conc_i(t0, t, rho_i, p) + conc_i(t0, t, rho_j, p);
    const double balance = R_i * std::sqrt(span / rho_i * std::log(static_cast<double>(t) / p.delta));
    return conc_scale * conc + balance_scale * balance;
}

bool elimination_test(double crew_i, double crew_j, std::size_t t0, std::size_t t, double rho_i, double rho_j,
                      double R_i, const BoundaryParams& p, double conc_scale, double balance_scale) {
    return crew_j > crew_i + elimination_threshold(t0, t, rho_i, rho_j, R_i, p, conc_scale, balance_scale);
}

double gap_estimate(double crew_M, double crew_M1, std::size_t t0, std::size_t t, double W) {
    if (t <= t0) throw DomainError("gap estimate needs t > t0");
    return (crew_M - crew_M1) / static_cast<double>(t - t0) - W;
}

bool gap_test(double gap_hat, double W, double R_M) { return 2.0 * W <= gap_hat && gap_hat <= R_M * R_M; }

std::optional<PolicyId> candidate_policy_test(const std::map<PolicyId, std::size_t>& counts, std::size_t t,
                                              PolicyId current) {
    if (t < 9) return std::nullopt;
    for (const auto& [id, n] : counts)
        if (id != current && 4 * n > 3 * t) return id;
    return std::nullopt;
}

double exploit_k0(double gap_hat, double R, double delta, double c_k0) {
    if (!(gap_hat > 0.0)) throw DomainError("gap estimate must be positive");
    return c_k0 * R * R / (gap_hat * gap_hat) * std::log(2.0 * c_k0 * R / (gap_hat * delta));
}

ExploitEpoch exploit_epoch_init(std::size_t e, double gap_hat, double R, double delta, double c_k0, double c_rho) {
    if (!(gap_hat > 0.0)) throw DomainError("gap estimate must be positive");
    const double k0 = exploit_k0(gap_hat, R, delta, c_k0);
    ExploitEpoch ep;
    ep.k = std::max<std::size_t>(2, static_cast<std::size_t>(std::ceil(std::ldexp(k0, static_cast<int>(e)))));
    const double ee = static_cast<double>(e + 1);
    ep.delta = delta / (ee * ee);
    const double k = static_cast<double>(ep.k);
    ep.rho = std::min(0.5, c_rho * R * R / (k * gap_hat * gap_hat) * std::log(k / ep.delta));
    if (!(ep.rho > 0.0)) throw DomainError("exploit probability is not positive");
    return ep;
}

Verdict exploit_tests(double crew0, double crew1, std::size_t t_e, std::size_t t, double gap_hat, double V) {
    if (t <= t_e) throw DomainError("exploit tests need t > t_e");
    const double diff = (crew0 - crew1) / static_cast<double>(t - t_e);
    if (diff < gap_hat - V) return Verdict::adversarial_low;
    if (diff > 4.0 * gap_hat + V) return Verdict::adversarial_high;
    return Verdict::proceed;
}

std::optional<double> ModelSelectionSetup::override_for(LearnerIndex i) const {
    if (i - 1 < extended_complexity.size()) return extended_complexity[i - 1];
    return std::nullopt;
}

namespace {

std::string number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

std::string Event::describe() const {
    switch (kind) {
    case Kind::elimination: return "elimination:" + std::to_string(index);
    case Kind::restart: return "restart:" + reason + ":" + std::to_string(index);
    case Kind::gap_found: return "gap_found:" + number(value);
    case Kind::exploit_return: return "exploit_return:" + reason;
    case Kind::policy_switch: return "policy_switch:" + std::to_string(index);
    }
    return "";
}

std::string phase_name(Phase p) {
    switch (p) {
    case Phase::gap_estimation: return "gap_estimation";
    case Phase::exploit: return "exploit";
    case Phase::fallback: return "fallback";
    case Phase::arbe: return "arbe";
    case Phase::solo: return "solo";
    }
    return "";
}

MetaRngs::MetaRngs(std::uint64_t seed) : select(seed, "select"), draw(seed, "draw"), exploit(seed, "exploit") {}

SlotPool::SlotPool(std::vector<BaseLearnerSlot> slots) : slots_(std::move(slots)) {
    if (slots_.empty()) throw DomainError("no active learners");
    for (std::size_t k = 1; k < slots_.size(); ++k)
        if (slots_[k].index <= slots_[k - 1].index) throw DomainError("slots must be ordered by index");
    for (const auto& s : slots_) rho_.push_back(s.rho);
    proposals_.assign(slots_.back().index + 1, std::nullopt);
    draws_.resize(slots_.size());
}

BaseLearnerSlot& SlotPool::slot(LearnerIndex i) {
    for (auto& s : slots_)
        if (s.index == i) return s;
    throw NotFoundError("learner " + std::to_string(i) + " not active");
}

const BaseLearnerSlot& SlotPool::slot(LearnerIndex i) const {
    for (const auto& s : slots_)
        if (s.index == i) return s;
    throw NotFoundError("learner " + std::to_string(i) + " not active");
}

StepResult SlotPool::play(const RoundData& round, MetaRngs& rngs, std::optional<LearnerIndex> forced) {
    std::size_t b = 0;
    if (forced) {
        while (b < slots_.size() && slots_[b].index != *forced) ++b;
        if (b == slots_.size()) throw NotFoundError("forced learner not active");
    } else {
        b = rngs.select.categorical(rho_);
    }
    for (std::size_t k = 0; k < slots_.size(); ++k) {
        draws_[k] = slots_[k].learner->draw(round.x, rngs.draw);
        proposals_[slots_[k].index] = draws_[k].ref;
    }
    StepResult out;
    Resolution res = resolve_linked_action(proposals_, slots_[b].index);
    out.action = res.action;
    out.chain = std::move(res.chain);
    out.chosen = slots_[b].index;
    std::size_t last = 0;
    while (slots_[last].index != out.chain.back()) ++last;
    out.policy = slots_[last].extended_class.at(draws_[last].policy).id();
    out.reward = round.observe(out.action);

    for (std::size_t k = 0; k < slots_.size(); ++k) {
        const bool sel = k == b;
        slots_[k].learner->observe(sel ? out.reward / slots_[k].rho : 0.0, sel);
    }
    slots_[b].crew += out.reward / slots_[b].rho;
    ++slots_[b].selection_count[out.policy];
    return out;
}

namespace {

std::vector<BaseLearnerSlot> build_slots(const ModelSelectionSetup& setup,
                                         std::vector<std::pair<LearnerSpec, ExtendedPolicyClass>> items,
                                         LearnerIndex first, double delta) {
    std::vector<double> R;
    for (const auto& it : items) R.push_back(it.second.complexity);
    const std::vector<double> rho = balancing_probabilities(R);
    std::vector<BaseLearnerSlot> slots;
    for (std::size_t k = 0; k < items.size(); ++k) {
        BaseLearnerSlot s;
        s.index = first + k;
        s.rho = rho[k];
        s.learner = make_learner(items[k].first, setup.actions, items[k].second, rho[k], delta);
        s.extended_class = std::move(items[k].second);
        slots.push_back(std::move(s));
    }
    return slots;
}

// largest i with a firing pair (i, j), i < j
std::optional<LearnerIndex> scan_eliminations(const SlotPool& pool, std::size_t t0, std::size_t t,
                                              const BoundaryParams& p, const MetaConstants& c) {
    const auto& slots = pool.slots();
    std::optional<LearnerIndex> fired;
    for (std::size_t a = 0; a + 1 < slots.size(); ++a)
        for (std::size_t b = a + 1; b < slots.size(); ++b)
            if (elimination_test(slots[a].crew, slots[b].crew, t0, t, slots[a].rho, slots[b].rho,
                                 slots[a].extended_class.complexity, p, c.conc_scale, c.balance_scale))
                fired = std::max(fired.value_or(0), slots[a].index);
    return fired;
}

}  // namespace

Arbe::Arbe(const ModelSelectionSetup& setup, const MetaConstants& c, LearnerIndex s, std::size_t t0)
    : setup_(&setup), c_(c) {
    if (setup.M() == 0) throw ConfigError("no base learners");
    start(s, t0);
}

void Arbe::start(LearnerIndex s, std::size_t t0) {
    const std::size_t M = setup_->M();
    if (s < 1 || s > M) throw DomainError("active index out of range");
    s_ = s;
    t0_ = t0;
    std::vector<std::pair<LearnerSpec, ExtendedPolicyClass>> items;
    for (LearnerIndex i = s; i <= M; ++i)
        items.emplace_back(setup_->spec(i),
                           extend_policy_class(setup_->spec(i).policies, i, M, setup_->override_for(i)));
    pool_ = SlotPool(build_slots(*setup_, std::move(items), s, c_.delta));
}

StepResult Arbe::step(std::size_t t, const RoundData& round, MetaRngs& rngs) {
    StepResult out = pool_.play(round, rngs);
    BoundaryParams p{c_.delta, 1.0, 0.0, 1.0};
    if (auto i = scan_eliminations(pool_, t0_, t, p, c_)) {
        Event ev;
        ev.kind = Event::Kind::elimination;
        ev.t = t;
        ev.index = *i;
        out.events.push_back(ev);
        start(*i + 1, t);
    }
    return out;
}

ArbeGap::ArbeGap(const ModelSelectionSetup& setup, const MetaConstants& c, PolicyId initial_candidate)
    : setup_(&setup), c_(c) {
    if (setup.M() == 0) throw ConfigError("no base learners");
    if (!setup.spec(setup.M()).policies.contains(initial_candidate))
        throw ConfigError("initial candidate not in the top policy class");
    start(1, 0, initial_candidate, 1);
}

BoundaryParams ArbeGap::boundary() const {
    if (c_.restart_union == RestartUnion::factor3) return BoundaryParams{c_.delta, 1.0, 0.0, c_.restart_factor};
    const double nn = static_cast<double>(n_);
    return BoundaryParams{c_.delta / (nn * nn), 1.0, 0.0, 1.0};
}

void ArbeGap::start(LearnerIndex s, std::size_t t0, PolicyId pi_hat, std::size_t n) {
    const std::size_t M = setup_->M();
    s_ = s;
    t0_ = t0;
    pi_hat_ = pi_hat;
    n_ = n;
    last_gap_.reset();
    std::vector<std::pair<LearnerSpec, ExtendedPolicyClass>> items;
    for (LearnerIndex i = s; i <= M; ++i)
        items.emplace_back(setup_->spec(i),
                           extend_policy_class(setup_->spec(i).policies, i, M + 1, setup_->override_for(i)));
    LearnerSpec copy = setup_->spec(M);
    copy.policies = remove_policy(copy.policies, pi_hat);
    const double R_M = items.back().second.complexity;
    items.emplace_back(copy, extend_policy_class(copy.policies, M + 1, M + 1, R_M));
    const double nn = static_cast<double>(n);
    const double delta = c_.restart_union == RestartUnion::factor3 ? c_.delta : c_.delta / (nn * nn);
    pool_ = SlotPool(build_slots(*setup_, std::move(items), s, delta));
}

ArbeGap::Outcome ArbeGap::step(std::size_t t, const RoundData& round, MetaRngs& rngs) {
    Outcome out;
    out.step = pool_.play(round, rngs);
    ++counts_[out.step.policy];
    const std::size_t M = setup_->M();

    if (auto i = scan_eliminations(pool_, t0_, t, boundary(), c_)) {
        Event ev;
        ev.kind = Event::Kind::restart;
        ev.t = t;
        ev.index = n_ + 1;
        ev.reason = "eliminate_" + std::to_string(*i);
        out.step.events.push_back(ev);
        start(std::min<LearnerIndex>(*i + 1, M), t, pi_hat_, n_ + 1);
        return out;
    }

    if (t >= t0_ + 2) {
        const auto& top = pool_.slot(M);
        const auto& copy = pool_.slot(M + 1);
        const double R_M = top.extended_class.complexity;
        const double W = gap_width_W(t0_, t, top.rho, R_M, n_, c_.delta, c_.c_W);
        const double g = gap_estimate(top.crew, copy.crew, t0_, t, W);
        last_gap_ = g;
        if (gap_test(g, W, R_M)) {
            Event ev;
            ev.kind = Event::Kind::gap_found;
            ev.t = t;
            ev.index = pi_hat_;
            ev.value = g;
            out.step.events.push_back(ev);
            out.enter_exploit = g;
            return out;
        }
    }

    if (auto pi = candidate_policy_test(counts_, t, pi_hat_)) {
        Event ev;
        ev.kind = Event::Kind::policy_switch;
        ev.t = t;
        ev.index = *pi;
        out.step.events.push_back(ev);
        start(s_, t, *pi, n_ + 1);
    }
    return out;
}

Exploit::Exploit(const ModelSelectionSetup& setup, const MetaConstants& c, std::size_t t_gap, PolicyId pi_hat,
                 double gap_hat)
    : setup_(&setup), c_(c), pi_hat_(pi_hat), gap_hat_(gap_hat) {
    const LearnerSpec& top = setup.spec(setup.M());
    auto pos = top.policies.position(pi_hat);
    if (!pos) throw NotFoundError("candidate policy not in the top class");
    pi_hat_policy_ = top.policies[*pos];
    inner_spec_ = top;
    inner_spec_.policies = remove_policy(top.policies, pi_hat);
    R_ = inner_spec_.policies.complexity();
    inner_class_ = extend_policy_class(inner_spec_.policies, 1, 1);
    start_epoch(0, t_gap);
}

void Exploit::start_epoch(std::size_t e, std::size_t t_e) {
    e_ = e;
    t_e_ = t_e;
    ep_ = exploit_epoch_init(e, gap_hat_, R_, c_.delta, c_.c_k0, c_.c_rho);
    crew0_ = 0.0;
    crew1_ = 0.0;
    inner_ = make_learner(inner_spec_, setup_->actions, inner_class_, ep_.rho, ep_.delta);
}

Exploit::Outcome Exploit::step(std::size_t t, const RoundData& round, MetaRngs& rngs) {
    Outcome out;
    const bool b = rngs.exploit.bernoulli(ep_.rho);
    const Draw d = inner_->draw(round.x, rngs.draw);
    ActionIndex a0 = pi_hat_policy_.target();
    if (pi_hat_policy_.kind() == Policy::Kind::table)
        a0 = rngs.exploit.categorical(pi_hat_policy_.distribution(round.x, setup_->actions.size()));

    out.step.chosen = b ? 1 : 0;
    out.step.action = b ? d.ref.index : a0;
    out.step.policy = b ? inner_class_.at(d.policy).id() : pi_hat_;
    out.step.reward = round.observe(out.step.action);
    out.step.chain = {out.step.chosen};

    inner_->observe(b ? out.step.reward / ep_.rho : 0.0, b);
    if (b)
        crew1_ += out.step.reward / ep_.rho;
    else
        crew0_ += out.step.reward / (1.0 - ep_.rho);

    if (t >= t_e_ + 2) {
        const double V = exploit_width_V(t_e_, t, ep_.rho, R_, ep_.delta, c_.c_V);
        out.verdict = exploit_tests(crew0_, crew1_, t_e_, t, gap_hat_, V);
        if (out.verdict != Verdict::proceed) return out;
    }
    if (t == t_e_ + ep_.k) start_epoch(e_ + 1, t);
    return out;
}

ArbeRunner::ArbeRunner(const ModelSelectionSetup& setup, const MetaConstants& c, std::uint64_t seed)
    : rngs_(seed), arbe_(setup, c, 1, 0) {}

StepResult ArbeRunner::step(std::size_t t, const RoundData& round) { return arbe_.step(t, round, rngs_); }

BestOfBothDriver::BestOfBothDriver(const ModelSelectionSetup& setup, const MetaConstants& c, std::uint64_t seed,
                                   PolicyId initial_candidate)
    : setup_(&setup), c_(c), rngs_(seed), gap_(std::make_unique<ArbeGap>(setup, c, initial_candidate)) {}

StepResult BestOfBothDriver::step(std::size_t t, const RoundData& round) {
    switch (phase_) {
    case Phase::gap_estimation: {
        auto out = gap_->step(t, round, rngs_);
        if (out.enter_exploit) {
            surviving_s_ = gap_->s();
            exploit_ = std::make_unique<Exploit>(*setup_, c_, t, gap_->candidate(), *out.enter_exploit);
            phase_ = Phase::exploit;
        }
        return out.step;
    }
    case Phase::exploit: {
        auto out = exploit_->step(t, round, rngs_);
        if (out.verdict != Verdict::proceed) {
            Event ev;
            ev.kind = Event::Kind::exploit_return;
            ev.t = t;
            ev.reason = out.verdict == Verdict::adversarial_low ? "lower" : "upper";
            out.step.events.push_back(ev);
            fallback_ = std::make_unique<Arbe>(*setup_, c_, surviving_s_, t);
            phase_ = Phase::fallback;
        }
        return out.step;
    }
    default: return fallback_->step(t, round, rngs_);
    }
}

LearnerIndex BestOfBothDriver::active_s() const {
    switch (phase_) {
    case Phase::gap_estimation: return gap_->s();
    case Phase::exploit: return surviving_s_;
    default: return fallback_->s();
    }
}

std::optional<PolicyId> BestOfBothDriver::candidate() const {
    if (phase_ == Phase::gap_estimation) return gap_->candidate();
    if (phase_ == Phase::exploit) return exploit_->candidate();
    return std::nullopt;
}

std::optional<double> BestOfBothDriver::gap_estimate_value() const {
    if (phase_ == Phase::gap_estimation) return gap_->last_gap_estimate();
    if (phase_ == Phase::exploit) return exploit_->gap_hat();
    return std::nullopt;
}

SoloRunner::SoloRunner(std::unique_ptr<BaseLearner> learner, std::uint64_t seed, PolicyClass cls)
    : learner_(std::move(learner)), rngs_(seed), cls_(std::move(cls)) {}

StepResult SoloRunner::step(std::size_t, const RoundData& round) {
    StepResult out;
    const double rho = learner_->rho();
    const bool b = rho >= 1.0 || rngs_.select.bernoulli(rho);
    const Draw d = learner_->draw(round.x, rngs_.draw);
    out.action = d.ref.index;
    out.policy = cls_[d.policy].id();
    out.reward = round.observe(out.action);
    out.chosen = 1;
    out.chain = {1};
    learner_->observe(b ? out.reward / rho : 0.0, b);
    return out;
}

}  // namespace arbe
