// simulator.hpp
//
// Seeded off-policy evaluation environments emitting importance-weighted rewards
// (w, r) with E[w | past] = 1 and the current target-policy value, plus a
// coverage audit that replays many seeds through the confidence sequences.
#pragma once

#include "confseq.hpp"
#include "rng.hpp"
#include "special_functions.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <exception>
#include <numbers>
#include <optional>
#include <string>
#include <thread>
#include <variant>
#include <vector>

namespace heavycs {

struct SimRecord {
    std::uint64_t t;
    double w;           // importance weight >= 0
    double r;           // reward in [0, 1]
    double true_value;  // E[w r | past], the target policy's value at step t
};

/// Epsilon-greedy logging over a discrete action set, deterministic target policy
/// that agrees with the greedy action at a calibrated rate, and a reward mean
/// clamp(base + amplitude sin(2 pi t / period) - slope t, 0, 1) for the target's action.
struct EpsGreedyConfig {
    std::uint64_t actions = 20;
    double epsilon = 0.1;
    double second_moment = 10.0;       // calibration target for E[w^2]
    std::optional<double> agreement;   // overrides calibration when set
    double base_mean = 0.6;
    double amplitude = 0.2;
    double period = 1000.0;
    double slope = 2e-6;
    double off_target_gap = 0.2;       // reward-mean deficit of actions the target would not take

    void validate() const {
        if (actions < 2) throw DomainError("eps_greedy: need at least 2 actions");
        if (!(epsilon > 0.0 && epsilon <= 1.0)) throw DomainError("eps_greedy: epsilon must lie in (0, 1]");
        if (agreement && !(*agreement >= 0.0 && *agreement <= 1.0))
            throw DomainError("eps_greedy: agreement must lie in [0, 1]");
        if (!(period > 0.0)) throw DomainError("eps_greedy: period must be positive");
        if (!(amplitude >= 0.0) || !(slope >= 0.0) || !(off_target_gap >= 0.0))
            throw DomainError("eps_greedy: amplitude, slope, gap must be non-negative");
    }

    double greedy_prob() const { return 1.0 - epsilon + epsilon / static_cast<double>(actions); }
    double explore_prob() const { return epsilon / static_cast<double>(actions); }

    /// E[w^2] for a deterministic target agreeing with the greedy action at rate rho.
    double second_moment_at(double rho) const { return rho / greedy_prob() + (1.0 - rho) / explore_prob(); }

    /// Agreement rate hitting second_moment, by bisection (E[w^2] decreases in rho).
    double calibrated_agreement() const {
        if (agreement) return *agreement;
        const double lo_m = second_moment_at(1.0);
        const double hi_m = second_moment_at(0.0);
        if (!(second_moment >= lo_m && second_moment <= hi_m))
            throw DomainError("eps_greedy: second_moment " + std::to_string(second_moment) +
                              " unreachable; attainable range [" + std::to_string(lo_m) + ", " +
                              std::to_string(hi_m) + "]");
        const double target = second_moment;
        auto [a, b] = detail::bisect([&](double rho) { return second_moment_at(rho) <= target; }, 0.0, 1.0, 1e-15);
        return 0.5 * (a + b);
    }

    double reward_mean(std::uint64_t t) const {
        const double tt = static_cast<double>(t);
        const double m = base_mean + amplitude * std::sin(2.0 * std::numbers::pi * tt / period) - slope * tt;
        return std::clamp(m, 0.0, 1.0);
    }
};

/// Constant-mean rewards with Pareto importance weights of infinite variance.
struct ParetoConfig {
    double shape = 1.5;        // tail index a in (1, 2)
    double reward_mean = 0.5;  // Bernoulli reward mean

    void validate() const {
        if (!(shape > 1.0 && shape < 2.0)) throw DomainError("pareto: shape must lie in (1, 2)");
        if (!(reward_mean >= 0.0 && reward_mean <= 1.0)) throw DomainError("pareto: reward_mean must lie in [0, 1]");
    }
    /// Minimum weight (a - 1) / a, which makes E[w] = 1.
    double scale() const { return (shape - 1.0) / shape; }
};

enum class EnvKind { eps_greedy, pareto };

inline EnvKind parse_env_kind(const std::string& s) {
    if (s == "eps_greedy" || s == "eps-greedy") return EnvKind::eps_greedy;
    if (s == "pareto") return EnvKind::pareto;
    throw DomainError("unknown environment kind '" + s + "'");
}

struct EnvConfig {
    EnvKind kind = EnvKind::pareto;
    std::uint64_t seed = 1;
    EpsGreedyConfig eps_greedy{};
    ParetoConfig pareto{};

    void validate() const {
        if (kind == EnvKind::eps_greedy) eps_greedy.validate();
        else pareto.validate();
    }
};

class EpsGreedyStream {
public:
    EpsGreedyStream(const EpsGreedyConfig& cfg, std::uint64_t seed)
        : cfg_(cfg), agreement_(checked_agreement(cfg)),
          context_(seed, RngPurpose::context), target_(seed, RngPurpose::target),
          logging_(seed, RngPurpose::logging), reward_(seed, RngPurpose::reward) {}

    SimRecord next() {
        ++t_;
        const std::uint64_t k = cfg_.actions;
        const std::uint64_t greedy = context_.below(k);
        std::uint64_t chosen = greedy;
        if (!context_.bernoulli(agreement_)) {
            chosen = target_.below(k - 1);
            if (chosen >= greedy) ++chosen;
        }
        const std::uint64_t logged = logging_.bernoulli(cfg_.epsilon) ? logging_.below(k) : greedy;
        const double p_logged = logged == greedy ? cfg_.greedy_prob() : cfg_.explore_prob();
        const double w = logged == chosen ? 1.0 / p_logged : 0.0;
        const double value = cfg_.reward_mean(t_);
        const double mean = logged == chosen ? value : std::max(value - cfg_.off_target_gap, 0.0);
        const double r = reward_.bernoulli(mean) ? 1.0 : 0.0;
        return {t_, w, r, value};
    }

    double agreement() const { return agreement_; }

private:
    static double checked_agreement(const EpsGreedyConfig& cfg) {
        cfg.validate();
        return cfg.calibrated_agreement();
    }

    EpsGreedyConfig cfg_;
    double agreement_;
    CounterRng context_, target_, logging_, reward_;
    std::uint64_t t_ = 0;
};

class ParetoStream {
public:
    ParetoStream(const ParetoConfig& cfg, std::uint64_t seed)
        : cfg_(cfg), weight_(seed, RngPurpose::weight), reward_(seed, RngPurpose::reward) {
        cfg_.validate();
    }

    SimRecord next() {
        ++t_;
        const double w = weight_.pareto(cfg_.scale(), cfg_.shape);
        const double r = reward_.bernoulli(cfg_.reward_mean) ? 1.0 : 0.0;
        return {t_, w, r, cfg_.reward_mean};
    }

private:
    ParetoConfig cfg_;
    CounterRng weight_, reward_;
    std::uint64_t t_ = 0;
};

/// Either environment behind one interface.
class Environment {
public:
    explicit Environment(const EnvConfig& cfg) : stream_(make(cfg)) {}

    SimRecord next() {
        return std::visit([](auto& s) { return s.next(); }, stream_);
    }

private:
    using Stream = std::variant<EpsGreedyStream, ParetoStream>;

    static Stream make(const EnvConfig& cfg) {
        if (cfg.kind == EnvKind::eps_greedy) return Stream(std::in_place_type<EpsGreedyStream>, cfg.eps_greedy, cfg.seed);
        return Stream(std::in_place_type<ParetoStream>, cfg.pareto, cfg.seed);
    }

    Stream stream_;
};

inline std::vector<SimRecord> simulate(const EnvConfig& cfg, std::uint64_t horizon) {
    Environment env(cfg);
    std::vector<SimRecord> out;
    out.reserve(horizon);
    for (std::uint64_t i = 0; i < horizon; ++i) out.push_back(env.next());
    return out;
}

// ---------------------------------------------------------------------------
// Coverage audit
// ---------------------------------------------------------------------------

/// Which one-sided sequence to audit: lower on w r (covers the policy value) or
/// lower on w (1 - r) (covers one minus the value, i.e. the upper side).
enum class AuditSide { lower, upper };

struct AuditConfig {
    EnvConfig env{};
    CsConfig cs{};  // method, params (alpha), eb_rho
    AuditSide side = AuditSide::lower;
    std::size_t seeds = 1000;
    std::uint64_t horizon = 1000;
    std::uint64_t first_seed = 1;
    unsigned threads = 1;
};

struct AuditResult {
    std::size_t seeds = 0;
    std::size_t ddrm_violations = 0;
    std::size_t eb_violations = 0;

    double ddrm_rate() const { return seeds ? static_cast<double>(ddrm_violations) / seeds : 0.0; }
    double eb_rate() const { return seeds ? static_cast<double>(eb_violations) / seeds : 0.0; }
};

struct SeedOutcome {
    bool ddrm_violated = false;
    bool eb_violated = false;
};

/// Replays one seed and records whether each enabled lower sequence ever
/// strictly exceeded the true running mean at any step.
inline SeedOutcome audit_seed(const AuditConfig& cfg, std::uint64_t seed) {
    EnvConfig env_cfg = cfg.env;
    env_cfg.seed = seed;
    Environment env(env_cfg);
    ConfidenceSequence cs(cfg.cs);
    SeedOutcome out;
    const bool want_ddrm = uses_ddrm(cfg.cs.method);
    const bool want_eb = uses_eb(cfg.cs.method);
    double true_sum = 0.0;
    for (std::uint64_t t = 1; t <= cfg.horizon; ++t) {
        const SimRecord rec = env.next();
        const bool upper = cfg.side == AuditSide::upper;
        cs.observe(rec.w * (upper ? 1.0 - rec.r : rec.r));
        true_sum += upper ? 1.0 - rec.true_value : rec.true_value;
        const double theta = true_sum / static_cast<double>(t);
        if (want_ddrm && !out.ddrm_violated && cs.ddrm_exceeds(theta)) out.ddrm_violated = true;
        if (want_eb && !out.eb_violated && cs.eb_exceeds(theta)) out.eb_violated = true;
        if ((!want_ddrm || out.ddrm_violated) && (!want_eb || out.eb_violated)) break;
    }
    return out;
}

/// Fans seeds out over threads; aggregation is by seed index, so the result does
/// not depend on the thread count.
inline AuditResult coverage_audit(const AuditConfig& cfg) {
    cfg.env.validate();
    cfg.cs.params.validate();
    std::vector<SeedOutcome> outcomes(cfg.seeds);
    const unsigned threads = std::max(1u, std::min<unsigned>(cfg.threads, static_cast<unsigned>(std::max<std::size_t>(cfg.seeds, 1))));
    std::vector<std::exception_ptr> errors(threads);
    auto work = [&](unsigned worker) {
        try {
            for (std::size_t i = worker; i < cfg.seeds; i += threads)
                outcomes[i] = audit_seed(cfg, cfg.first_seed + i);
        } catch (...) {
            errors[worker] = std::current_exception();
        }
    };
    if (threads == 1) {
        work(0);
    } else {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < threads; ++w) pool.emplace_back(work, w);
        for (auto& th : pool) th.join();
    }
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);
    AuditResult res;
    res.seeds = cfg.seeds;
    for (const auto& o : outcomes) {
        res.ddrm_violations += o.ddrm_violated;
        res.eb_violations += o.eb_violated;
    }
    return res;
}

}  // namespace heavycs
