// confseq.hpp
//
// Streaming lower confidence sequences for the running average conditional mean
//   theta_t = (1/t) sum_{s<=t} E_{s-1}[X_s]
// of non-negative observations with E_{s-1}[X_s] <= scale, and the off-policy
// two-sided construction built from two lower sequences.
#pragma once

#include "accumulators.hpp"
#include "boundaries.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>

namespace heavycs {

/// Predictable forecast of the next rescaled observation, always in [0, 1].
class Predictor {
public:
    enum class Strategy { shrunk_mean, constant, custom };

    /// Custom rule: receives (count, sum of min(x, 1)) over past observations.
    using Rule = std::function<double(std::uint64_t, double)>;

    static Predictor shrunk_mean() { return Predictor(Strategy::shrunk_mean, 0.0, {}); }
    static Predictor constant(double c) {
        if (!(c >= 0.0 && c <= 1.0)) throw DomainError("constant predictor must lie in [0, 1]");
        return Predictor(Strategy::constant, c, {});
    }
    static Predictor custom(Rule rule) {
        if (!rule) throw DomainError("custom predictor requires a callable");
        return Predictor(Strategy::custom, 0.0, std::move(rule));
    }

    /// Forecast for the next observation; depends only on observations already seen.
    double predict() const {
        double p;
        switch (strategy_) {
        case Strategy::shrunk_mean:
            p = (0.5 + clipped_sum_) / (static_cast<double>(count_) + 1.0);
            break;
        case Strategy::constant:
            p = constant_;
            break;
        default:
            p = rule_(count_, clipped_sum_);
            if (std::isnan(p)) throw DomainError("custom predictor returned NaN");
            break;
        }
        return std::clamp(p, 0.0, 1.0);
    }

    void observe(double x) {
        ++count_;
        clipped_sum_ += std::min(x, 1.0);
    }

    Strategy strategy() const { return strategy_; }
    std::uint64_t count() const { return count_; }
    double clipped_sum() const { return clipped_sum_; }

private:
    Predictor(Strategy s, double c, Rule rule) : strategy_(s), constant_(c), rule_(std::move(rule)) {}

    Strategy strategy_;
    double constant_;
    Rule rule_;
    std::uint64_t count_ = 0;
    double clipped_sum_ = 0.0;
};

enum class Method { ddrm, eb, both };

inline bool uses_ddrm(Method m) { return m != Method::eb; }
inline bool uses_eb(Method m) { return m != Method::ddrm; }

inline Method parse_method(const std::string& s) {
    if (s == "ddrm") return Method::ddrm;
    if (s == "eb") return Method::eb;
    if (s == "both") return Method::both;
    throw DomainError("unknown method '" + s + "'");
}

struct CsConfig {
    HeavyParams params{};
    Method method = Method::ddrm;
    double scale = 1.0;       // known bound B on every conditional mean; observations are divided by B
    double eb_rho = 1.0;      // gamma-mixture prior parameter for the empirical-Bernstein baseline
    double trunc_tol = 1e-9;  // relative truncation tolerance of the discrete mixture
};

/// Per-method lower bounds (in original units); absent when the method is disabled.
struct LowerBounds {
    std::optional<double> ddrm;
    std::optional<double> eb;
};

/// One metric stream. Single writer; copy to snapshot.
class ConfidenceSequence {
public:
    explicit ConfidenceSequence(CsConfig cfg = {}, Predictor predictor = Predictor::shrunk_mean())
        : cfg_(cfg), grid_(cfg.params.k), predictor_(std::move(predictor)) {
        cfg_.params.validate();
        if (!(cfg_.scale > 0.0) || !std::isfinite(cfg_.scale)) throw DomainError("scale must be positive");
        if (!(cfg_.eb_rho > 0.0)) throw DomainError("eb_rho must be positive");
    }

    /// Incorporates x (original units) without recomputing the boundary.
    void observe(double x) {
        if (!std::isfinite(x)) throw DomainError("observation must be finite");
        if (x < 0.0) throw DomainError("observation must be non-negative");
        const double xs = x / cfg_.scale;
        const double x_hat = predictor_.predict();
        if (uses_ddrm(cfg_.method)) grid_.update(xs, x_hat);
        if (uses_eb(cfg_.method)) eb_.update(xs, x_hat);
        predictor_.observe(xs);
        ++t_;
        sum_x_ += xs;
    }

    /// Observe x, then return the fresh lower bounds and fold them into the running maxima.
    LowerBounds update(double x) {
        observe(x);
        return lower();
    }

    /// Lower bounds at the current time; also advances the running maxima.
    LowerBounds lower() {
        if (t_ == 0) throw std::logic_error("no observations");
        LowerBounds out;
        const double t = static_cast<double>(t_);
        if (uses_ddrm(cfg_.method)) {
            const double b = ddrm_boundary(grid_, cfg_.params, cfg_.trunc_tol);
            out.ddrm = std::clamp((grid_.sum_x() - b) / t, 0.0, 1.0) * cfg_.scale;
            running_ddrm_ = std::max(running_ddrm_, *out.ddrm);
        }
        if (uses_eb(cfg_.method)) {
            const double b = eb_gamma_boundary(eb_, cfg_.params.alpha, cfg_.eb_rho);
            out.eb = std::clamp((eb_.sum_x() - b) / t, 0.0, 1.0) * cfg_.scale;
            running_eb_ = std::max(running_eb_, *out.eb);
        }
        return out;
    }

    /// Running intersection (max over evaluated times) of the lower bounds.
    LowerBounds running_lower() const {
        LowerBounds out;
        if (uses_ddrm(cfg_.method)) out.ddrm = running_ddrm_;
        if (uses_eb(cfg_.method)) out.eb = running_eb_;
        return out;
    }

    /// Whether the current DDRM lower bound strictly exceeds `mean` (original units),
    /// decided from one wealth evaluation instead of a boundary search.
    bool ddrm_exceeds(double mean) {
        if (!uses_ddrm(cfg_.method)) throw std::logic_error("ddrm disabled");
        if (t_ == 0) return false;
        const double theta = mean / cfg_.scale;
        if (theta >= 1.0) return false;
        const double y = grid_.sum_x() - static_cast<double>(t_) * std::max(theta, 0.0);
        if (y <= 0.0) return false;
        auto curve = make_wealth_curve(cfg_.params, grid_, cfg_.trunc_tol);
        return curve.reaches(y, -std::log(cfg_.params.alpha));
    }

    /// Empirical-Bernstein counterpart of ddrm_exceeds.
    bool eb_exceeds(double mean) const {
        if (!uses_eb(cfg_.method)) throw std::logic_error("eb disabled");
        if (t_ == 0) return false;
        const double theta = mean / cfg_.scale;
        if (theta >= 1.0) return false;
        const double y = eb_.sum_x() - static_cast<double>(t_) * std::max(theta, 0.0);
        if (y <= 0.0) return false;
        return eb_gamma_reaches(y, eb_.sum_sq_dev(), cfg_.eb_rho, -std::log(cfg_.params.alpha));
    }

    std::uint64_t t() const { return t_; }
    /// Sum of observations in original units.
    double sum_x() const { return sum_x_ * cfg_.scale; }
    double next_prediction() const { return predictor_.predict(); }
    const CsConfig& config() const { return cfg_; }
    const GridAccumulator& grid() const { return grid_; }
    const EbAccumulator& eb() const { return eb_; }
    const Predictor& predictor() const { return predictor_; }

private:
    CsConfig cfg_;
    GridAccumulator grid_;
    EbAccumulator eb_;
    Predictor predictor_;
    std::uint64_t t_ = 0;
    double sum_x_ = 0.0;
    double running_ddrm_ = 0.0;
    double running_eb_ = 0.0;
};

/// Lower/upper pair for one method.
struct Interval {
    double lower;
    double upper;
};

struct OffPolicyBounds {
    std::optional<Interval> ddrm;
    std::optional<Interval> eb;
};

/// Two-sided sequence for the value of a target policy from importance-weighted
/// rewards (w, r) with E[w] = 1 and r in [0, 1]: the lower side tracks w r and
/// the upper side is one minus a lower sequence on w (1 - r).
class OffPolicyCs {
public:
    /// With split_alpha the two sides each run at alpha / 2 so the pair has level alpha;
    /// otherwise each side runs at alpha.
    explicit OffPolicyCs(CsConfig cfg = {}, bool split_alpha = true)
        : lower_(side_config(cfg, split_alpha)), upper_(side_config(cfg, split_alpha)) {}

    static constexpr double kScale = 1.0;  // both w r and w (1 - r) have mean at most E[w] = 1

    void observe(double w, double r) {
        if (!(w >= 0.0) || !std::isfinite(w)) throw DomainError("importance weight must be finite and >= 0");
        if (!(r >= 0.0 && r <= 1.0)) throw DomainError("reward must lie in [0, 1]");
        lower_.observe(w * r);
        upper_.observe(w * (1.0 - r));
    }

    OffPolicyBounds update(double w, double r) {
        observe(w, r);
        return bounds();
    }

    OffPolicyBounds bounds() {
        const LowerBounds lo = lower_.lower();
        const LowerBounds co = upper_.lower();
        return combine(lo, co);
    }

    OffPolicyBounds running_bounds() const { return combine(lower_.running_lower(), upper_.running_lower()); }

    ConfidenceSequence& lower_side() { return lower_; }
    ConfidenceSequence& upper_side() { return upper_; }
    std::uint64_t t() const { return lower_.t(); }

private:
    static CsConfig side_config(CsConfig cfg, bool split) {
        if (cfg.scale != kScale) throw DomainError("off-policy sequences use scale 1");
        if (split) cfg.params.alpha *= 0.5;
        return cfg;
    }

    static OffPolicyBounds combine(const LowerBounds& lo, const LowerBounds& co) {
        OffPolicyBounds out;
        if (lo.ddrm && co.ddrm) out.ddrm = Interval{*lo.ddrm, kScale - *co.ddrm};
        if (lo.eb && co.eb) out.eb = Interval{*lo.eb, kScale - *co.eb};
        return out;
    }

    ConfidenceSequence lower_;
    ConfidenceSequence upper_;
};

}  // namespace heavycs
