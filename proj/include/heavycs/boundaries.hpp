// boundaries.hpp
//
// Wealth evaluation and boundary inversion for the running-mean supermartingale
//   log E_t(lambda) = lambda y - sum_s g(lambda, X_s - Xhat_s),  y = sum_s (X_s - E_{s-1}[X_s]).
// A boundary is the largest y whose mixture wealth stays at or below 1/alpha; the
// lower confidence bound on the running mean is then (sum_s X_s - boundary) / t.
#pragma once

#include "accumulators.hpp"
#include "special_functions.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

namespace heavycs {

class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Mixture and approximation hyperparameters. Defaults are the usual
/// lambda_max = 1/2, xi = 8/5, r = 2, k = 3/2, eta = 0.95, alpha = 0.05.
struct HeavyParams {
    double lambda_max = 0.5;
    double xi = 1.6;
    double r = 2.0;
    double k = 1.5;
    double eta = 0.95;
    double alpha = 0.05;

    void validate() const {
        if (!(lambda_max > 0.0 && lambda_max <= max_admissible_bet() + 1e-12))
            throw DomainError("lambda_max must lie in (0, 1 + W0(-e^-2)]");
        if (!(xi > 1.0) || !std::isfinite(xi)) throw DomainError("xi must be > 1");
        if (!(r > 1.0) || !std::isfinite(r)) throw DomainError("r must be > 1");
        if (!(k > 1.0) || !std::isfinite(k)) throw DomainError("k must be > 1");
        if (!(eta > 0.0 && eta < 1.0)) throw DomainError("eta must lie in (0, 1)");
        if (!(alpha > 0.0 && alpha <= 1.0)) throw DomainError("alpha must lie in (0, 1]");
    }
};

/// One observation together with the forecast made before it arrived.
struct Observation {
    double x;
    double x_hat;
};

// ---------------------------------------------------------------------------
// Fixed-bet log wealth over a retained history (reference paths)
// ---------------------------------------------------------------------------

namespace detail {
inline void check_history(std::span<const Observation> history) {
    for (const auto& o : history) {
        if (!(o.x >= 0.0) || !std::isfinite(o.x)) throw DomainError("history: x must be finite and >= 0");
        if (!(o.x_hat >= 0.0 && o.x_hat <= 1.0)) throw DomainError("history: x_hat must lie in [0, 1]");
    }
}
}  // namespace detail

/// lambda y - sum_s g(lambda, x_s - xhat_s).
inline double heavy_log_wealth(std::span<const Observation> history, double lambda, double y) {
    detail::check_bet(lambda);
    detail::check_history(history);
    double penalty = 0.0;
    for (const auto& o : history) penalty += g(lambda, o.x - o.x_hat);
    return lambda * y - penalty;
}

/// lambda y - psi_E(lambda) sum_s (x_s - xhat_s)^2.
inline double eb_log_wealth(std::span<const Observation> history, double lambda, double y) {
    detail::check_bet(lambda);
    detail::check_history(history);
    double v = 0.0;
    for (const auto& o : history) v += (o.x - o.x_hat) * (o.x - o.x_hat);
    return lambda * y - psi_e(lambda) * v;
}

// ---------------------------------------------------------------------------
// Discrete mixtures over geometrically spaced bets
// ---------------------------------------------------------------------------

/// Weights w_j = first * ratio^j, j >= 0.
struct GeometricWeights {
    double first;
    double ratio;

    double weight(int j) const { return first * std::pow(ratio, j); }
    double log_weight(int j) const { return std::log(first) + j * std::log(ratio); }
    /// sum_{i >= j} w_i
    double tail(int j) const { return weight(j) / (1.0 - ratio); }
    double log_tail(int j) const { return log_weight(j) - std::log1p(-ratio); }
    double mass() const { return first / (1.0 - ratio); }
};

/// Bets lambda_j = lambda_max / xi^{j + 1/2} paired with mixture weights.
struct MixtureGrid {
    double lambda_max;
    double xi;
    GeometricWeights weights;

    double bet(int j) const { return lambda_max / std::pow(xi, j + 0.5); }
};

/// Weight on q(k) = 1 + eta^k in the moment-adaptive mixture.
struct QWeight {
    double w;
    double q;
};

/// w_k = (k + 1)^{-r} / zeta(r) and q_k = 1 + eta^k for k = 0..count-1.
inline std::vector<QWeight> q_adaptive_weights(double r, double eta, std::size_t count) {
    if (!(r > 1.0)) throw DomainError("q_adaptive_weights: r must be > 1");
    if (!(eta > 0.0 && eta < 1.0)) throw DomainError("q_adaptive_weights: eta must lie in (0, 1)");
    if (count == 0) throw DomainError("q_adaptive_weights: count must be >= 1");
    const double zeta = riemann_zeta(r);
    std::vector<QWeight> out;
    out.reserve(count);
    for (std::size_t k = 0; k < count; ++k)
        out.push_back({std::pow(static_cast<double>(k + 1), -r) / zeta,
                       1.0 + std::pow(eta, static_cast<double>(k))});
    return out;
}

/// Per-bet weights of the doubly-discrete mixture,
///   z_j = (1/2) ((xi - 1) / xi^{1+j}) (1 + Li_r(eta) / (eta zeta(r))),
/// which lower-bounds sum_k w_k y_{j,k} with the single-q weights y_{j,k} below.
/// Total mass (1/2)(1 + Li_r(eta) / (eta zeta(r))) < 1.
inline GeometricWeights ddrm_weights(const HeavyParams& p) {
    const double factor = 1.0 + polylog(p.r, p.eta) / (p.eta * riemann_zeta(p.r));
    return {0.5 * (p.xi - 1.0) / p.xi * factor, 1.0 / p.xi};
}

/// Single-q discretization y_j = (q/2) (xi - 1) / xi^{1 + j q / 2} of the
/// density (q/2) lambda^{q/2-1} / lambda_max^{q/2} on (0, lambda_max].
inline GeometricWeights single_q_weights(double q, double xi) {
    if (!(q > 1.0 && q <= 2.0)) throw DomainError("single_q_weights: q must lie in (1, 2]");
    return {0.5 * q * (xi - 1.0) / xi, std::pow(xi, -0.5 * q)};
}

inline MixtureGrid ddrm_grid(const HeavyParams& p) { return {p.lambda_max, p.xi, ddrm_weights(p)}; }

/// Partial mixture sum with a certified bound on the dropped tail.
struct WealthEstimate {
    double log_value;    // log of the partial sum over j = 0..terms-1
    double value;        // exp(log_value); +inf if it overflows
    double error_bound;  // upper bound on the dropped tail (same units as value)
    int terms;
    bool certified;      // error_bound <= trunc_tol * value was reached before the term cap
};

/// sum_j w_j exp(lambda_j y - P(lambda_j)) for a penalty P >= 0.
///
/// Penalties are cached per bet, so one instance amortizes across many y.
/// Not safe for concurrent use; copy per thread.
template <class Penalty>
class MixtureWealth {
public:
    MixtureWealth(MixtureGrid grid, Penalty penalty, double trunc_tol = 1e-9, int max_terms = 10000)
        : grid_(grid), penalty_(std::move(penalty)), trunc_tol_(trunc_tol), max_terms_(max_terms) {
        if (!(grid_.weights.ratio > 0.0 && grid_.weights.ratio < 1.0) || !(grid_.weights.first > 0.0))
            throw DomainError("mixture weights must be positive and geometrically decreasing");
        if (!(trunc_tol_ > 0.0)) throw DomainError("trunc_tol must be positive");
    }

    const MixtureGrid& grid() const { return grid_; }

    double penalty(int j) {
        while (static_cast<int>(penalties_.size()) <= j) {
            const double pj = penalty_(grid_.bet(static_cast<int>(penalties_.size())));
            if (!std::isfinite(pj)) throw NumericError("mixture: non-finite penalty");
            penalties_.push_back(std::max(pj, 0.0));
        }
        return penalties_[static_cast<std::size_t>(j)];
    }

    double log_term(int j, double y) { return grid_.weights.log_weight(j) + grid_.bet(j) * y - penalty(j); }

    /// log of the tail bound sum_{i >= j} w_i exp(lambda_i max(y, 0)).
    double log_tail(int j, double y) const {
        return grid_.weights.log_tail(j) + grid_.bet(j) * std::max(y, 0.0);
    }

    WealthEstimate evaluate(double y) {
        const double log_tol = std::log(trunc_tol_);
        double m = -std::numeric_limits<double>::infinity();
        double s = 0.0;  // sum of exp(term - m)
        int j = 0;
        double log_value = m;
        double log_err = log_tail(0, y);
        bool certified = false;
        for (; j < max_terms_; ++j) {
            const double a = log_term(j, y);
            if (a > m) {
                s = s * std::exp(m - a) + 1.0;
                m = a;
            } else {
                s += std::exp(a - m);
            }
            log_value = m + std::log(s);
            log_err = log_tail(j + 1, y);
            if (log_err <= log_tol + log_value) {
                certified = true;
                ++j;
                break;
            }
        }
        return {log_value, std::exp(log_value), std::exp(log_err), j, certified};
    }

    /// Decides whether the mixture wealth at y reaches exp(log_threshold), adding
    /// terms only until the partial sum crosses or partial + tail stays below.
    /// Undecided after the term cap counts as not reached.
    bool reaches(double y, double log_threshold) {
        double m = -std::numeric_limits<double>::infinity();
        double s = 0.0;
        for (int j = 0; j < max_terms_; ++j) {
            const double a = log_term(j, y);
            if (a > m) {
                s = s * std::exp(m - a) + 1.0;
                m = a;
            } else {
                s += std::exp(a - m);
            }
            const double log_partial = m + std::log(s);
            if (log_partial >= log_threshold) return true;
            const double lt = log_tail(j + 1, y);
            const double hi = std::max(log_partial, lt);
            const double log_upper = hi + std::log1p(std::exp(std::min(log_partial, lt) - hi));
            if (log_upper < log_threshold) return false;
        }
        return false;
    }

    /// Smallest y (to within abs_tol, rounded up) at which the wealth reaches
    /// exp(log_threshold). Never undershoots the exact infinite-sum root.
    double boundary(double log_threshold, double abs_tol) {
        auto above = [&](double y) { return reaches(y, log_threshold); };
        double lo = 0.0;
        double hi;
        if (above(lo)) {
            hi = lo;
            double step = 1.0;
            lo = -step;
            while (above(lo)) {
                hi = lo;
                step *= 2.0;
                lo = -step;
                if (step > 1e300) throw NumericError("mixture boundary: no lower bracket");
            }
        } else {
            hi = 1.0;
            while (!above(hi)) {
                lo = hi;
                hi *= 2.0;
                if (hi > 1e300) throw NumericError("mixture boundary: no upper bracket");
            }
        }
        return detail::bisect(above, lo, hi, abs_tol).second;
    }

private:
    MixtureGrid grid_;
    Penalty penalty_;
    double trunc_tol_;
    int max_terms_;
    std::vector<double> penalties_;
};

/// Penalty sum_s g_tilde(lambda, d_s; k) read from a grid sketch.
struct SketchPenalty {
    const GridAccumulator* acc;
    double operator()(double lambda) const { return acc->sum_g_tilde(lambda); }
};

/// Penalty summed over a retained history, exact g or the g_tilde bound.
struct HistoryPenalty {
    std::span<const Observation> history;
    bool use_tilde = false;
    double k = 1.5;

    double operator()(double lambda) const {
        double total = 0.0;
        for (const auto& o : history)
            total += use_tilde ? g_tilde(lambda, o.x - o.x_hat, k) : g(lambda, o.x - o.x_hat);
        return total;
    }
};

/// Mixture wealth curve over a grid sketch. The sketch must outlive the curve.
using WealthCurve = MixtureWealth<SketchPenalty>;

inline WealthCurve make_wealth_curve(const HeavyParams& params, const GridAccumulator& acc,
                                     double trunc_tol = 1e-9) {
    params.validate();
    if (acc.k() != params.k) throw DomainError("sketch grid base differs from params.k");
    return WealthCurve(ddrm_grid(params), SketchPenalty{&acc}, trunc_tol);
}

inline WealthEstimate ddrm_wealth(WealthCurve& curve, double y) { return curve.evaluate(y); }

inline double boundary_tolerance(std::uint64_t t) {
    return 1e-8 * std::max(1.0, static_cast<double>(t));
}

/// Crossing boundary of the doubly-discrete robust mixture at level params.alpha.
inline double ddrm_boundary(const GridAccumulator& acc, const HeavyParams& params,
                            double trunc_tol = 1e-9) {
    auto curve = make_wealth_curve(params, acc, trunc_tol);
    return curve.boundary(-std::log(params.alpha), boundary_tolerance(acc.t()));
}

// ---------------------------------------------------------------------------
// Quadrature reference for a single-q continuous mixture
// ---------------------------------------------------------------------------

/// Mixture wealth integral of exact-g wealth against
///   dF(lambda) = (q/2) lambda^{q/2-1} / lambda_max^{q/2} dlambda  on (0, lambda_max],
/// computed in the variable u = (lambda / lambda_max)^{q/2}, under which dF = du.
inline double quadrature_wealth(std::span<const Observation> history, double q, double lambda_max,
                                double y) {
    if (!(q > 1.0 && q <= 2.0)) throw DomainError("quadrature: q must lie in (1, 2]");
    const double power = 2.0 / q;
    auto integrand = [&](double u) {
        const double lambda = lambda_max * std::pow(u, power);
        double pen = 0.0;
        for (const auto& o : history) pen += g(lambda, o.x - o.x_hat);
        return std::exp(lambda * y - pen);
    };
    double err = 0.0;
    const double value =
        boost::math::quadrature::gauss_kronrod<double, 31>::integrate(integrand, 0.0, 1.0, 15, 1e-11, &err);
    if (!std::isfinite(value) || err > 1e-8 * std::fabs(value))
        throw NumericError("quadrature: integral did not converge");
    return value;
}

/// Continuous-mixture boundary (test reference; retains raw history).
inline double quadrature_boundary(std::span<const Observation> history, double q, const HeavyParams& params) {
    params.validate();
    detail::check_history(history);
    const double log_thr = -std::log(params.alpha);
    auto above = [&](double y) { return std::log(quadrature_wealth(history, q, params.lambda_max, y)) >= log_thr; };
    double lo = 0.0;
    double hi = 1.0;
    if (above(lo)) throw NumericError("quadrature: wealth exceeds threshold at y = 0");
    while (!above(hi)) {
        lo = hi;
        hi *= 2.0;
        if (hi > 1e12) throw NumericError("quadrature: no upper bracket");
    }
    return detail::bisect(above, lo, hi, boundary_tolerance(history.size())).second;
}

// ---------------------------------------------------------------------------
// Empirical-Bernstein gamma-exponential conjugate mixture
// ---------------------------------------------------------------------------

namespace detail {

// lgamma(a) - a log a + a, accurate for large a.
inline double stirling_remainder(double a) {
    if (a >= 10.0) {
        const double inv = 1.0 / a;
        const double inv2 = inv * inv;
        return -0.5 * std::log(a) + 0.5 * std::log(2.0 * std::numbers::pi) +
               inv * (1.0 / 12.0 - inv2 * (1.0 / 360.0 - inv2 * (1.0 / 1260.0 - inv2 / 1680.0)));
    }
    return std::lgamma(a) - a * std::log(a) + a;
}

}  // namespace detail

/// Log of the gamma-exponential mixture of the empirical-Bernstein wealth,
///   int_0^1 exp(lambda s - psi_E(lambda) v) f(lambda) dlambda,  f ∝ (1-lambda)^{rho-1} e^{rho lambda},
/// which equals
///   rho^rho / gamma(rho, rho) * e^{s+v} gamma(v+rho, s+v+rho) / (s+v+rho)^{v+rho}
/// with gamma(a, x) the lower incomplete gamma function. Requires s >= 0.
inline double eb_gamma_log_wealth(double s, double v, double rho) {
    if (!(rho > 0.0)) throw DomainError("eb_gamma: rho must be > 0");
    if (!(v >= 0.0)) throw DomainError("eb_gamma: v must be >= 0");
    if (!(s >= 0.0)) throw DomainError("eb_gamma: s must be >= 0");
    using boost::math::gamma_p;
    const double a = v + rho;
    // normalizer: rho log rho - log gamma(rho, rho)
    const double log_norm = rho * std::log(rho) - std::lgamma(rho) - std::log(gamma_p(rho, rho));
    // s + v - a log(s + a) + lgamma(a), rearranged to avoid cancellation
    const double body = a * detail::u_minus_log1p(s / a) - rho + detail::stirling_remainder(a);
    return log_norm + body + std::log(gamma_p(a, a + s));
}

/// Whether the gamma mixture at (s, v) reaches exp(log_threshold). Wealth at s <= 0 is at most 1.
inline bool eb_gamma_reaches(double s, double v, double rho, double log_threshold) {
    if (s <= 0.0) return log_threshold <= 0.0 && eb_gamma_log_wealth(0.0, v, rho) >= log_threshold;
    return eb_gamma_log_wealth(s, v, rho) >= log_threshold;
}

/// Empirical-Bernstein boundary at intrinsic time v (scale 1).
inline double eb_gamma_boundary(double v, double alpha, double rho = 1.0, double abs_tol = 1e-8) {
    if (!(alpha > 0.0 && alpha <= 1.0)) throw DomainError("eb_gamma: alpha must lie in (0, 1]");
    const double log_thr = -std::log(alpha);
    auto above = [&](double s) { return eb_gamma_reaches(s, v, rho, log_thr); };
    double lo = 0.0;
    if (above(lo)) return 0.0;
    double hi = 1.0;
    while (!above(hi)) {
        lo = hi;
        hi *= 2.0;
        if (hi > 1e300) throw NumericError("eb_gamma: no upper bracket");
    }
    return detail::bisect(above, lo, hi, abs_tol).second;
}

inline double eb_gamma_boundary(const EbAccumulator& acc, double alpha, double rho = 1.0) {
    return eb_gamma_boundary(acc.sum_sq_dev(), alpha, rho, boundary_tolerance(acc.t()));
}

}  // namespace heavycs
