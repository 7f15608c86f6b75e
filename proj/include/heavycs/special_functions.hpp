// special_functions.hpp
//
// Scalar special functions used to build the mixture weights and the
// admissible bet range: principal-branch Lambert W, Riemann zeta,
// Jonquière polylogarithm on [0,1], and the q-growth constants x*(q), c*(q).
#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace heavycs {

class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

namespace detail {

// u - log(1 + u) without cancellation for small |u|.
inline double u_minus_log1p(double u) {
    if (std::fabs(u) < 0.05) {
        // alternating series sum_{k>=2} (-1)^k u^k / k; 14 terms reach 1e-19 at |u| = 0.05
        double term = u * u;
        double sum = 0.0;
        for (int k = 2; k < 16; ++k) {
            sum += (k % 2 == 0 ? term : -term) / k;
            term *= u;
        }
        return sum;
    }
    return u - std::log1p(u);
}

// Bisection on a monotone predicate: `above(x)` is false at lo and true at hi.
// Runs until the bracket is narrower than tol or cannot shrink further.
template <class Pred>
inline std::pair<double, double> bisect(Pred above, double lo, double hi, double tol,
                                        int max_iter = 400) {
    for (int i = 0; i < max_iter && hi - lo > tol; ++i) {
        const double mid = lo + 0.5 * (hi - lo);
        if (mid <= lo || mid >= hi) break;
        if (above(mid)) hi = mid;
        else lo = mid;
    }
    return {lo, hi};
}

}  // namespace detail

/// Principal branch W0 of the Lambert W function for real z >= -1/e.
inline double lambert_w0(double z) {
    constexpr double inv_e = 0.36787944117144232159552377016146;
    if (std::isnan(z)) throw DomainError("lambert_w0: NaN argument");
    if (z < -inv_e) {
        // allow rounding of -1/e itself
        if (z < -inv_e * (1.0 + 4.0 * std::numeric_limits<double>::epsilon()))
            throw DomainError("lambert_w0: argument below -1/e");
        return -1.0;
    }
    if (z == 0.0) return 0.0;
    if (std::isinf(z)) return z;

    double w;
    const double p2 = 2.0 * (std::numbers::e * z + 1.0);
    if (p2 < 0.25) {
        // branch-point series in p = sqrt(2(ez + 1))
        const double p = std::sqrt(std::max(p2, 0.0));
        w = -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p * p * p;
        if (p2 <= 0.0) return -1.0;
    } else if (z < 3.0) {
        w = std::log1p(z);
        w = w * (1.0 - std::log1p(w) / (2.0 + w));
    } else {
        const double l1 = std::log(z);
        const double l2 = std::log(l1);
        w = l1 - l2 + l2 / l1;
    }
    // Halley iterations
    for (int i = 0; i < 64; ++i) {
        const double ew = std::exp(w);
        const double f = w * ew - z;
        const double wp1 = w + 1.0;
        if (wp1 == 0.0) break;
        const double denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1);
        const double step = f / denom;
        w -= step;
        if (std::fabs(step) <= 1e-16 * (1.0 + std::fabs(w))) break;
    }
    return w;
}

/// Largest bet for which the q-growth inequality holds: 1 + W0(-e^{-2}) ≈ 0.841406.
inline double max_admissible_bet() {
    static const double cap = 1.0 + lambert_w0(-std::exp(-2.0));
    return cap;
}

/// Riemann zeta for real r > 1 via Euler-Maclaurin summation (N = 16, 10 Bernoulli terms).
inline double riemann_zeta(double r) {
    if (!(r > 1.0)) throw DomainError("riemann_zeta: requires r > 1");
    if (std::isinf(r)) return 1.0;
    constexpr int N = 16;
    // B_{2k} / (2k)!
    static constexpr double bern[] = {
        1.0 / 12.0,
        -1.0 / 720.0,
        1.0 / 30240.0,
        -1.0 / 1209600.0,
        1.0 / 47900160.0,
        -691.0 / 1307674368000.0,
        1.0 / 74724249600.0,
        -3617.0 / 10670622842880000.0,
        43867.0 / 5109094217170944000.0,
        -174611.0 / 802857662698291200000.0,
    };
    double sum = 0.0;
    for (int m = N - 1; m >= 1; --m) sum += std::pow(static_cast<double>(m), -r);
    const double n = N;
    sum += std::pow(n, 1.0 - r) / (r - 1.0) + 0.5 * std::pow(n, -r);
    // sum_k B_2k/(2k)! * r(r+1)...(r+2k-2) * N^{-r-2k+1}
    double rising = r;
    double npow = std::pow(n, -r - 1.0);
    for (int k = 0; k < 10; ++k) {
        sum += bern[k] * rising * npow;
        rising *= (r + 2 * k + 1) * (r + 2 * k + 2);
        npow /= n * n;
    }
    return sum;
}

/// Jonquière polylogarithm Li_r(eta) = sum_{m>=1} eta^m m^{-r} for r > 1, eta in [0,1].
///
/// Direct summation stopped once the geometric tail bound
/// eta^{M+1} (M+1)^{-r} / (1 - eta) falls below 1e-13 of the partial sum.
inline double polylog(double r, double eta) {
    if (!(r > 1.0)) throw DomainError("polylog: requires r > 1");
    if (!(eta >= 0.0 && eta <= 1.0)) throw DomainError("polylog: requires eta in [0,1]");
    if (eta == 0.0) return 0.0;
    if (eta == 1.0) return riemann_zeta(r);
    constexpr std::int64_t max_terms = 200'000'000;
    double sum = 0.0;
    double comp = 0.0;
    double power = 1.0;
    for (std::int64_t m = 1; m <= max_terms; ++m) {
        power *= eta;
        const double term = power * std::pow(static_cast<double>(m), -r);
        const double yk = term - comp;
        const double tk = sum + yk;
        comp = (tk - sum) - yk;
        sum = tk;
        const double tail = power * eta / (1.0 - eta) * std::pow(static_cast<double>(m + 1), -r);
        if (tail <= 1e-13 * sum || power == 0.0) return sum;
    }
    throw DomainError("polylog: eta too close to 1 for direct summation");
}

/// beta(x) = x^2 / ((1 + x)(x - log(1 + x))), strictly decreasing from 2 to 1 on x > 0.
inline double qgrowth_beta(double x) {
    return x * x / ((1.0 + x) * detail::u_minus_log1p(x));
}

struct QGrowthConstants {
    double q;
    double x_star;
    double c_star;
};

/// Solves beta(x*) = q and returns c*(q) = x*^{2-q}; c*(2) = 1 by continuity.
inline QGrowthConstants q_growth_constants(double q) {
    if (!(q > 1.0 && q <= 2.0)) throw DomainError("q_growth_constants: requires q in (1,2]");
    if (q == 2.0) return {q, 0.0, 1.0};
    // bracket: beta(lo) > q > beta(hi)
    double lo = 1.0;
    double hi = 1.0;
    while (qgrowth_beta(lo) <= q) {
        lo *= 0.5;
        if (lo < 1e-300) throw DomainError("q_growth_constants: q too close to 2");
    }
    while (qgrowth_beta(hi) >= q) {
        hi *= 2.0;
        if (hi > 1e300) throw DomainError("q_growth_constants: q too close to 1");
    }
    auto [a, b] = detail::bisect([q](double x) { return qgrowth_beta(x) < q; }, lo, hi, 0.0);
    const double x_star = 0.5 * (a + b);
    return {q, x_star, std::pow(x_star, 2.0 - q)};
}

}  // namespace heavycs
