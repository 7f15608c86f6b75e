// accumulators.hpp
//
// Streaming sufficient statistics for the log-wealth penalty
//   sum_s g(lambda, d_s),  g(lambda, x) = lambda x - log(1 + lambda x),  d_s = X_s - Xhat_s,
// evaluated for any bet lambda from O(log_k max|d|) state. Deviations d <= 0 and
// d in (0, 1] collapse to one quadratic statistic each; d > 1 is spread over an
// exponential grid {k^n} using the strong-convexity upper bound g_tilde >= g.
#pragma once

#include "special_functions.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>

namespace heavycs {

class SnapshotError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Exact log-wealth penalty g(lambda, x) = lambda x - log(1 + lambda x).
inline double g(double lambda, double x) {
    const double u = lambda * x;
    if (!(1.0 + u > 0.0)) throw DomainError("g: requires 1 + lambda * x > 0");
    return detail::u_minus_log1p(u);
}

/// psi_E(lambda) = -lambda - log(1 - lambda), the empirical-Bernstein cumulant bound.
inline double psi_e(double lambda) {
    if (!(lambda < 1.0)) throw DomainError("psi_e: requires lambda < 1");
    return detail::u_minus_log1p(-lambda);
}

namespace detail {

inline void check_bet(double lambda) {
    if (!(lambda >= 0.0 && lambda < 1.0)) throw DomainError("bet must lie in [0, 1)");
}

inline void check_grid_base(double k) {
    if (!(k > 1.0) || !std::isfinite(k)) throw DomainError("grid base k must be > 1");
}

// Grid knot k^n. Every caller goes through this so knots are bit-identical.
inline double grid_knot(double k, int n) { return std::pow(k, n); }

// n = floor(log_k d) for d > 1, adjusted so that grid_knot(n) <= d < grid_knot(n + 1).
inline int grid_cell(double k, double d) {
    int n = static_cast<int>(std::floor(std::log(d) / std::log(k)));
    n = std::max(n, 0);
    while (n > 0 && grid_knot(k, n) > d) --n;
    while (grid_knot(k, n + 1) <= d) ++n;
    return n;
}

// Strong-convexity correction coefficient for cell n:
// lambda^2 / (1 + lambda k^{n+1})^2 * (k - 1)^2 k^{2n}.
inline double cell_curvature(double lambda, double knot, double next_knot) {
    const double width = next_knot - knot;
    const double denom = 1.0 + lambda * next_knot;
    return lambda * lambda * width * width / (denom * denom);
}

// Kahan-compensated running sum.
class CompensatedSum {
public:
    void add(double v) {
        const double y = v - comp_;
        const double t = sum_ + y;
        comp_ = (t - sum_) - y;
        sum_ = t;
    }
    double value() const { return sum_; }
    void reset(double v) {
        sum_ = v;
        comp_ = 0.0;
    }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

}  // namespace detail

/// Piecewise upper bound g_tilde(lambda, x; k) >= g(lambda, x).
///
/// x in [-1, 0]: lambda^2 x^2 / (2 (1 - lambda))
/// x in (0, 1]:  lambda^2 x^2 / 2
/// x > 1:        chord of g between the grid knots k^n <= x < k^{n+1}, minus the
///               strong-convexity gap with modulus lambda^2 / (1 + lambda k^{n+1})^2.
/// Relative inflation of the knot chord so rounding never drops g_tilde below g.
inline constexpr double kChordRoundingSlack = 16.0 * std::numeric_limits<double>::epsilon();

inline double g_tilde(double lambda, double x, double k) {
    detail::check_bet(lambda);
    detail::check_grid_base(k);
    if (!(x >= -1.0)) throw DomainError("g_tilde: requires x >= -1");
    if (!std::isfinite(x)) throw DomainError("g_tilde: non-finite deviation");
    if (x <= 0.0) return lambda * lambda * x * x / (2.0 * (1.0 - lambda));
    if (x <= 1.0) return 0.5 * lambda * lambda * x * x;
    const int n = detail::grid_cell(k, x);
    const double x1 = detail::grid_knot(k, n);
    const double x2 = detail::grid_knot(k, n + 1);
    const double a = (x2 - x) / (x2 - x1);
    return (a * g(lambda, x1) + (1.0 - a) * g(lambda, x2)) * (1.0 + kChordRoundingSlack) -
           0.5 * a * (1.0 - a) * detail::cell_curvature(lambda, x1, x2);
}

/// Sublinear sketch of sum_s g_tilde(lambda, X_s - Xhat_s; k) plus first moments.
class GridAccumulator {
public:
    static constexpr int kSnapshotVersion = 1;

    struct Cell {
        double z = 0.0;  // chord weight on knot k^n
        double y = 0.0;  // accumulated alpha (1 - alpha) / 2 for deviations in [k^n, k^{n+1})
    };

    explicit GridAccumulator(double k = 1.5) : k_(k) { detail::check_grid_base(k); }

    /// Incorporate observation x >= 0 with its predictable forecast x_hat in [0, 1].
    void update(double x, double x_hat) {
        if (!(x >= 0.0) || !std::isfinite(x)) throw DomainError("update: x must be finite and >= 0");
        if (!(x_hat >= 0.0 && x_hat <= 1.0)) throw DomainError("update: x_hat must lie in [0, 1]");
        add_deviation(x - x_hat);
        ++t_;
        sum_x_.add(x);
    }

    /// Incorporate a raw deviation d = x - x_hat (d >= -1). Does not touch t or sum_x.
    void add_deviation(double d) {
        if (!(d >= -1.0) || !std::isfinite(d)) throw DomainError("deviation must be finite and >= -1");
        max_abs_ = std::max(max_abs_, std::fabs(d));
        if (d <= 0.0) {
            neg_sq_.add(d * d);
        } else if (d <= 1.0) {
            unit_sq_.add(d * d);
        } else {
            const int n = detail::grid_cell(k_, d);
            const double x1 = detail::grid_knot(k_, n);
            const double x2 = detail::grid_knot(k_, n + 1);
            const double a = (x2 - d) / (x2 - x1);
            Cell& lo = cells_[n];
            lo.z += a;
            lo.y += 0.5 * a * (1.0 - a);
            cells_[n + 1].z += 1.0 - a;
        }
    }

    /// sum_s g_tilde(lambda, d_s; k) reconstructed from the sketch.
    double sum_g_tilde(double lambda) const {
        detail::check_bet(lambda);
        if (lambda == 0.0) return 0.0;
        const double l2 = lambda * lambda;
        double total = l2 / (2.0 * (1.0 - lambda)) * neg_sq_.value() + 0.5 * l2 * unit_sq_.value();
        for (const auto& [n, cell] : cells_) {
            const double knot = detail::grid_knot(k_, n);
            if (cell.z != 0.0) total += cell.z * g(lambda, knot) * (1.0 + kChordRoundingSlack);
            if (cell.y != 0.0)
                total -= cell.y * detail::cell_curvature(lambda, knot, detail::grid_knot(k_, n + 1));
        }
        return total;
    }

    double k() const { return k_; }
    std::uint64_t t() const { return t_; }
    double sum_x() const { return sum_x_.value(); }
    double neg_sq() const { return neg_sq_.value(); }
    double unit_sq() const { return unit_sq_.value(); }
    double max_abs() const { return max_abs_; }
    const std::map<int, Cell>& cells() const { return cells_; }
    std::size_t cell_count() const { return cells_.size(); }

    friend bool operator==(const GridAccumulator& a, const GridAccumulator& b) {
        if (a.k_ != b.k_ || a.t_ != b.t_ || a.sum_x() != b.sum_x() || a.neg_sq() != b.neg_sq() ||
            a.unit_sq() != b.unit_sq() || a.max_abs_ != b.max_abs_ || a.cells_.size() != b.cells_.size())
            return false;
        auto it = b.cells_.begin();
        for (const auto& [n, c] : a.cells_) {
            if (it->first != n || it->second.z != c.z || it->second.y != c.y) return false;
            ++it;
        }
        return true;
    }

    nlohmann::json to_json() const {
        nlohmann::json cells = nlohmann::json::array();
        for (const auto& [n, c] : cells_) cells.push_back({{"n", n}, {"z", c.z}, {"y", c.y}});
        return {{"version", kSnapshotVersion}, {"k", k_},          {"t", t_},
                {"sum_x", sum_x()},             {"neg_sq", neg_sq()}, {"unit_sq", unit_sq()},
                {"cells", std::move(cells)},    {"max_abs", max_abs_}};
    }

    std::string serialize() const { return to_json().dump(); }

    static GridAccumulator from_json(const nlohmann::json& j) {
        try {
            if (!j.is_object()) throw SnapshotError("snapshot: expected a JSON object");
            const int version = j.at("version").get<int>();
            if (version != kSnapshotVersion)
                throw SnapshotError("snapshot: unsupported version " + std::to_string(version));
            GridAccumulator acc(j.at("k").get<double>());
            acc.t_ = j.at("t").get<std::uint64_t>();
            acc.sum_x_.reset(j.at("sum_x").get<double>());
            acc.neg_sq_.reset(j.at("neg_sq").get<double>());
            acc.unit_sq_.reset(j.at("unit_sq").get<double>());
            acc.max_abs_ = j.at("max_abs").get<double>();
            if (acc.neg_sq() < 0.0 || acc.unit_sq() < 0.0 || acc.max_abs_ < 0.0)
                throw SnapshotError("snapshot: negative statistic");
            for (const auto& c : j.at("cells")) {
                const int n = c.at("n").get<int>();
                if (n < 0) throw SnapshotError("snapshot: negative cell index");
                Cell cell{c.at("z").get<double>(), c.at("y").get<double>()};
                if (cell.z < 0.0 || cell.y < 0.0) throw SnapshotError("snapshot: negative cell weight");
                if (!acc.cells_.emplace(n, cell).second) throw SnapshotError("snapshot: duplicate cell");
            }
            return acc;
        } catch (const nlohmann::json::exception& e) {
            throw SnapshotError(std::string("snapshot: malformed payload: ") + e.what());
        } catch (const DomainError& e) {
            throw SnapshotError(std::string("snapshot: invalid value: ") + e.what());
        }
    }

    static GridAccumulator deserialize(std::string_view payload) {
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(payload);
        } catch (const nlohmann::json::exception& e) {
            throw SnapshotError(std::string("snapshot: parse error: ") + e.what());
        }
        return from_json(j);
    }

private:
    double k_;
    std::uint64_t t_ = 0;
    detail::CompensatedSum sum_x_;
    detail::CompensatedSum neg_sq_;
    detail::CompensatedSum unit_sq_;
    std::map<int, Cell> cells_;
    double max_abs_ = 0.0;
};

/// Sufficient statistics for the empirical-Bernstein supermartingale.
class EbAccumulator {
public:
    void update(double x, double x_hat) {
        if (!(x >= 0.0) || !std::isfinite(x)) throw DomainError("update: x must be finite and >= 0");
        if (!(x_hat >= 0.0 && x_hat <= 1.0)) throw DomainError("update: x_hat must lie in [0, 1]");
        const double d = x - x_hat;
        ++t_;
        sum_x_.add(x);
        sum_sq_dev_.add(d * d);
    }

    std::uint64_t t() const { return t_; }
    double sum_x() const { return sum_x_.value(); }
    double sum_sq_dev() const { return sum_sq_dev_.value(); }

private:
    std::uint64_t t_ = 0;
    detail::CompensatedSum sum_x_;
    detail::CompensatedSum sum_sq_dev_;
};

}  // namespace heavycs
