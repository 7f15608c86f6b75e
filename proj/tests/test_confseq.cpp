#include <catch_amalgamated.hpp>

#include <heavycs/confseq.hpp>
#include <heavycs/rng.hpp>
#include <heavycs/simulator.hpp>

#include <cmath>
#include <vector>

using namespace heavycs;
using Catch::Approx;

namespace {

// Brute-force DDRM root from the retained history: explicit sums over 400 bets,
// each penalty recomputed from every stored deviation, plain bisection.
double oracle_boundary(const std::vector<double>& devs, const HeavyParams& p) {
    const double mass_factor = 1.0 + polylog(p.r, p.eta) / (p.eta * riemann_zeta(p.r));
    std::vector<double> lz, lam, pen;
    for (int j = 0; j < 400; ++j) {
        lz.push_back(std::log(0.5 * (p.xi - 1.0) / std::pow(p.xi, 1.0 + j) * mass_factor));
        lam.push_back(p.lambda_max / std::pow(p.xi, j + 0.5));
        double s = 0.0;
        for (double d : devs) s += g_tilde(lam.back(), d, p.k);
        pen.push_back(s);
    }
    auto log_wealth = [&](double y) {
        double m = -INFINITY;
        for (int j = 0; j < 400; ++j) m = std::max(m, lz[j] + lam[j] * y - pen[j]);
        double s = 0.0;
        for (int j = 0; j < 400; ++j) s += std::exp(lz[j] + lam[j] * y - pen[j] - m);
        return m + std::log(s);
    };
    const double thr = -std::log(p.alpha);
    double lo = 0.0, hi = 1.0;
    while (log_wealth(hi) < thr) {
        lo = hi;
        hi *= 2.0;
    }
    for (int i = 0; i < 200 && hi - lo > 1e-10 * hi; ++i) {
        const double mid = 0.5 * (lo + hi);
        (log_wealth(mid) >= thr ? hi : lo) = mid;
    }
    return hi;
}

}  // namespace

TEST_CASE("shrunk-mean predictor examples", "[confseq]") {
    auto p = Predictor::shrunk_mean();
    CHECK(p.predict() == 0.5);
    for (int i = 0; i < 9; ++i) p.observe(0.0);
    CHECK(p.predict() == Approx(0.05).epsilon(1e-15));
    auto q = Predictor::shrunk_mean();
    for (int i = 0; i < 9; ++i) q.observe(1.0);
    CHECK(q.predict() == Approx(0.95).epsilon(1e-15));
    auto big = Predictor::shrunk_mean();
    big.observe(1e9);  // clipped at 1
    CHECK(big.predict() == Approx(0.75).epsilon(1e-15));
    CHECK(Predictor::custom([](std::uint64_t, double) { return 3.0; }).predict() == 1.0);
    CHECK_THROWS_AS(Predictor::constant(1.5), DomainError);
}

TEST_CASE("lower bound examples", "[confseq]") {
    SECTION("t = 0 has no bound") {
        ConfidenceSequence cs;
        CHECK_THROWS_AS(cs.lower(), std::logic_error);
        CHECK_FALSE(cs.ddrm_exceeds(0.0));
    }
    SECTION("all-zero stream stays at zero") {
        ConfidenceSequence cs(CsConfig{.method = Method::both});
        LowerBounds b;
        for (int i = 0; i < 1000; ++i) b = cs.update(0.0);
        CHECK(*b.ddrm == 0.0);
        CHECK(*b.eb == 0.0);
    }
    SECTION("constant x = 1 for 1e4 steps matches the brute-force root") {
        const HeavyParams p;
        ConfidenceSequence cs;
        std::vector<double> devs;
        for (int i = 0; i < 10000; ++i) {
            devs.push_back(1.0 - cs.next_prediction());
            cs.observe(1.0);
        }
        const double b = oracle_boundary(devs, p);
        const double expected = (10000.0 - b) / 10000.0;
        const double got = *cs.lower().ddrm;
        CHECK(got == Approx(expected).margin(1e-9));
        CHECK(got > 0.97);
        CHECK(got < 1.0);
    }
    SECTION("scale multiplies through") {
        CsConfig c1, c5;
        c5.scale = 5.0;
        ConfidenceSequence a(c1), b(c5);
        CounterRng rng(8, RngPurpose::test);
        for (int i = 0; i < 500; ++i) {
            const double x = rng.pareto(1.0 / 3.0, 1.5);
            a.observe(x);
            b.observe(5.0 * x);
        }
        CHECK(*b.lower().ddrm == Approx(5.0 * *a.lower().ddrm).epsilon(1e-12));
        CHECK(b.sum_x() == Approx(5.0 * a.sum_x()).epsilon(1e-12));
    }
    SECTION("invalid observations") {
        ConfidenceSequence cs;
        CHECK_THROWS_AS(cs.observe(-0.1), DomainError);
        CHECK_THROWS_AS(cs.observe(std::nan("")), DomainError);
        CHECK(cs.t() == 0);
    }
}

TEST_CASE("predictions depend only on the past", "[confseq][property]") {
    CounterRng rng(13, RngPurpose::test);
    std::vector<double> xs;
    for (int i = 0; i < 300; ++i) xs.push_back(rng.pareto(0.5, 1.5));
    std::vector<std::uint64_t> seen;
    auto rule = [&seen](std::uint64_t n, double s) {
        seen.push_back(n);
        return n ? s / static_cast<double>(n) : 0.5;
    };
    ConfidenceSequence a(CsConfig{}, Predictor::custom(rule));
    ConfidenceSequence b;
    std::vector<double> pred_b;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        pred_b.push_back(b.next_prediction());
        a.observe(xs[i]);
        b.observe(xs[i]);
    }
    for (std::size_t i = 0; i < seen.size(); ++i) REQUIRE(seen[i] == i);

    // replay with a perturbed future: every earlier forecast is unchanged
    for (std::size_t cut : {0u, 1u, 50u, 299u}) {
        ConfidenceSequence c;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            REQUIRE(c.next_prediction() == pred_b[i]);
            if (i == cut) break;
            c.observe(xs[i]);
        }
    }
}

TEST_CASE("wealth-check decisions agree with the reported bound", "[confseq][property]") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        ConfidenceSequence cs(CsConfig{.method = Method::both});
        CounterRng rng(seed, RngPurpose::test);
        for (int t = 1; t <= 400; ++t) {
            cs.observe(rng.pareto(1.0 / 3.0, 1.5) * (rng.bernoulli(0.5) ? 1.0 : 0.0));
            if (t % 40 != 0) continue;
            const auto lb = cs.lower();
            const double tol = 1e-6;
            for (double theta : {0.0, 0.1, 0.3, *lb.ddrm - tol, *lb.ddrm + tol}) {
                if (theta < 0.0 || *lb.ddrm <= 0.0) continue;
                REQUIRE(cs.ddrm_exceeds(theta) == (*lb.ddrm > theta));
            }
            for (double theta : {*lb.eb - tol, *lb.eb + tol}) {
                if (theta < 0.0 || *lb.eb <= 0.0) continue;
                REQUIRE(cs.eb_exceeds(theta) == (*lb.eb > theta));
            }
        }
    }
}

TEST_CASE("running maxima are monotone and dominate the raw bounds", "[confseq][property]") {
    ConfidenceSequence cs(CsConfig{.method = Method::both});
    CounterRng rng(21, RngPurpose::test);
    double prev_d = 0.0, prev_e = 0.0;
    for (int t = 1; t <= 1500; ++t) {
        const auto raw = cs.update(rng.pareto(1.0 / 3.0, 1.5) * (rng.bernoulli(0.5) ? 1.0 : 0.0));
        const auto run = cs.running_lower();
        REQUIRE(*run.ddrm >= prev_d);
        REQUIRE(*run.eb >= prev_e);
        REQUIRE(*run.ddrm >= *raw.ddrm);
        REQUIRE(*raw.ddrm >= 0.0);
        REQUIRE(*raw.ddrm <= 1.0);
        prev_d = *run.ddrm;
        prev_e = *run.eb;
    }
    CHECK(prev_d > 0.2);
}

TEST_CASE("off-policy examples", "[confseq][offpolicy]") {
    SECTION("a single observation gives the trivial interval") {
        OffPolicyCs cs;
        const auto b = cs.update(1.0, 1.0);
        CHECK(b.ddrm->lower == 0.0);
        CHECK(b.ddrm->upper == 1.0);
        CHECK_FALSE(b.eb.has_value());
    }
    SECTION("alpha split halves each side") {
        CsConfig cfg;
        cfg.params.alpha = 0.1;
        OffPolicyCs split(cfg, true), full(cfg, false);
        CHECK(split.lower_side().config().params.alpha == Approx(0.05));
        CHECK(full.lower_side().config().params.alpha == Approx(0.1));
        cfg.scale = 2.0;
        CHECK_THROWS_AS(OffPolicyCs(cfg), DomainError);
    }
    SECTION("invalid pairs") {
        OffPolicyCs cs;
        CHECK_THROWS_AS(cs.observe(-1.0, 0.5), DomainError);
        CHECK_THROWS_AS(cs.observe(1.0, 1.5), DomainError);
    }
}

TEST_CASE("off-policy interval is ordered and contains the value", "[confseq][offpolicy][property]") {
    for (EnvKind kind : {EnvKind::pareto, EnvKind::eps_greedy}) {
        for (std::uint64_t seed = 1; seed <= 4; ++seed) {
            EnvConfig env;
            env.kind = kind;
            env.seed = seed;
            Environment e(env);
            OffPolicyCs cs(CsConfig{.method = Method::both});
            double true_sum = 0.0;
            for (int t = 1; t <= 2000; ++t) {
                const auto rec = e.next();
                true_sum += rec.true_value;
                cs.observe(rec.w, rec.r);
                if (t % 100 != 0) continue;
                const auto b = cs.bounds();
                for (const auto& iv : {*b.ddrm, *b.eb}) {
                    REQUIRE(0.0 <= iv.lower);
                    REQUIRE(iv.lower <= iv.upper);
                    REQUIRE(iv.upper <= 1.0);
                }
                const double theta = true_sum / t;
                CHECK(b.ddrm->lower <= theta);
                CHECK(b.ddrm->upper >= theta);
            }
        }
    }
}

TEST_CASE("desk-scale coverage on the Pareto environment", "[confseq][coverage]") {
    AuditConfig cfg;
    cfg.env.kind = EnvKind::pareto;
    cfg.cs.method = Method::both;
    cfg.cs.params.alpha = 0.1;
    cfg.seeds = 200;
    cfg.horizon = 300;
    cfg.threads = 4;
    const auto res = coverage_audit(cfg);
    const double se = std::sqrt(0.1 * 0.9 / 200.0);
    CHECK(res.ddrm_rate() <= 0.1 + 2.0 * se);
    CHECK(res.eb_rate() <= 0.1 + 2.0 * se);
}
