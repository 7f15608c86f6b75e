// heavycs command-line tool: confidence-sequence trajectories from CSV input,
// simulated off-policy streams, coverage audits, and timing benchmarks.
#include <heavycs/heavycs.hpp>

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

using namespace heavycs;

namespace {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct CommonOpts {
    HeavyParams params;
    std::string method = "ddrm";
    double scale = 1.0;
    double eb_rho = 1.0;
    std::string out;
    std::string format = "csv";
};

void add_params(CLI::App* cmd, CommonOpts& o) {
    cmd->add_option("--alpha", o.params.alpha, "Error level in (0, 1]")->capture_default_str();
    cmd->add_option("--lambda-max", o.params.lambda_max, "Largest bet in the mixture grid")->capture_default_str();
    cmd->add_option("--xi", o.params.xi, "Geometric spacing of bets (> 1)")->capture_default_str();
    cmd->add_option("--r", o.params.r, "Zeta exponent of the moment mixture (> 1)")->capture_default_str();
    cmd->add_option("--k", o.params.k, "Grid base of the sketch (> 1)")->capture_default_str();
    cmd->add_option("--eta", o.params.eta, "Moment-mixture decay in (0, 1)")->capture_default_str();
    cmd->add_option("--method", o.method, "Boundary: ddrm, eb or both")
        ->check(CLI::IsMember({"ddrm", "eb", "both"}))
        ->capture_default_str();
    cmd->add_option("--rho", o.eb_rho, "Gamma-mixture parameter of the EB baseline")->capture_default_str();
}

void add_output(CLI::App* cmd, CommonOpts& o) {
    cmd->add_option("--out", o.out, "Output file (default stdout)");
    cmd->add_option("--format", o.format, "Output format")->check(CLI::IsMember({"csv"}))->capture_default_str();
}

CsConfig make_cs_config(const CommonOpts& o) {
    CsConfig cfg;
    cfg.params = o.params;
    cfg.method = parse_method(o.method);
    cfg.scale = o.scale;
    cfg.eb_rho = o.eb_rho;
    cfg.params.validate();
    if (!(cfg.scale > 0.0) || !std::isfinite(cfg.scale)) throw DomainError("--scale must be positive");
    if (!(cfg.eb_rho > 0.0)) throw DomainError("--rho must be positive");
    return cfg;
}

/// Output sink: file when --out is given, stdout otherwise.
class Sink {
public:
    explicit Sink(const std::string& path) {
        if (!path.empty()) {
            file_ = std::make_unique<std::ofstream>(path);
            if (!*file_) throw UsageError("cannot open output file '" + path + "'");
        }
    }
    std::ostream& os() { return file_ ? *file_ : std::cout; }

private:
    std::unique_ptr<std::ofstream> file_;
};

void write_row(std::ostream& os, const std::vector<double>& row, std::uint64_t t) {
    os << t;
    for (double v : row) os << ',' << format_real(v);
    os << '\n';
}

/// Whether step t is a boundary-evaluation step.
bool due(std::uint64_t t, std::uint64_t every) {
    if (every > 0) return t % every == 0;
    if (t <= 1000) return true;
    const std::uint64_t stride = (t + 999) / 1000;
    return t % stride == 0;
}

// ---------------------------------------------------------------------------
// cs
// ---------------------------------------------------------------------------

struct CsOpts {
    CommonOpts common;
    std::string in;
    std::uint64_t every = 0;
    bool running_max = false;
    bool per_side_alpha = false;
};

int run_cs(const CsOpts& o) {
    const CsConfig cfg = make_cs_config(o.common);
    std::ifstream file;
    if (!o.in.empty() && o.in != "-") {
        file.open(o.in);
        if (!file) throw UsageError("cannot open input file '" + o.in + "'");
    }
    std::istream& is = file.is_open() ? static_cast<std::istream&>(file) : std::cin;

    // Read every row first so that malformed input never produces partial output.
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t line_no = 0;
    std::size_t width = 0;
    while (std::getline(is, line)) {
        ++line_no;
        const auto body = trim(line);
        if (body.empty()) continue;
        auto row = parse_real_row(body);
        if (!row) {
            if (line_no == 1 && rows.empty()) continue;  // header
            throw DomainError("line " + std::to_string(line_no) + ": malformed row");
        }
        if (width == 0) {
            width = row->size();
            if (width < 2 || width > 4) throw DomainError("line " + std::to_string(line_no) +
                                                          ": expected t,x or t,w,r[,true_value]");
        } else if (row->size() != width) {
            throw DomainError("line " + std::to_string(line_no) + ": expected " + std::to_string(width) + " fields");
        }
        const double x = (*row)[1];
        if (!std::isfinite(x) || x < 0.0)
            throw DomainError("line " + std::to_string(line_no) + ": observation must be finite and >= 0");
        if (width >= 3 && !((*row)[2] >= 0.0 && (*row)[2] <= 1.0))
            throw DomainError("line " + std::to_string(line_no) + ": reward must lie in [0, 1]");
        rows.push_back(std::move(*row));
    }

    const bool ddrm = uses_ddrm(cfg.method);
    const bool eb = uses_eb(cfg.method);
    const bool off_policy = width >= 3;
    const bool with_truth = width == 4;

    Sink sink(o.common.out);
    std::ostream& os = sink.os();
    os << "t,sum_x";
    if (ddrm) os << (off_policy ? ",lower_ddrm,upper_ddrm" : ",lower_ddrm");
    if (eb) os << (off_policy ? ",lower_eb,upper_eb" : ",lower_eb");
    if (with_truth) os << ",true_value";
    os << '\n';
    if (rows.empty()) return 0;

    std::vector<double> out;
    if (!off_policy) {
        ConfidenceSequence cs(cfg);
        for (std::size_t i = 0; i < rows.size(); ++i) {
            cs.observe(rows[i][1]);
            const std::uint64_t t = cs.t();
            if (!due(t, o.every) && i + 1 != rows.size()) continue;
            const LowerBounds raw = cs.lower();
            const LowerBounds b = o.running_max ? cs.running_lower() : raw;
            out = {cs.sum_x()};
            if (ddrm) out.push_back(*b.ddrm);
            if (eb) out.push_back(*b.eb);
            write_row(os, out, t);
        }
    } else {
        if (cfg.scale != 1.0) throw DomainError("--scale is not used with t,w,r input");
        OffPolicyCs cs(cfg, !o.per_side_alpha);
        double sum_wr = 0.0;
        double true_sum = 0.0;
        for (std::size_t i = 0; i < rows.size(); ++i) {
            const double w = rows[i][1], r = rows[i][2];
            cs.observe(w, r);
            sum_wr += w * r;
            if (with_truth) true_sum += rows[i][3];
            const std::uint64_t t = cs.t();
            if (!due(t, o.every) && i + 1 != rows.size()) continue;
            const OffPolicyBounds raw = cs.bounds();
            const OffPolicyBounds b = o.running_max ? cs.running_bounds() : raw;
            out = {sum_wr};
            if (ddrm) {
                out.push_back(b.ddrm->lower);
                out.push_back(b.ddrm->upper);
            }
            if (eb) {
                out.push_back(b.eb->lower);
                out.push_back(b.eb->upper);
            }
            if (with_truth) out.push_back(true_sum / static_cast<double>(t));
            write_row(os, out, t);
        }
    }
    os.flush();
    return 0;
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

struct EnvOpts {
    std::string kind = "pareto";
    std::uint64_t seed = 1;
    double shape = 1.5;
    double reward_mean = 0.5;
    double epsilon = 0.1;
    double second_moment = 10.0;
};

void add_env(CLI::App* cmd, EnvOpts& e) {
    cmd->add_option("--kind", e.kind, "Environment: pareto or eps_greedy")
        ->check(CLI::IsMember({"pareto", "eps_greedy", "eps-greedy"}))
        ->capture_default_str();
    cmd->add_option("--shape", e.shape, "Pareto tail index in (1, 2)")->capture_default_str();
    cmd->add_option("--reward-mean", e.reward_mean, "Pareto environment reward mean")->capture_default_str();
    cmd->add_option("--epsilon", e.epsilon, "Exploration rate of the epsilon-greedy logger")->capture_default_str();
    cmd->add_option("--second-moment", e.second_moment, "Calibrated E[w^2] of the epsilon-greedy environment")
        ->capture_default_str();
}

EnvConfig make_env(const EnvOpts& e) {
    EnvConfig cfg;
    cfg.kind = parse_env_kind(e.kind);
    cfg.seed = e.seed;
    cfg.pareto.shape = e.shape;
    cfg.pareto.reward_mean = e.reward_mean;
    cfg.eps_greedy.epsilon = e.epsilon;
    cfg.eps_greedy.second_moment = e.second_moment;
    cfg.validate();
    if (cfg.kind == EnvKind::eps_greedy) cfg.eps_greedy.calibrated_agreement();
    return cfg;
}

int run_simulate(const EnvOpts& e, std::uint64_t horizon, const std::string& out_path) {
    const EnvConfig cfg = make_env(e);
    Sink sink(out_path);
    std::ostream& os = sink.os();
    os << "t,w,r,true_value\n";
    Environment env(cfg);
    for (std::uint64_t i = 0; i < horizon; ++i) {
        const SimRecord rec = env.next();
        os << rec.t << ',' << format_real(rec.w) << ',' << format_real(rec.r) << ',' << format_real(rec.true_value)
           << '\n';
    }
    os.flush();
    return 0;
}

// ---------------------------------------------------------------------------
// audit
// ---------------------------------------------------------------------------

unsigned audit_threads() {
    unsigned n = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("HEAVYCS_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end == env || *end != '\0' || v < 1) throw UsageError("HEAVYCS_THREADS must be a positive integer");
        n = std::min<unsigned>(n, static_cast<unsigned>(v));
    }
    return n;
}

/// Wilson score interval at 95%.
std::pair<double, double> wilson(std::size_t k, std::size_t n) {
    if (n == 0) return {0.0, 1.0};
    const double z = 1.959963984540054;
    const double p = static_cast<double>(k) / n;
    const double denom = 1.0 + z * z / n;
    const double centre = (p + z * z / (2.0 * n)) / denom;
    const double half = z * std::sqrt(p * (1.0 - p) / n + z * z / (4.0 * n * n)) / denom;
    return {k == 0 ? 0.0 : std::max(0.0, centre - half), k == n ? 1.0 : std::min(1.0, centre + half)};
}

int run_audit(const CommonOpts& c, const EnvOpts& e, std::size_t seeds, std::uint64_t horizon,
              const std::string& side) {
    AuditConfig cfg;
    cfg.env = make_env(e);
    cfg.cs = make_cs_config(c);
    if (cfg.cs.scale != 1.0) throw DomainError("--scale is not used by audit");
    cfg.side = side == "upper" ? AuditSide::upper : AuditSide::lower;
    cfg.seeds = seeds;
    cfg.horizon = horizon;
    cfg.first_seed = e.seed;
    cfg.threads = audit_threads();
    if (seeds == 0) throw DomainError("--seeds must be >= 1");
    const AuditResult res = coverage_audit(cfg);

    Sink sink(c.out);
    std::ostream& os = sink.os();
    os << "method,seeds,violations,rate,ci_low,ci_high,alpha\n";
    auto line = [&](const char* name, std::size_t v) {
        const auto [lo, hi] = wilson(v, res.seeds);
        os << name << ',' << res.seeds << ',' << v << ',' << format_real(static_cast<double>(v) / res.seeds) << ','
           << format_real(lo) << ',' << format_real(hi) << ',' << format_real(cfg.cs.params.alpha) << '\n';
    };
    if (uses_ddrm(cfg.cs.method)) line("ddrm", res.ddrm_violations);
    if (uses_eb(cfg.cs.method)) line("eb", res.eb_violations);
    os.flush();
    return 0;
}

// ---------------------------------------------------------------------------
// bench
// ---------------------------------------------------------------------------

int run_bench(const CommonOpts& c, std::uint64_t updates, std::uint64_t every, std::uint64_t seed) {
    const CsConfig cfg = make_cs_config(c);
    if (every == 0) throw DomainError("--every must be >= 1");
    using clock = std::chrono::steady_clock;
    ParetoStream stream(ParetoConfig{}, seed);
    std::vector<double> xs(updates);
    for (auto& x : xs) {
        const SimRecord rec = stream.next();
        x = rec.w * rec.r;
    }

    struct Row {
        const char* name;
        double update_s = 0.0;
        double boundary_ms = 0.0;
        std::size_t evals = 0;
        double final_lower = 0.0;
    };
    std::vector<Row> table;
    for (Method m : {Method::ddrm, Method::eb}) {
        if (m == Method::ddrm && !uses_ddrm(cfg.method)) continue;
        if (m == Method::eb && !uses_eb(cfg.method)) continue;
        CsConfig mc = cfg;
        mc.method = m;
        ConfidenceSequence cs(mc);
        Row row{m == Method::ddrm ? "ddrm" : "eb"};
        clock::duration upd{}, bnd{};
        for (std::uint64_t i = 0; i < updates; ++i) {
            auto t0 = clock::now();
            cs.observe(xs[i]);
            upd += clock::now() - t0;
            if ((i + 1) % every == 0 || i + 1 == updates) {
                t0 = clock::now();
                const auto b = cs.lower();
                bnd += clock::now() - t0;
                ++row.evals;
                row.final_lower = m == Method::ddrm ? *b.ddrm : *b.eb;
            }
        }
        row.update_s = std::chrono::duration<double>(upd).count();
        row.boundary_ms = std::chrono::duration<double, std::milli>(bnd).count() / static_cast<double>(row.evals);
        table.push_back(row);
    }

    Sink sink(c.out);
    std::ostream& os = sink.os();
    os << std::left << std::setw(8) << "method" << std::right << std::setw(12) << "updates" << std::setw(14)
       << "update_s" << std::setw(10) << "evals" << std::setw(16) << "boundary_ms" << std::setw(14) << "final_lower"
       << '\n';
    for (const auto& r : table) {
        os << std::left << std::setw(8) << r.name << std::right << std::setw(12) << updates << std::setw(14)
           << std::fixed << std::setprecision(4) << r.update_s << std::setw(10) << r.evals << std::setw(16)
           << std::setprecision(4) << r.boundary_ms << std::setw(14) << std::setprecision(6) << r.final_lower
           << '\n';
    }
    if (table.size() == 2 && table[1].boundary_ms > 0.0)
        os << "ddrm/eb boundary ratio: " << std::setprecision(1) << table[0].boundary_ms / table[1].boundary_ms
           << '\n';
    os.flush();
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Anytime-valid confidence sequences for heavy-tailed means"};
    app.require_subcommand(1);

    CsOpts cs;
    auto* cs_cmd = app.add_subcommand("cs", "Confidence-sequence trajectory from t,x or t,w,r[,true_value] rows");
    add_params(cs_cmd, cs.common);
    add_output(cs_cmd, cs.common);
    cs_cmd->add_option("--in", cs.in, "Input CSV (default stdin)");
    cs_cmd->add_option("--scale", cs.common.scale, "Known bound on every conditional mean")->capture_default_str();
    cs_cmd->add_option("--every", cs.every, "Evaluate the boundary every N steps (0: adaptive cadence)")
        ->capture_default_str();
    cs_cmd->add_flag("--running-max", cs.running_max, "Report the running intersection of the bounds");
    cs_cmd->add_flag("--per-side-alpha", cs.per_side_alpha, "Run each off-policy side at alpha instead of alpha/2");

    EnvOpts sim_env;
    std::uint64_t sim_horizon = 1000;
    std::string sim_out;
    std::string sim_format = "csv";
    auto* sim_cmd = app.add_subcommand("simulate", "Emit a simulated t,w,r,true_value stream");
    add_env(sim_cmd, sim_env);
    sim_cmd->add_option("--seed", sim_env.seed, "Random seed")->capture_default_str();
    sim_cmd->add_option("--horizon", sim_horizon, "Number of steps")->capture_default_str();
    sim_cmd->add_option("--out", sim_out, "Output file (default stdout)");
    sim_cmd->add_option("--format", sim_format, "Output format")->check(CLI::IsMember({"csv"}));

    CommonOpts audit_common;
    EnvOpts audit_env;
    std::size_t audit_seeds = 1000;
    std::uint64_t audit_horizon = 1000;
    std::string audit_side = "lower";
    auto* audit_cmd = app.add_subcommand("audit", "Coverage audit over many simulated seeds");
    add_params(audit_cmd, audit_common);
    add_output(audit_cmd, audit_common);
    add_env(audit_cmd, audit_env);
    audit_cmd->add_option("--seed", audit_env.seed, "First seed")->capture_default_str();
    audit_cmd->add_option("--seeds", audit_seeds, "Number of seeds")->capture_default_str();
    audit_cmd->add_option("--horizon", audit_horizon, "Steps per seed")->capture_default_str();
    audit_cmd->add_option("--side", audit_side, "Sequence audited: lower or upper")
        ->check(CLI::IsMember({"lower", "upper"}))
        ->capture_default_str();

    CommonOpts bench_common;
    bench_common.method = "both";
    std::uint64_t bench_updates = 1000000;
    std::uint64_t bench_every = 100000;
    std::uint64_t bench_seed = 1;
    auto* bench_cmd = app.add_subcommand("bench", "Time updates and boundary evaluations for both methods");
    add_params(bench_cmd, bench_common);
    add_output(bench_cmd, bench_common);
    bench_cmd->add_option("--horizon", bench_updates, "Number of updates")->capture_default_str();
    bench_cmd->add_option("--every", bench_every, "Evaluate the boundary every N updates")->capture_default_str();
    bench_cmd->add_option("--seed", bench_seed, "Random seed")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (*cs_cmd) return run_cs(cs);
        if (*sim_cmd) return run_simulate(sim_env, sim_horizon, sim_out);
        if (*audit_cmd) return run_audit(audit_common, audit_env, audit_seeds, audit_horizon, audit_side);
        if (*bench_cmd) return run_bench(bench_common, bench_updates, bench_every, bench_seed);
    } catch (const NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << '\n';
        return 3;
    } catch (const DomainError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
    return 2;
}
