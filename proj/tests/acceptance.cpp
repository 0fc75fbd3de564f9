// Acceptance run: one PASS/FAIL line per criterion. Exit status counts failures that
// were not listed with --expect-fail.

#include "cli.hpp"
#include "cmdplp/basis.hpp"
#include "cmdplp/evaluation.hpp"
#include "cmdplp/linalg.hpp"
#include "cmdplp/resolve.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

#include "CLI11.hpp"

#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

using namespace cmdplp;
namespace fs = std::filesystem;

namespace {

struct Verdict {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---- 1: Err(N) trend on the default 10x10, K = 5 recipe ----

Verdict error_trend() {
    const auto t0 = std::chrono::steady_clock::now();
    const auto inst = fixture::standard(10, 10, 5, 1);
    const Vector q_star = solve_restricted_primal(build_infinite_lp(inst), {}).q;
    const std::vector<double> qs(q_star.data(), q_star.data() + q_star.size());
    const auto truth = identify_basis_true(build_infinite_lp(inst)).basis;
    const std::vector<std::uint64_t> grid{1000, 3000, 10000, 30000};
    const std::size_t M = 50;
    std::vector<std::vector<std::vector<double>>> runs(grid.size());
    std::size_t matched = 0;
    ResolveOptions o;
    o.n1 = 100000;
    o.confidence_scale = 1e-5;
    for (std::size_t m = 0; m < M; ++m) {
        Rng rng = Rng::derive(2024, m);
        const auto p1 = generative_phase_one(inst, o, rng);
        if (p1.basis == truth) ++matched;
        for (std::size_t g = 0; g < grid.size(); ++g) {
            auto og = o;
            og.n2 = grid[g];
            Rng r = rng;
            const auto out = continue_adaptive_resolving(inst, p1, og, r);
            runs[g].emplace_back(out.q_bar.data(), out.q_bar.data() + out.q_bar.size());
        }
    }
    std::vector<double> err;
    for (const auto& r : runs) err.push_back(err_metric(r, qs));
    bool decreasing = true;
    for (std::size_t g = 1; g < err.size(); ++g) decreasing = decreasing && err[g] < err[g - 1];
    const bool ratio = err[3] <= 0.6 * err[1];
    const double secs = seconds_since(t0);
    return {decreasing && ratio && secs <= 600.0,
            fmt("Err = %.4f, %.4f, %.4f, %.4f; Err(3e4)/Err(3e3) = %.3f (<= 0.6); basis matched %zu/%zu; %.0f s",
                err[0], err[1], err[2], err[3], err[3] / err[1], matched, M, secs)};
}

// ---- 2: basis recovery by the doubling driver ----

Verdict basis_recovery(double confidence_scale, std::size_t stop_after = 0) {
    int matched = 0, verified = 0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const auto inst = fixture::standard(4, 4, 2, seed);
        const auto lp = build_infinite_lp(inst);
        const auto truth = identify_basis_true(lp).basis;
        DoublingOptions d;
        d.params = {identification_epsilon(inst, 0.1), 1, inst.observation_width(), confidence_scale};
        d.n_start = 1024;
        d.sample_budget = 1u << 20;
        d.stop_after_agreeing = stop_after;
        Rng rng = Rng::derive(1, seed);
        const auto r = identify_basis_doubling(inst, d, rng);
        if (r.basis == truth && r.samples_used <= d.sample_budget) {
            ++matched;
            if (verify_basis(lp, r.basis).pass) ++verified;
        }
    }
    return {matched >= 18 && verified == matched,
            fmt("%d/20 matched within 2^20 samples (>= 18), %d/%d matches verified, confidence scale %g%s", matched,
                verified, matched, confidence_scale, stop_after ? ", early stop" : "")};
}

// ---- 3: regret scaling ----

Verdict regret_scaling() {
    const auto inst = fixture::standard(5, 5, 2, 1);
    const auto lp = build_infinite_lp(inst);
    const double v = solve_restricted_primal(lp, {}).value;
    const std::uint64_t lo = 1u << 12, hi = 1u << 16;
    double gap_lo = 0, gap_hi = 0, res_lo = 0, res_hi = 0;
    const int seeds = 10;
    ResolveOptions o;
    o.n1 = 30000;
    o.confidence_scale = 1e-5;
    for (int m = 0; m < seeds; ++m) {
        Rng rng = Rng::derive(77, static_cast<std::uint64_t>(m));
        const auto p1 = generative_phase_one(inst, o, rng);
        for (std::uint64_t n2 : {lo, hi}) {
            auto on = o;
            on.n2 = n2;
            Rng r = rng;
            const auto out = continue_adaptive_resolving(inst, p1, on, r);
            double earned = 0.0;
            for (const auto& q : out.rounds)
                for (std::size_t j = 0; j < out.basis.cols.size(); ++j)
                    earned += lp.objective(static_cast<Eigen::Index>(out.basis.cols[j])) * q(static_cast<Eigen::Index>(j));
            const double gap = static_cast<double>(n2) * v - earned;
            const double res = out.alpha_final.size() ? out.alpha_final.cwiseAbs().maxCoeff() : 0.0;
            (n2 == lo ? gap_lo : gap_hi) += gap / seeds;
            (n2 == lo ? res_lo : res_hi) += res / seeds;
        }
    }
    const double gap_ratio = std::abs(gap_hi) / std::abs(gap_lo);
    const double res_ratio = res_hi / res_lo;
    return {gap_ratio <= 2.5 && res_ratio <= 2.5,
            fmt("mean gap %.3f -> %.3f (ratio %.2f, <= 2.5); mean max |alpha| %.3f -> %.3f (ratio %.2f, <= 2.5)",
                gap_lo, gap_hi, gap_ratio, res_lo, res_hi, res_ratio)};
}

// ---- 4: oracle equivalence ----

Verdict oracle_equivalence() {
    double worst_vi = 0.0, worst_dp = 0.0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const auto m = fixture::standard(6, 4, 0, seed);
        const auto sol = solve_restricted_primal(build_infinite_lp(m), {});
        const double vi = oracle::start_value(m, oracle::value_iteration(m));
        worst_vi = std::max(worst_vi, std::abs(sol.value - (1.0 - m.gamma) * vi));
    }
    int episodic = 0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed)
        for (std::size_t H = 1; H <= 3; ++H) {
            RandomEpisodicConfig cfg;
            cfg.horizon = H;
            cfg.seed = seed;
            const auto m = random_episodic_instance(cfg);
            const auto sol = solve_restricted_primal(build_finite_lp(m), {});
            worst_dp = std::max(worst_dp, std::abs(sol.value - oracle::backward_induction(m)));
            ++episodic;
        }
    return {worst_vi <= 1e-6 && worst_dp <= 1e-8,
            fmt("K=0: max |LP - (1-gamma) VI| = %.2e over 10 (<= 1e-6); H<=3: max |LP - DP| = %.2e over %d (<= 1e-8)",
                worst_vi, worst_dp, episodic)};
}

// ---- 5: duality, projection and sigma_min checks ----

Verdict system_checks() {
    Rng pick(2024);
    int solves = 0, dual_ok = 0;
    double worst_gap = 0.0;
    for (std::uint64_t seed = 1; solves < 200; ++seed) {
        const std::size_t S = 2 + seed % 5, A = 2 + seed % 3, K = seed % 4;
        const auto m = (seed % 2) ? fixture::standard(S, A, K, seed)
                                  : fixture::unit_scale(S, A, K, 0.5 + 0.4 * pick.uniform(), seed);
        const auto lp = build_infinite_lp(m);
        std::vector<std::size_t> fixed;
        for (std::size_t j = 0; j < lp.num_cols(); ++j)
            if (pick.uniform() < 0.2) fixed.push_back(j);
        const auto sol = solve_restricted_primal(lp, fixed);
        if (sol.status != LpStatus::Optimal) continue;
        ++solves;
        const double gap = std::abs(sol.value - (lp.budgets.dot(sol.dual_y) + lp.flow_rhs.dot(sol.dual_z)));
        worst_gap = std::max(worst_gap, gap);
        if (gap <= 1e-8) ++dual_ok;
    }

    Rng rng(42);
    double worst_proj = 0.0;
    for (int t = 0; t < 100; ++t) {
        const auto n = static_cast<Eigen::Index>(1 + rng.next_u64() % 6);
        Vector v(n);
        for (Eigen::Index i = 0; i < n; ++i) v(i) = rng.uniform(-1.0, 2.0);
        const double lower = t % 3 == 0 ? rng.uniform(0.0, 2.0 / static_cast<double>(n)) : 0.0;
        worst_proj = std::max(worst_proj, (project_capped_simplex(v, 2.0, lower) -
                                           oracle::capped_simplex_projection(v, 2.0, lower)).cwiseAbs().maxCoeff());
    }

    int sigma_ok = 0;
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
        Rng r(seed * 31);
        const auto rows = static_cast<Eigen::Index>(2 + seed % 6), cols = static_cast<Eigen::Index>(2 + seed % 4);
        Matrix a(rows, cols), e(rows, cols);
        for (Eigen::Index i = 0; i < rows; ++i)
            for (Eigen::Index j = 0; j < cols; ++j) a(i, j) = r.uniform(-1.0, 1.0);
        const double size = 0.2 * r.uniform();
        for (Eigen::Index i = 0; i < rows; ++i)
            for (Eigen::Index j = 0; j < cols; ++j) e(i, j) = size * r.uniform(-1.0, 1.0);
        const double e2 = Eigen::JacobiSVD<Matrix>(e).singularValues()(0);
        if (std::abs(smallest_singular_value(a) - smallest_singular_value(a + e)) <= e2 + 1e-12) ++sigma_ok;
    }
    return {dual_ok == 200 && worst_proj <= 1e-8 && sigma_ok == 100,
            fmt("duality gap <= 1e-8 on %d/200 (worst %.1e); projection worst %.1e (<= 1e-8); "
                "sigma_min perturbation %d/100",
                dual_ok, worst_gap, worst_proj, sigma_ok)};
}

// ---- 6: exact vs Monte Carlo ----

Verdict monte_carlo() {
    int agree = 0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const auto m = fixture::standard(6, 3, 1, seed);
        Rng prng = Rng::derive(seed, 0);
        PolicyTable pi = PolicyTable::uniform(6, 3);
        for (std::size_t s = 0; s < 6; ++s) {
            double total = 0.0;
            for (std::size_t a = 0; a < 3; ++a) total += pi.probs[s * 3 + a] = prng.uniform(0.05, 1.0);
            for (std::size_t a = 0; a < 3; ++a) pi.probs[s * 3 + a] /= total;
        }
        const auto exact = evaluate_exact(m, pi);
        MonteCarloOptions o;
        o.rollouts = 10000;
        Rng rng = Rng::derive(seed, 1);
        const auto mc = evaluate_monte_carlo(m, pi, o, rng);
        bool ok = std::abs(mc.v_reward - exact.v_reward) <= 3.0 * mc.se_reward;
        for (std::size_t k = 0; k < m.num_constraints(); ++k)
            ok = ok && std::abs(mc.v_costs[k] - exact.v_costs[k]) <= 3.0 * mc.se_costs[k];
        if (ok) ++agree;
    }
    return {agree == 20, fmt("%d/20 (instance, policy) pairs within 3 SE, 1e4 rollouts each", agree)};
}

// ---- 7: determinism of the CLI outputs ----

struct CliRun {
    int code;
    std::string out;
};

CliRun cli_run(std::vector<std::string> args) {
    args.insert(args.begin(), "cmdplp");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str()};
}

std::string slurp(const std::string& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Verdict determinism() {
    const fs::path dir = fs::temp_directory_path() / ("cmdplp_acceptance_" + std::to_string(::getpid()));
    fs::create_directories(dir);
    auto path = [&](const std::string& name) { return (dir / name).string(); };
    std::vector<std::string> diffs;
    int compared = 0;
    // Each command runs twice; file outputs and stdout must match byte for byte.
    auto twice = [&](const std::string& label, std::vector<std::string> args, std::vector<std::string> files) {
        std::vector<std::string> first_files;
        CliRun first{};
        for (int pass = 0; pass < 2; ++pass) {
            const auto r = cli_run(args);
            std::vector<std::string> got;
            for (const auto& f : files) got.push_back(slurp(path(f)));
            if (r.code != 0) diffs.push_back(label + " exit " + std::to_string(r.code));
            if (pass == 0) {
                first = r;
                first_files = got;
            } else {
                ++compared;
                if (r.out != first.out || got != first_files) diffs.push_back(label);
            }
            for (const auto& f : files) fs::remove(path(f));
        }
    };
    twice("gen", {"gen", "--states", "10", "--actions", "10", "--gamma", "0.7", "--k", "5", "--seed", "1", "-o", path("app.json")},
          {"app.json"});
    cli_run({"gen", "--states", "10", "--actions", "10", "--gamma", "0.7", "--k", "5", "--seed", "1", "-o", path("app.json")});
    cli_run({"gen", "--states", "3", "--actions", "3", "--gamma", "0.7", "--k", "1", "--seed", "2", "-o", path("toy.json")});
    twice("solve", {"solve", path("app.json"), "--subset-limit", "512", "--lp-out", path("lp.txt")}, {"lp.txt"});
    twice("identify", {"identify", path("toy.json"), "--n0", "5000", "--confidence-scale", "1e-5", "--seed", "4"}, {});
    twice("identify --doubling", {"identify", path("toy.json"), "--doubling", "--confidence-scale", "1e-5"}, {});
    twice("run", {"run", path("toy.json"), "--n1", "2000", "--n2", "300", "--confidence-scale", "1e-5", "--seed", "3",
                  "--trace", path("trace.csv"), "-o", path("run.json")},
          {"trace.csv", "run.json"});
    for (const std::string mode : {"generative", "offpolicy", "onpolicy"})
        twice("experiment " + mode,
              {"experiment", path("toy.json"), "--mode", mode, "--grid", "100,300", "-M", "3", "--n1", "3000",
               "--confidence-scale", "1e-5", "--seed", "9", "-o", path("exp.csv")},
              {"exp.csv"});
    // worker count does not change the rows
    const std::vector<std::string> base{"experiment", path("toy.json"), "--grid", "100,300", "-M", "4",
                                        "--n1",       "3000",           "--confidence-scale", "1e-5"};
    auto jobs = base;
    jobs.insert(jobs.end(), {"--jobs", "3"});
    ++compared;
    if (cli_run(base).out != cli_run(jobs).out) diffs.push_back("experiment --jobs");
    fs::remove_all(dir);
    std::string detail = fmt("%d output pairs compared byte for byte", compared);
    for (const auto& d : diffs) detail += "; differs: " + d;
    return {diffs.empty(), detail};
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Acceptance criteria"};
    std::vector<int> expect_fail, only;
    app.add_option("--expect-fail", expect_fail, "criteria whose failure is documented and does not fail the run");
    app.add_option("--only", only, "run only these criteria");
    CLI11_PARSE(app, argc, argv);
    const std::set<int> expected(expect_fail.begin(), expect_fail.end());
    const std::set<int> selected(only.begin(), only.end());

    struct Criterion {
        int id;
        const char* name;
        std::function<Verdict()> run;
    };
    const std::vector<Criterion> criteria{
        {1, "Err(N) trend", error_trend},
        {2, "basis recovery", [] { return basis_recovery(1e-5); }},
        {3, "logarithmic regret scaling", regret_scaling},
        {4, "oracle equivalence", oracle_equivalence},
        {5, "duality and system checks", system_checks},
        {6, "exact vs Monte Carlo evaluation", monte_carlo},
        {7, "determinism", determinism},
    };

    int unexpected = 0;
    for (const auto& c : criteria) {
        if (!selected.empty() && !selected.count(c.id)) continue;
        Verdict v;
        try {
            v = c.run();
        } catch (const std::exception& e) {
            v = {false, std::string("exception: ") + e.what()};
        }
        const bool known = expected.count(c.id) > 0;
        const char* tag = v.pass ? "PASS" : (known ? "FAIL (expected)" : "FAIL");
        if (!v.pass && !known) ++unexpected;
        std::printf("[%s] %d %s: %s\n", tag, c.id, c.name, v.detail.c_str());
        std::fflush(stdout);
    }
    if (selected.empty() || selected.count(2)) {
        const auto literal = basis_recovery(1.0);
        std::printf("[INFO] 2 at the literal confidence scale: %s\n", literal.detail.c_str());
        const auto early = basis_recovery(1e-5, 2);
        std::printf("[INFO] 2 stopping after two agreeing stages: %s\n", early.detail.c_str());
    }
    std::printf("%d unexpected failure(s)\n", unexpected);
    return unexpected == 0 ? 0 : 1;
}
