#include "cli.hpp"

#include "cmdplp/basis.hpp"
#include "cmdplp/errors.hpp"
#include "cmdplp/evaluation.hpp"
#include "cmdplp/io.hpp"
#include "cmdplp/resolve.hpp"

#include "CLI11.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace cmdplp::cli {
namespace {

// Raised for problems with files and flags that CLI11 cannot see.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string num(double x) {
    if (std::isnan(x)) return "NA";
    std::ostringstream os;
    os << std::setprecision(10) << x;
    return os.str();
}

Json vec_json(const Vector& v) {
    Json a = Json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
    return a;
}

Json finite_or_null(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }

Json policy_json(const PolicyTable& p) {
    Json rows = Json::array();
    for (std::size_t s = 0; s < p.num_states; ++s) {
        Json row = Json::array();
        for (std::size_t a = 0; a < p.num_actions; ++a) row.push_back(p(s, a));
        rows.push_back(std::move(row));
    }
    return rows;
}

Json int_list(const std::vector<std::size_t>& v) {
    Json a = Json::array();
    for (auto x : v) a.push_back(x);
    return a;
}

// Writes to the file at `path`, or to `fallback` when the path is empty or "-".
template <class F>
void emit(const std::string& path, std::ostream& fallback, F&& write) {
    if (path.empty() || path == "-") {
        write(fallback);
        return;
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw UsageError("cannot open " + path + " for writing");
    write(f);
    if (!f) throw UsageError("write to " + path + " failed");
}

enum class Mode { Generative, OffPolicy, OnPolicy };

const char* mode_name(Mode m) {
    switch (m) {
    case Mode::Generative: return "generative";
    case Mode::OffPolicy: return "offpolicy";
    case Mode::OnPolicy: return "onpolicy";
    }
    return "?";
}

const std::map<std::string, Mode> kModes{
    {"generative", Mode::Generative}, {"offpolicy", Mode::OffPolicy}, {"onpolicy", Mode::OnPolicy}};

struct LearnFlags {
    std::uint64_t n1 = 1000;
    std::uint64_t n3 = 64;
    double xi_prime = 0.0;  // 0: automatic
    double epsilon_target = 0.1;
    double confidence_scale = 1.0;
    std::uint64_t step_limit = 50'000'000;
    bool oracle_basis = false;
    std::uint64_t seed = 1;
    Mode mode = Mode::Generative;
};

void add_learn_flags(CLI::App* cmd, LearnFlags& f) {
    cmd->add_option("--mode", f.mode, "generative, offpolicy or onpolicy")
        ->transform(CLI::CheckedTransformer(kModes, CLI::ignore_case))
        ->capture_default_str();
    cmd->add_option("--n1", f.n1, "phase-one samples per pair (steps for onpolicy)")->capture_default_str();
    cmd->add_option("--n3", f.n3, "initial per-round step cap of the onpolicy walk")->capture_default_str();
    cmd->add_option("--xi-prime", f.xi_prime, "onpolicy lower bound; 0 picks it from phase one")
        ->capture_default_str();
    cmd->add_option("--epsilon-target", f.epsilon_target)->capture_default_str();
    cmd->add_option("--confidence-scale", f.confidence_scale,
                    "multiplier on the identification slack and thresholds")
        ->capture_default_str();
    cmd->add_option("--step-limit", f.step_limit, "walk step cap for offpolicy coverage")->capture_default_str();
    cmd->add_flag("--oracle-basis", f.oracle_basis, "skip identification and resolve on the true basis");
    cmd->add_option("--seed", f.seed)->capture_default_str();
}

ResolveOptions resolve_options(const LearnFlags& f, const CmdpInstance& inst, std::uint64_t n2) {
    ResolveOptions o;
    o.n1 = f.n1;
    o.n2 = n2;
    o.n3 = f.n3;
    o.epsilon_target = f.epsilon_target;
    o.confidence_scale = f.confidence_scale;
    o.step_limit = f.step_limit;
    if (f.xi_prime > 0.0) o.xi_prime = f.xi_prime;
    if (f.oracle_basis) o.basis = identify_basis_true(build_infinite_lp(inst)).basis;
    return o;
}

RunOutput learn(const CmdpInstance& inst, const LearnFlags& f, const ResolveOptions& o, Rng& rng) {
    switch (f.mode) {
    case Mode::Generative: return run_adaptive_resolving(inst, o, rng);
    case Mode::OffPolicy:
        return run_offpolicy(inst, PolicyTable::uniform(inst.num_states, inst.num_actions), o, rng);
    case Mode::OnPolicy: return run_onpolicy(inst, o, rng);
    }
    throw InternalError("unknown mode");
}

double relative_l1(const Vector& q, const Vector& q_star) {
    return (q - q_star).lpNorm<1>() / q_star.lpNorm<1>();
}

// ---- gen ----

struct GenFlags {
    RandomInstanceConfig cfg;
    std::string output;
};

int cmd_gen(const GenFlags& g, std::ostream& out, std::ostream& err) {
    const CmdpInstance inst = random_instance(g.cfg);
    if (g.output.empty() || g.output == "-") {
        out << instance_to_json(inst).dump(1) << '\n';
    } else {
        save_instance(g.output, inst);
    }
    err << "seed " << g.cfg.seed << '\n';
    return kExitOk;
}

// ---- solve ----

struct SolveFlags {
    std::string instance;
    bool check_vi = false;
    std::string lp_out;
    std::uint64_t subset_limit = 1u << 16;
    bool no_hardness = false;
};

int cmd_solve(const SolveFlags& f, std::ostream& out, std::ostream& err) {
    const CmdpInstance inst = load_instance(f.instance);
    const StandardLp lp = build_infinite_lp(inst);
    if (!f.lp_out.empty()) emit(f.lp_out, out, [&](std::ostream& os) { write_lp_text(os, lp); });
    const OptimalSolution opt = solve_optimal(inst);

    Json j;
    j["lp_value"] = opt.lp.value;
    j["v_reward"] = opt.values.v_reward;
    j["v_costs"] = opt.values.v_costs;
    j["budgets"] = inst.budgets;
    std::vector<std::size_t> binding;
    const Vector cost = lp.cost_matrix * opt.lp.q - lp.budgets;
    for (Eigen::Index k = 0; k < cost.size(); ++k)
        if (cost(k) >= -1e-9 * (1.0 + std::abs(lp.budgets(k)))) binding.push_back(static_cast<std::size_t>(k));
    j["binding_constraints"] = int_list(binding);

    const BasisPair basis = identify_basis_true(lp).basis;
    const BasisReport rep = verify_basis(lp, basis);
    j["basis"] = basis_to_json(basis, inst.num_actions);
    j["basis_check"] = rep.pass ? "pass" : rep.failure;
    if (!f.no_hardness) {
        const HardnessConstants h = hardness_constants(lp, f.subset_limit);
        Json hj;
        hj["delta1"] = finite_or_null(h.delta1);
        hj["delta2"] = finite_or_null(h.delta2);
        hj["sigma0"] = finite_or_null(h.sigma0);
        hj["sigma_star"] = finite_or_null(h.sigma_star);
        hj["exhaustive"] = h.exhaustive;
        j["hardness"] = hj;
    }
    j["q"] = vec_json(opt.lp.q);
    j["policy"] = policy_json(opt.policy);

    int code = kExitOk;
    if (f.check_vi) {
        if (inst.num_constraints() != 0) throw InputError("--check-vi needs an instance without cost constraints");
        const auto vi = value_iteration(inst);
        const double diff = std::abs(opt.lp.value - (1.0 - inst.gamma) * vi.value);
        j["vi_value"] = vi.value;
        j["vi_check"] = diff <= 1e-6 ? "pass" : "fail";
        if (diff > 1e-6) {
            err << "value iteration disagrees with the LP by " << num(diff) << '\n';
            code = kExitInternal;
        }
    }
    out << j.dump(2) << '\n';
    return code;
}

// ---- identify ----

struct IdentifyFlags {
    std::string instance;
    std::uint64_t n0 = 1000;
    double epsilon_target = 0.1;
    double confidence_scale = 1.0;
    std::uint64_t seed = 1;
    bool doubling = false;
    std::uint64_t n_start = 16;
    std::uint64_t budget = 1u << 20;
    std::size_t stop_after = 0;
    std::string output;
};

int cmd_identify(const IdentifyFlags& f, std::ostream& out, std::ostream& err) {
    const CmdpInstance inst = load_instance(f.instance);
    const StandardLp lp = build_infinite_lp(inst);
    const BasisPair truth = identify_basis_true(lp).basis;
    ConfidenceParams params;
    params.epsilon = identification_epsilon(inst, f.epsilon_target);
    params.width = inst.observation_width();
    params.confidence_scale = f.confidence_scale;
    Rng rng(f.seed);

    Json j;
    j["epsilon"] = params.epsilon;
    j["confidence_scale"] = f.confidence_scale;
    BasisPair found;
    try {
        if (f.doubling) {
            DoublingOptions d;
            d.params = params;
            d.n_start = f.n_start;
            d.sample_budget = f.budget;
            d.stop_after_agreeing = f.stop_after;
            const DoublingResult r = identify_basis_doubling(inst, d, rng);
            if (r.basis.cols.empty()) throw InternalError("no stage produced a square basis within the budget");
            found = r.basis;
            j["converged"] = r.converged;
            j["n0"] = r.n0;
            j["samples_used"] = r.samples_used;
        } else {
            if (f.n0 == 0) throw InputError("--n0 must be positive");
            EmpiricalEstimates est(inst.num_states, inst.num_actions, inst.num_constraints());
            for (std::size_t s = 0; s < inst.num_states; ++s)
                for (std::size_t a = 0; a < inst.num_actions; ++a)
                    for (std::uint64_t i = 0; i < f.n0; ++i) est.update(s, a, sample_generative(inst, s, a, rng));
            params.n0 = f.n0;
            const BasisResult r = identify_basis_empirical(est, params, inst.gamma, inst.budgets, inst.init_dist);
            found = r.basis;
            j["n0"] = f.n0;
            j["samples_used"] = est.total_count();
            j["v_bar"] = r.trace.value;
            j["value_threshold"] = r.trace.value_threshold;
            j["slack"] = r.trace.slack;
        }
    } catch (const InternalError& e) {
        err << "identification failed: " << e.what() << '\n';
        return kExitData;
    }
    const BasisReport rep = verify_basis(lp, found);
    j["basis"] = basis_to_json(found, inst.num_actions);
    j["true_basis"] = basis_to_json(truth, inst.num_actions);
    j["matches_true"] = found == truth;
    j["verify"] = rep.pass ? "pass" : rep.failure;
    emit(f.output, out, [&](std::ostream& os) { os << j.dump(2) << '\n'; });
    return kExitOk;
}

// ---- run ----

struct RunFlags {
    std::string instance;
    LearnFlags learn;
    std::uint64_t n2 = 1000;
    std::string trace;
    std::string output;
};

int cmd_run(const RunFlags& f, std::ostream& out, std::ostream& err) {
    const CmdpInstance inst = load_instance(f.instance);
    const OptimalSolution opt = solve_optimal(inst);
    ResolveOptions o = resolve_options(f.learn, inst, f.n2);
    o.record_trace = !f.trace.empty();
    Rng rng(f.learn.seed);
    RunOutput run;
    try {
        run = learn(inst, f.learn, o, rng);
    } catch (const InternalError& e) {
        err << "identification failed: " << e.what() << '\n';
        return kExitData;
    }
    const ValueReport vals = evaluate_exact(inst, run.policy);
    const RegretReport reg = regret_report(inst, vals, opt.values);

    Json j;
    j["mode"] = mode_name(f.learn.mode);
    j["seed"] = f.learn.seed;
    j["n1"] = f.learn.n1;
    j["n2"] = f.n2;
    j["epsilon"] = run.epsilon;
    j["n0"] = run.n0;
    j["basis"] = basis_to_json(run.basis, inst.num_actions);
    j["err_l1"] = relative_l1(run.q_bar, opt.lp.q);
    j["v_reward"] = vals.v_reward;
    j["v_costs"] = vals.v_costs;
    j["regret_r"] = reg.regret_r;
    j["regret_k"] = reg.regret_k;
    j["phase1_samples"] = run.phase1_samples;
    j["samples_used"] = run.samples_used;
    j["fallbacks"] = run.fallbacks;
    j["projections_active"] = run.projections_active;
    if (f.learn.mode == Mode::OnPolicy) {
        j["xi_prime"] = run.xi_prime;
        j["n3_doublings"] = run.n3_doublings;
    }
    j["alpha_initial"] = vec_json(run.alpha_initial);
    j["alpha_final"] = vec_json(run.alpha_final);
    j["mu_initial"] = vec_json(run.mu_initial);
    j["mu_final"] = vec_json(run.mu_final);
    j["q_bar"] = vec_json(run.q_bar);
    j["policy"] = policy_json(run.policy);
    j["log"] = run.log;
    if (!f.trace.empty()) {
        std::vector<double> q_star(opt.lp.q.data(), opt.lp.q.data() + opt.lp.q.size());
        emit(f.trace, out, [&](std::ostream& os) { write_trace_csv(os, run, &q_star); });
    }
    emit(f.output, out, [&](std::ostream& os) { os << j.dump(2) << '\n'; });
    return kExitOk;
}

// ---- experiment ----

struct ExperimentFlags {
    std::string instance;
    LearnFlags learn;
    std::vector<std::uint64_t> grid{1000, 3000, 10000, 30000};
    std::size_t replicates = 50;
    unsigned jobs = 1;
    bool timing = false;
    std::string output;
};

struct Cell {
    bool ok = false;
    double err_l1 = 0.0;
    double regret_r = 0.0;
    double regret_k_max = 0.0;
    std::uint64_t samples = 0;
    double wall_ms = 0.0;
    std::string message;
};

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

void fill_cell(Cell& c, const CmdpInstance& inst, const OptimalSolution& opt, const RunOutput& run) {
    const RegretReport reg = regret_report(inst, evaluate_exact(inst, run.policy), opt.values);
    c.ok = true;
    c.err_l1 = relative_l1(run.q_bar, opt.lp.q);
    c.regret_r = reg.regret_r;
    c.regret_k_max = inst.num_constraints() > 0 ? reg.max_regret_k() : std::nan("");
    c.samples = run.samples_used;
}

// Runs `task(i)` for i in [0, n) on `jobs` threads. Each task writes only its own slot.
template <class F>
void parallel_for(std::size_t n, unsigned jobs, F&& task) {
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < n; i = next++) task(i);
    };
    const unsigned threads = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(n)));
    std::vector<std::jthread> pool;
    for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
}

int cmd_experiment(const ExperimentFlags& f, std::ostream& out, std::ostream&) {
    const CmdpInstance inst = load_instance(f.instance);
    if (f.grid.empty()) throw UsageError("--grid needs at least one value");
    if (f.replicates == 0) throw UsageError("--replicates must be positive");
    for (auto n : f.grid)
        if (n == 0) throw UsageError("--grid values must be positive");
    const OptimalSolution opt = solve_optimal(inst);
    // The oracle basis is computed once, outside the replicate loop.
    const ResolveOptions base = resolve_options(f.learn, inst, f.grid.front());
    const std::size_t G = f.grid.size(), M = f.replicates;
    std::vector<Cell> cells(G * M);

    if (f.learn.mode == Mode::Generative) {
        // Replicate m draws its phase-one data from the same stream at every N, so the
        // phase is run once and continued from a copy of the generator per grid value.
        parallel_for(M, f.jobs, [&](std::size_t m) {
            Rng rng = Rng::derive(f.learn.seed, m);
            const auto t0 = Clock::now();
            std::optional<PhaseOne> p1;
            std::string failure;
            try {
                p1 = generative_phase_one(inst, base, rng);
            } catch (const std::exception& e) {
                failure = e.what();
            }
            const double phase_ms = ms_since(t0);
            for (std::size_t g = 0; g < G; ++g) {
                Cell& c = cells[g * M + m];
                if (!p1) {
                    c.message = failure;
                    continue;
                }
                ResolveOptions o = base;
                o.n2 = f.grid[g];
                Rng r = rng;
                const auto t1 = Clock::now();
                try {
                    fill_cell(c, inst, opt, continue_adaptive_resolving(inst, *p1, o, r));
                } catch (const std::exception& e) {
                    c.message = e.what();
                }
                c.wall_ms = phase_ms + ms_since(t1);
            }
        });
    } else {
        parallel_for(G * M, f.jobs, [&](std::size_t idx) {
            const std::size_t g = idx / M, m = idx % M;
            Cell& c = cells[idx];
            ResolveOptions o = base;
            o.n2 = f.grid[g];
            Rng rng = Rng::derive(f.learn.seed, m);
            const auto t0 = Clock::now();
            try {
                fill_cell(c, inst, opt, learn(inst, f.learn, o, rng));
            } catch (const std::exception& e) {
                c.message = e.what();
            }
            c.wall_ms = ms_since(t0);
        });
    }

    emit(f.output, out, [&](std::ostream& os) {
        const std::string mode = mode_name(f.learn.mode);
        os << "# schema=1\n";
        os << "mode,N,replicate,err_l1,regret_r,regret_k_max,samples_used,wall_ms\n";
        const double na = std::nan("");
        for (std::size_t g = 0; g < G; ++g) {
            double s_err = 0, s_r = 0, s_k = 0, s_samples = 0, s_ms = 0;
            std::size_t ok = 0;
            for (std::size_t m = 0; m < M; ++m) {
                const Cell& c = cells[g * M + m];
                if (!c.ok) {
                    os << "# replicate " << m << " at N=" << f.grid[g] << " failed: " << c.message << '\n';
                    os << mode << ',' << f.grid[g] << ',' << m << ",NA,NA,NA,NA,NA\n";
                    continue;
                }
                ++ok;
                s_err += c.err_l1;
                s_r += c.regret_r;
                s_k += c.regret_k_max;
                s_samples += static_cast<double>(c.samples);
                s_ms += c.wall_ms;
                os << mode << ',' << f.grid[g] << ',' << m << ',' << num(c.err_l1) << ',' << num(c.regret_r) << ','
                   << num(c.regret_k_max) << ',' << c.samples << ',' << (f.timing ? num(c.wall_ms) : "NA") << '\n';
            }
            const double d = static_cast<double>(ok);
            auto mean = [&](double s) { return ok ? s / d : na; };
            os << mode << ',' << f.grid[g] << ",mean," << num(mean(s_err)) << ',' << num(mean(s_r)) << ','
               << num(mean(s_k)) << ',' << num(mean(s_samples)) << ',' << (f.timing ? num(mean(s_ms)) : "NA")
               << '\n';
        }
    });
    return kExitOk;
}

} // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Constrained MDP learning through occupancy-LP basis identification and adaptive resolving"};
    app.set_config("--config", "", "TOML or INI file with option defaults; flags on the command line win");
    app.require_subcommand(1);

    GenFlags gen;
    auto* g = app.add_subcommand("gen", "Write a random instance (dense kernel, null action 0)");
    g->add_option("--states", gen.cfg.num_states)->capture_default_str()->check(CLI::PositiveNumber);
    g->add_option("--actions", gen.cfg.num_actions)->capture_default_str()->check(CLI::PositiveNumber);
    g->add_option("--gamma", gen.cfg.gamma, "discount factor in (0, 1)")->required()->check(CLI::Range(0.0, 1.0));
    g->add_option("--k", gen.cfg.num_constraints, "number of cost constraints")->capture_default_str();
    g->add_option("--seed", gen.cfg.seed)->capture_default_str();
    g->add_option("--noise", gen.cfg.noise, "half-width of the uniform observation noise")->capture_default_str();
    g->add_option("--mean-low", gen.cfg.mean_range.low)->capture_default_str();
    g->add_option("--mean-high", gen.cfg.mean_range.high)->capture_default_str();
    g->add_option("--budget-fraction", gen.cfg.budget_fraction)->capture_default_str();
    g->add_option("-o,--output", gen.output, "instance JSON path (stdout if omitted)");

    SolveFlags solve;
    auto* s = app.add_subcommand("solve", "Solve the true LP and report value, basis and hardness constants");
    s->add_option("instance", solve.instance)->required();
    s->add_flag("--check-vi", solve.check_vi, "cross-check against value iteration (K = 0 only)");
    s->add_option("--lp-out", solve.lp_out, "write the LP in plain text");
    s->add_option("--subset-limit", solve.subset_limit, "enumeration cap for the hardness constants")
        ->capture_default_str();
    s->add_flag("--no-hardness", solve.no_hardness);

    IdentifyFlags ident;
    auto* id = app.add_subcommand("identify", "Identify an optimal basis from generative samples");
    id->add_option("instance", ident.instance)->required();
    id->add_option("--n0", ident.n0, "samples per pair")->capture_default_str();
    id->add_option("--epsilon-target", ident.epsilon_target)->capture_default_str();
    id->add_option("--confidence-scale", ident.confidence_scale)->capture_default_str();
    id->add_option("--seed", ident.seed)->capture_default_str();
    id->add_flag("--doubling", ident.doubling, "double n0 until two identifications agree");
    id->add_option("--n-start", ident.n_start)->capture_default_str();
    id->add_option("--budget", ident.budget, "total sample budget of the doubling driver")->capture_default_str();
    id->add_option("--stop-after", ident.stop_after,
                   "stop once this many consecutive stages agree (0 spends the whole budget)")
        ->capture_default_str();
    id->add_option("-o,--output", ident.output);

    RunFlags runf;
    auto* r = app.add_subcommand("run", "One learning run");
    r->add_option("instance", runf.instance)->required();
    add_learn_flags(r, runf.learn);
    r->add_option("--n2", runf.n2, "resolving rounds")->capture_default_str();
    r->add_option("--trace", runf.trace, "per-round CSV trace path");
    r->add_option("-o,--output", runf.output);

    ExperimentFlags exp;
    auto* e = app.add_subcommand("experiment", "Replicated runs over a grid of round counts, as CSV");
    e->add_option("instance", exp.instance)->required();
    add_learn_flags(e, exp.learn);
    e->add_option("--grid", exp.grid, "round counts N")->delimiter(',')->capture_default_str();
    e->add_option("-M,--replicates", exp.replicates)->capture_default_str();
    e->add_option("--jobs", exp.jobs, "worker threads")->capture_default_str()->check(CLI::PositiveNumber);
    e->add_flag("--timing", exp.timing, "fill the wall_ms column");
    e->add_option("-o,--output", exp.output);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& ex) {
        return app.exit(ex, out, err);
    } catch (const CLI::CallForAllHelp& ex) {
        return app.exit(ex, out, err);
    } catch (const CLI::ParseError& ex) {
        err << ex.what() << '\n';
        const CLI::App* sub = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
        err << sub->help();
        return kExitUsage;
    }

    try {
        if (*g) return cmd_gen(gen, out, err);
        if (*s) return cmd_solve(solve, out, err);
        if (*id) return cmd_identify(ident, out, err);
        if (*r) return cmd_run(runf, out, err);
        if (*e) return cmd_experiment(exp, out, err);
    } catch (const UsageError& ex) {
        err << "error: " << ex.what() << '\n';
        return kExitUsage;
    } catch (const InputError& ex) {
        err << "error: " << ex.what() << '\n';
        return kExitData;
    } catch (const CoverageError& ex) {
        err << "error: " << ex.what() << '\n';
        return kExitData;
    } catch (const SingularMatrixError& ex) {
        err << "error: " << ex.what() << '\n';
        return kExitData;
    } catch (const std::exception& ex) {
        err << "internal error: " << ex.what() << '\n';
        return kExitInternal;
    }
    return kExitUsage;
}

} // namespace cmdplp::cli
