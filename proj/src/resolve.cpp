#include "cmdplp/resolve.hpp"

#include "cmdplp/errors.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <string>

namespace cmdplp {

Vector project_capped_simplex(const Vector& v, double radius, double lower) {
    if (!(radius > 0.0)) throw InputError("projection radius must be positive");
    if (!(lower >= 0.0)) throw InputError("projection lower bound must be non-negative");
    const auto m = v.size();
    const double room = radius - lower * static_cast<double>(m);
    if (room < -1e-12 * radius) throw InputError("projection lower bound times support size exceeds the radius");

    Vector q = v.cwiseMax(lower);
    if (q.sum() <= radius) return q;

    // q_i = lower + max(w_i - theta, 0) with w = v - lower and sum = radius
    std::vector<double> w(static_cast<std::size_t>(m));
    for (Eigen::Index i = 0; i < m; ++i) w[static_cast<std::size_t>(i)] = v(i) - lower;
    std::sort(w.begin(), w.end(), std::greater<>());
    const double target = std::max(0.0, room);
    double prefix = 0.0;
    double theta = w.front();
    for (std::size_t k = 0; k < w.size(); ++k) {
        prefix += w[k];
        const double t = (prefix - target) / static_cast<double>(k + 1);
        if (k + 1 == w.size() || w[k + 1] <= t) {
            theta = t;
            break;
        }
    }
    for (Eigen::Index i = 0; i < m; ++i) q(i) = lower + std::max(v(i) - lower - theta, 0.0);
    return q;
}

Vector project_capped_simplex(const Vector& v, double radius, std::span<const std::size_t> support, double lower) {
    Vector sub(static_cast<Eigen::Index>(support.size()));
    for (std::size_t i = 0; i < support.size(); ++i) {
        if (support[i] >= static_cast<std::size_t>(v.size())) throw InputError("support index out of range");
        sub(static_cast<Eigen::Index>(i)) = v(static_cast<Eigen::Index>(support[i]));
    }
    const Vector p = project_capped_simplex(sub, radius, lower);
    Vector out = Vector::Zero(v.size());
    for (std::size_t i = 0; i < support.size(); ++i)
        out(static_cast<Eigen::Index>(support[i])) = p(static_cast<Eigen::Index>(i));
    return out;
}

std::uint64_t GenerativeSampler::collect(std::span<const std::size_t> pairs, std::vector<Sample>& out,
                                         EmpiricalEstimates& est, Rng& rng) {
    out.clear();
    for (auto p : pairs) {
        const std::size_t s = p / instance_.num_actions, a = p % instance_.num_actions;
        out.push_back(sample_generative(instance_, s, a, rng));
        est.update(s, a, out.back());
    }
    return pairs.size();
}

WalkSampler::WalkSampler(const CmdpInstance& instance, PolicyTable policy, std::size_t start_state,
                         std::uint64_t step_limit)
    : instance_(instance),
      policy_(std::move(policy)),
      state_(start_state),
      step_limit_(step_limit),
      visits_(instance.num_states, 0) {
    if (start_state >= instance.num_states) throw InputError("walk start state out of range");
}

std::uint64_t WalkSampler::collect(std::span<const std::size_t> pairs, std::vector<Sample>& out,
                                   EmpiricalEstimates& est, Rng& rng) {
    const std::size_t A = instance_.num_actions;
    std::vector<std::ptrdiff_t> slot(instance_.num_pairs(), -1);
    for (std::size_t i = 0; i < pairs.size(); ++i) slot[pairs[i]] = static_cast<std::ptrdiff_t>(i);
    out.assign(pairs.size(), Sample{});
    std::vector<bool> got(pairs.size(), false);
    std::size_t missing = pairs.size();
    std::uint64_t steps = 0;
    while (missing > 0) {
        if (steps >= step_limit_) {
            std::string msg = "walk of " + std::to_string(steps) + " steps left pairs unvisited:";
            for (std::size_t i = 0; i < pairs.size(); ++i)
                if (!got[i]) msg += " (" + std::to_string(pairs[i] / A) + "," + std::to_string(pairs[i] % A) + ")";
            throw CoverageError(msg);
        }
        const std::size_t a = policy_.sample(state_, rng);
        Sample smp = sample_generative(instance_, state_, a, rng);
        est.update(state_, a, smp);
        ++visits_[state_];
        const auto idx = slot[state_ * A + a];
        const std::size_t next = smp.next_state;
        if (idx >= 0 && !got[static_cast<std::size_t>(idx)]) {
            got[static_cast<std::size_t>(idx)] = true;
            out[static_cast<std::size_t>(idx)] = std::move(smp);
            --missing;
        }
        state_ = next;
        ++steps;
    }
    return steps;
}

ResolveState make_resolve_state(const CmdpInstance& instance, const BasisPair& basis, std::uint64_t n2,
                                EmpiricalEstimates bootstrap) {
    if (n2 == 0) throw InputError("resolving needs at least one round");
    if (basis.cols.empty() || basis.cols.size() != basis.rows_cost.size() + basis.rows_flow.size())
        throw InputError("resolving needs a square basis");
    ResolveState st;
    st.basis = basis;
    st.num_states = instance.num_states;
    st.num_actions = instance.num_actions;
    st.gamma = instance.gamma;
    st.horizon = n2;
    const double scale = static_cast<double>(n2) * (1.0 - instance.gamma);
    st.alpha_initial = Vector(static_cast<Eigen::Index>(basis.rows_cost.size()));
    for (std::size_t i = 0; i < basis.rows_cost.size(); ++i)
        st.alpha_initial(static_cast<Eigen::Index>(i)) = scale * instance.budgets.at(basis.rows_cost[i]);
    st.mu_initial = Vector(static_cast<Eigen::Index>(basis.rows_flow.size()));
    for (std::size_t i = 0; i < basis.rows_flow.size(); ++i)
        st.mu_initial(static_cast<Eigen::Index>(i)) = scale * instance.init_dist.at(basis.rows_flow[i]);
    st.alpha = st.alpha_initial;
    st.mu = st.mu_initial;
    st.consumed_alpha = Vector::Zero(st.alpha.size());
    st.consumed_mu = Vector::Zero(st.mu.size());
    st.est = std::move(bootstrap);
    return st;
}

Matrix estimated_basis_matrix(const ResolveState& st) {
    const auto& b = st.basis;
    const std::size_t A = st.num_actions;
    Matrix m(static_cast<Eigen::Index>(b.cols.size()), static_cast<Eigen::Index>(b.cols.size()));
    for (std::size_t j = 0; j < b.cols.size(); ++j) {
        const std::size_t s = b.cols[j] / A, a = b.cols[j] % A;
        const auto c = static_cast<Eigen::Index>(j);
        Eigen::Index r = 0;
        for (auto k : b.rows_cost) m(r++, c) = st.est.mean_cost(k, s, a);
        for (auto t : b.rows_flow) m(r++, c) = (t == s ? 1.0 : 0.0) - st.gamma * st.est.transition_freq(s, a, t);
    }
    return m;
}

namespace {

// Hook for samplers whose behavior depends on the current iterate.
using IterateHook = std::function<void(const ResolveState&, const Vector&)>;

StepInfo resolve_step_impl(ResolveState& st, PairSampler& sampler, Rng& rng, const IterateHook& hook) {
    if (st.round >= st.horizon) throw InputError("resolving horizon already exhausted");
    const auto& b = st.basis;
    const std::uint64_t n = st.round + 1;
    const double remaining = static_cast<double>(st.horizon - n + 1);
    StepInfo info;

    Vector rhs(static_cast<Eigen::Index>(b.cols.size()));
    rhs << st.alpha / remaining, st.mu / remaining;
    Vector q_tilde;
    try {
        q_tilde = solve_square_system(estimated_basis_matrix(st), rhs);
    } catch (const SingularMatrixError&) {
        info.fallback = true;
        q_tilde = st.q_prev.size() == rhs.size()
                      ? st.q_prev
                      : Vector::Constant(rhs.size(), 1.0 / static_cast<double>(rhs.size()));
    }
    info.q = project_capped_simplex(q_tilde, st.radius, st.lower);
    info.projection_active = (info.q - q_tilde).cwiseAbs().maxCoeff() > 1e-12;
    if (hook) hook(st, info.q);

    std::vector<Sample> obs;
    info.samples = sampler.collect(b.cols, obs, st.est, rng);

    for (std::size_t j = 0; j < b.cols.size(); ++j) {
        const double qj = info.q(static_cast<Eigen::Index>(j));
        const std::size_t s = b.cols[j] / st.num_actions;
        for (std::size_t i = 0; i < b.rows_cost.size(); ++i) {
            st.consumed_alpha(static_cast<Eigen::Index>(i)) += obs[j].costs[b.rows_cost[i]] * qj;
        }
        for (std::size_t i = 0; i < b.rows_flow.size(); ++i) {
            const std::size_t t = b.rows_flow[i];
            const double coeff = (t == s ? 1.0 : 0.0) - st.gamma * (obs[j].next_state == t ? 1.0 : 0.0);
            if (coeff == 0.0) continue;
            st.consumed_mu(static_cast<Eigen::Index>(i)) += qj * coeff;
        }
    }
    // remaining = initial - consumed, so the ledger identity holds bit for bit
    st.alpha = st.alpha_initial - st.consumed_alpha;
    st.mu = st.mu_initial - st.consumed_mu;
    st.q_prev = info.q;
    st.round = n;
    return info;
}

std::vector<double> full_occupancy(const BasisPair& basis, const Vector& q_on_i, std::size_t n) {
    std::vector<double> q(n, 0.0);
    for (std::size_t j = 0; j < basis.cols.size(); ++j) q[basis.cols[j]] = std::max(0.0, q_on_i(static_cast<Eigen::Index>(j)));
    return q;
}

void run_rounds(ResolveState& st, PairSampler& sampler, Rng& rng, const ResolveOptions& options, RunOutput& out,
                const IterateHook& hook = {}) {
    out.rounds.reserve(st.horizon);
    std::uint64_t total = out.phase1_samples;
    while (st.round < st.horizon) {
        const StepInfo info = resolve_step_impl(st, sampler, rng, hook);
        total += info.samples;
        if (info.fallback) {
            ++out.fallbacks;
            out.log.push_back("round " + std::to_string(st.round) + ": singular resolve system, reused previous iterate");
        }
        if (info.projection_active) ++out.projections_active;
        if (options.record_trace)
            out.trace.push_back({st.round, st.alpha, st.mu, info.projection_active, info.fallback, total});
        out.rounds.push_back(info.q);
    }
    out.samples_used = total;
}

void finish(RunOutput& out, const ResolveState& st, const CmdpInstance& instance) {
    const std::size_t n = instance.num_pairs();
    Vector mean = Vector::Zero(static_cast<Eigen::Index>(st.basis.cols.size()));
    for (const auto& q : out.rounds) mean += q;
    mean /= static_cast<double>(out.rounds.size());
    out.q_bar = Vector::Zero(static_cast<Eigen::Index>(n));
    for (std::size_t j = 0; j < st.basis.cols.size(); ++j)
        out.q_bar(static_cast<Eigen::Index>(st.basis.cols[j])) = mean(static_cast<Eigen::Index>(j));
    const auto qf = full_occupancy(st.basis, mean, n);
    out.policy = extract_policy(qf, instance.num_states, instance.num_actions);
    out.basis = st.basis;
    out.alpha_initial = st.alpha_initial;
    out.alpha_final = st.alpha;
    out.consumed_alpha = st.consumed_alpha;
    out.mu_initial = st.mu_initial;
    out.mu_final = st.mu;
    out.consumed_mu = st.consumed_mu;
}

BasisPair choose_basis(const CmdpInstance& instance, const EmpiricalEstimates& est, const ResolveOptions& options,
                       RunOutput& out) {
    out.epsilon = identification_epsilon(instance, options.epsilon_target);
    out.n0 = est.min_count();
    if (options.basis) return *options.basis;
    ConfidenceParams params;
    params.epsilon = out.epsilon;
    params.n0 = out.n0;
    params.width = instance.observation_width();
    params.confidence_scale = options.confidence_scale;
    return identify_basis_empirical(est, params, instance.gamma, instance.budgets, instance.init_dist).basis;
}

// walks `walker` until every pair has at least `per_pair` samples
std::uint64_t cover_all(const CmdpInstance& instance, WalkSampler& walker, EmpiricalEstimates& est,
                        std::uint64_t per_pair, Rng& rng) {
    std::uint64_t steps = 0;
    std::vector<Sample> sink;
    for (;;) {
        std::vector<std::size_t> short_pairs;
        for (std::size_t p = 0; p < instance.num_pairs(); ++p)
            if (est.count(p / instance.num_actions, p % instance.num_actions) < per_pair) short_pairs.push_back(p);
        if (short_pairs.empty()) return steps;
        steps += walker.collect(short_pairs, sink, est, rng);
    }
}

} // namespace

StepInfo resolve_step(ResolveState& state, PairSampler& sampler, Rng& rng) {
    return resolve_step_impl(state, sampler, rng, {});
}

double identification_epsilon(const CmdpInstance& instance, double epsilon_target) {
    if (!(epsilon_target > 0.0 && epsilon_target < 1.0)) throw InputError("epsilon_target must lie in (0, 1)");
    const double k = static_cast<double>(std::max<std::size_t>(instance.num_constraints(), 1));
    return epsilon_target * epsilon_target / (k * static_cast<double>(instance.num_pairs()));
}

PhaseOne generative_phase_one(const CmdpInstance& instance, const ResolveOptions& options, Rng& rng) {
    instance.validate();
    if (options.n1 == 0) throw InputError("n1 must be positive");
    PhaseOne p{EmpiricalEstimates(instance.num_states, instance.num_actions, instance.num_constraints()), {}, 0.0, 0, 0};
    for (std::size_t s = 0; s < instance.num_states; ++s)
        for (std::size_t a = 0; a < instance.num_actions; ++a)
            for (std::uint64_t i = 0; i < options.n1; ++i) p.est.update(s, a, sample_generative(instance, s, a, rng));
    p.samples = options.n1 * instance.num_pairs();
    RunOutput scratch;
    p.basis = choose_basis(instance, p.est, options, scratch);
    p.epsilon = scratch.epsilon;
    p.n0 = scratch.n0;
    return p;
}

RunOutput continue_adaptive_resolving(const CmdpInstance& instance, const PhaseOne& phase_one,
                                      const ResolveOptions& options, Rng& rng) {
    if (options.n2 == 0) throw InputError("n2 must be positive");
    RunOutput out;
    out.phase1_samples = phase_one.samples;
    out.epsilon = phase_one.epsilon;
    out.n0 = phase_one.n0;
    ResolveState st = make_resolve_state(instance, phase_one.basis, options.n2, EmpiricalEstimates(phase_one.est));
    GenerativeSampler sampler(instance);
    run_rounds(st, sampler, rng, options, out);
    finish(out, st, instance);
    return out;
}

RunOutput run_adaptive_resolving(const CmdpInstance& instance, const ResolveOptions& options, Rng& rng) {
    if (options.n1 == 0 || options.n2 == 0) throw InputError("n1 and n2 must be positive");
    const PhaseOne p = generative_phase_one(instance, options, rng);
    return continue_adaptive_resolving(instance, p, options, rng);
}

RunOutput run_offpolicy(const CmdpInstance& instance, const PolicyTable& behavior, const ResolveOptions& options,
                        Rng& rng) {
    instance.validate();
    if (options.n1 == 0 || options.n2 == 0) throw InputError("n1 and n2 must be positive");
    if (behavior.num_states != instance.num_states || behavior.num_actions != instance.num_actions)
        throw InputError("behavior policy does not match the instance");
    RunOutput out;
    EmpiricalEstimates est(instance.num_states, instance.num_actions, instance.num_constraints());
    WalkSampler walker(instance, behavior, rng.discrete(instance.init_dist), options.step_limit);
    out.phase1_samples = cover_all(instance, walker, est, options.n1, rng);
    const auto phase1_visits = walker.visits();

    const BasisPair basis = choose_basis(instance, est, options, out);
    ResolveState st = make_resolve_state(instance, basis, options.n2, std::move(est));
    run_rounds(st, walker, rng, options, out);
    finish(out, st, instance);
    out.resolve_visits = walker.visits();
    for (std::size_t s = 0; s < out.resolve_visits.size(); ++s) out.resolve_visits[s] -= phase1_visits[s];
    return out;
}

RunOutput run_onpolicy(const CmdpInstance& instance, const ResolveOptions& options, Rng& rng) {
    instance.validate();
    if (options.n1 == 0 || options.n2 == 0 || options.n3 == 0) throw InputError("n1, n2 and n3 must be positive");
    const std::size_t S = instance.num_states, A = instance.num_actions;
    RunOutput out;
    EmpiricalEstimates est(S, A, instance.num_constraints());
    // phase one: a fixed number of uniform steps
    std::size_t s = rng.discrete(instance.init_dist);
    {
        const auto uniform = PolicyTable::uniform(S, A);
        for (std::uint64_t t = 0; t < options.n1; ++t) {
            const std::size_t a = uniform.sample(s, rng);
            const Sample smp = sample_generative(instance, s, a, rng);
            est.update(s, a, smp);
            s = smp.next_state;
        }
    }
    WalkSampler walker(instance, PolicyTable::uniform(S, A), s, options.n3);
    out.phase1_samples = options.n1;
    const auto missing = est.uncovered_pairs();
    if (!missing.empty()) {
        std::string msg = "on-policy phase one left pairs unvisited:";
        for (auto p : missing) msg += " (" + std::to_string(p / A) + "," + std::to_string(p % A) + ")";
        throw CoverageError(msg);
    }

    const BasisPair basis = choose_basis(instance, est, options, out);
    ResolveState st = make_resolve_state(instance, basis, options.n2, std::move(est));

    if (options.xi_prime) {
        out.xi_prime = *options.xi_prime;
    } else {
        double xi_hat = 0.0;
        try {
            Vector rhs(static_cast<Eigen::Index>(basis.cols.size()));
            rhs << st.alpha_initial / static_cast<double>(st.horizon), st.mu_initial / static_cast<double>(st.horizon);
            xi_hat = solve_square_system(estimated_basis_matrix(st), rhs).minCoeff();
        } catch (const SingularMatrixError&) {
            out.log.push_back("phase-one basis system singular; xi' falls back to its floor");
        }
        out.xi_prime = std::max(1e-4, xi_hat / 4.0);
    }
    out.xi_prime = std::min(out.xi_prime, st.radius / static_cast<double>(basis.cols.size()));
    st.lower = out.xi_prime;

    // the walk follows the iterate; a round that cannot cover I doubles the step cap
    class IterateWalker final : public PairSampler {
    public:
        IterateWalker(WalkSampler& w, RunOutput& o) : walker(w), run(o) {}
        std::uint64_t collect(std::span<const std::size_t> pairs, std::vector<Sample>& obs, EmpiricalEstimates& e,
                              Rng& r) override {
            std::uint64_t spent = 0;
            // observations from an aborted walk stay in the estimates; the retry restarts the pair set
            for (;;) {
                const auto before = e.total_count();
                try {
                    return spent + walker.collect(pairs, obs, e, r);
                } catch (const CoverageError&) {
                    spent += e.total_count() - before;
                    if (walker.step_limit() > (std::uint64_t{1} << 40)) throw;
                    walker.set_step_limit(walker.step_limit() * 2);
                    ++run.n3_doublings;
                    run.log.push_back("round walk hit its step cap; doubled to " + std::to_string(walker.step_limit()));
                }
            }
        }
        WalkSampler& walker;
        RunOutput& run;
    } sampler(walker, out);

    const IterateHook hook = [&](const ResolveState& state, const Vector& q) {
        walker.set_policy(extract_policy(full_occupancy(state.basis, q, instance.num_pairs()), S, A));
    };
    run_rounds(st, sampler, rng, options, out, hook);
    finish(out, st, instance);
    out.resolve_visits = walker.visits();
    return out;
}

std::vector<double> stationary_pair_distribution(const CmdpInstance& instance, const PolicyTable& policy) {
    const std::size_t S = instance.num_states, A = instance.num_actions;
    const auto n = static_cast<Eigen::Index>(S);
    Matrix m = Matrix::Zero(n, n);  // P_pi^T - I
    for (std::size_t s = 0; s < S; ++s)
        for (std::size_t a = 0; a < A; ++a)
            for (std::size_t t = 0; t < S; ++t)
                m(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(s)) += policy(s, a) * instance.transition(s, a, t);
    m -= Matrix::Identity(n, n);
    m.row(n - 1).setOnes();
    Vector rhs = Vector::Zero(n);
    rhs(n - 1) = 1.0;
    const Vector d = m.colPivHouseholderQr().solve(rhs);
    std::vector<double> mu(S * A);
    for (std::size_t s = 0; s < S; ++s)
        for (std::size_t a = 0; a < A; ++a) mu[s * A + a] = std::max(0.0, d(static_cast<Eigen::Index>(s))) * policy(s, a);
    return mu;
}

void write_trace_csv(std::ostream& os, const RunOutput& run, const std::vector<double>* q_star) {
    const auto flags = os.flags();
    const auto prec = os.precision();
    os << std::setprecision(10);
    os << "# schema=1\n";
    os << "n,err_l1";
    for (auto k : run.basis.rows_cost) os << ",alpha_" << k;
    for (auto s : run.basis.rows_flow) os << ",mu_" << s;
    os << ",projection_active,fallback,samples\n";
    for (std::size_t r = 0; r < run.trace.size(); ++r) {
        const auto& t = run.trace[r];
        os << t.n << ',';
        if (q_star && r < run.rounds.size()) {
            double err = 0.0;
            std::vector<bool> in(q_star->size(), false);
            for (std::size_t j = 0; j < run.basis.cols.size(); ++j) {
                const auto c = run.basis.cols[j];
                in[c] = true;
                err += std::abs(run.rounds[r](static_cast<Eigen::Index>(j)) - (*q_star)[c]);
            }
            for (std::size_t c = 0; c < q_star->size(); ++c)
                if (!in[c]) err += std::abs((*q_star)[c]);
            os << err;
        } else {
            os << "NA";
        }
        for (Eigen::Index i = 0; i < t.alpha.size(); ++i) os << ',' << t.alpha(i);
        for (Eigen::Index i = 0; i < t.mu.size(); ++i) os << ',' << t.mu(i);
        os << ',' << (t.projection_active ? 1 : 0) << ',' << (t.fallback ? 1 : 0) << ',' << t.samples_total << '\n';
    }
    os.flags(flags);
    os.precision(prec);
}

} // namespace cmdplp
