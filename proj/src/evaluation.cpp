#include "cmdplp/evaluation.hpp"

#include "cmdplp/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace cmdplp {

namespace {

void check_policy(const CmdpInstance& instance, const PolicyTable& policy) {
    if (policy.num_states != instance.num_states || policy.num_actions != instance.num_actions || policy.horizon != 0)
        throw InputError("policy does not match the instance");
    for (std::size_t s = 0; s < instance.num_states; ++s) {
        double total = 0.0;
        for (double p : policy.row(s)) {
            if (p < 0.0) throw InputError("policy has a negative probability");
            total += p;
        }
        if (std::abs(total - 1.0) > 1e-9) throw InputError("policy row does not sum to 1");
    }
}

double reward_bound(const CmdpInstance& instance) {
    double m = 0.0;
    for (double r : instance.mean_reward) m = std::max(m, std::abs(r));
    for (const auto& c : instance.mean_costs)
        for (double v : c) m = std::max(m, std::abs(v));
    return m + instance.noise;
}

} // namespace

ValueReport evaluate_exact(const CmdpInstance& instance, const PolicyTable& policy) {
    check_policy(instance, policy);
    const std::size_t S = instance.num_states, A = instance.num_actions, K = instance.num_constraints();
    const auto n = static_cast<Eigen::Index>(S);
    Matrix b = Matrix::Identity(n, n);
    Matrix rhs = Matrix::Zero(n, static_cast<Eigen::Index>(K + 1));
    for (std::size_t s = 0; s < S; ++s)
        for (std::size_t a = 0; a < A; ++a) {
            const double p = policy(s, a);
            if (p == 0.0) continue;
            const auto si = static_cast<Eigen::Index>(s);
            for (std::size_t t = 0; t < S; ++t) b(si, static_cast<Eigen::Index>(t)) -= instance.gamma * p * instance.transition(s, a, t);
            rhs(si, 0) += p * instance.mean_reward[s * A + a];
            for (std::size_t k = 0; k < K; ++k) rhs(si, static_cast<Eigen::Index>(k + 1)) += p * instance.mean_costs[k][s * A + a];
        }
    Eigen::PartialPivLU<Matrix> lu(b);
    if (!(lu.rcond() > 1e-14)) throw SingularMatrixError("policy evaluation system is singular", 0.0);
    const Matrix v = lu.solve(rhs);
    const Vector mu1 = Eigen::Map<const Vector>(instance.init_dist.data(), n);

    ValueReport rep;
    rep.state_reward.assign(v.col(0).data(), v.col(0).data() + n);
    rep.v_reward = mu1.dot(v.col(0));
    for (std::size_t k = 0; k < K; ++k) {
        const auto c = static_cast<Eigen::Index>(k + 1);
        rep.state_costs.emplace_back(v.col(c).data(), v.col(c).data() + n);
        rep.v_costs.push_back(mu1.dot(v.col(c)));
    }
    return rep;
}

ValueReport evaluate_monte_carlo(const CmdpInstance& instance, const PolicyTable& policy,
                                 const MonteCarloOptions& options, Rng& rng) {
    check_policy(instance, policy);
    if (options.rollouts < 2) throw InputError("Monte Carlo evaluation needs at least two rollouts");
    const double g = instance.gamma;
    std::size_t horizon = 0;
    if (options.truncation) {
        horizon = *options.truncation;
    } else {
        while (std::pow(g, static_cast<double>(horizon)) / (1.0 - g) > options.tail_tol) ++horizon;
    }
    const std::size_t K = instance.num_constraints();
    const double tail = std::pow(g, static_cast<double>(horizon)) / (1.0 - g) * reward_bound(instance);

    std::vector<double> sum(K + 1, 0.0), sum_sq(K + 1, 0.0), acc(K + 1);
    for (std::uint64_t r = 0; r < options.rollouts; ++r) {
        std::fill(acc.begin(), acc.end(), 0.0);
        std::size_t s = rng.discrete(instance.init_dist);
        double disc = 1.0;
        for (std::size_t t = 0; t < horizon; ++t) {
            const std::size_t a = policy.sample(s, rng);
            const Sample smp = sample_generative(instance, s, a, rng);
            acc[0] += disc * smp.reward;
            for (std::size_t k = 0; k < K; ++k) acc[k + 1] += disc * smp.costs[k];
            disc *= g;
            s = smp.next_state;
        }
        for (std::size_t c = 0; c <= K; ++c) {
            sum[c] += acc[c];
            sum_sq[c] += acc[c] * acc[c];
        }
    }
    const double n = static_cast<double>(options.rollouts);
    const auto stats = [&](std::size_t c, double& mean, double& se) {
        mean = sum[c] / n;
        const double var = std::max(0.0, (sum_sq[c] - n * mean * mean) / (n - 1.0));
        se = std::sqrt(var / n) + tail;
    };
    ValueReport rep;
    rep.truncation = horizon;
    stats(0, rep.v_reward, rep.se_reward);
    rep.v_costs.resize(K);
    rep.se_costs.resize(K);
    for (std::size_t k = 0; k < K; ++k) stats(k + 1, rep.v_costs[k], rep.se_costs[k]);
    return rep;
}

double RegretReport::max_regret_k() const {
    if (regret_k.empty()) return -std::numeric_limits<double>::infinity();
    return *std::max_element(regret_k.begin(), regret_k.end());
}

RegretReport regret_report(const CmdpInstance& instance, const ValueReport& policy_report,
                           const ValueReport& optimal_report) {
    if (policy_report.v_costs.size() != instance.num_constraints())
        throw InputError("value report does not match the instance");
    RegretReport rep;
    rep.regret_r = optimal_report.v_reward - policy_report.v_reward;
    for (std::size_t k = 0; k < instance.num_constraints(); ++k)
        rep.regret_k.push_back(policy_report.v_costs[k] - instance.budgets[k]);
    return rep;
}

double err_metric(std::span<const std::vector<double>> runs, std::span<const double> q_star) {
    if (runs.empty()) throw InputError("err_metric needs at least one run");
    double norm = 0.0;
    for (double v : q_star) norm += std::abs(v);
    if (!(norm > 0.0)) throw InputError("err_metric: q* has zero norm");
    double total = 0.0;
    for (const auto& q : runs) {
        if (q.size() != q_star.size()) throw InputError("err_metric: occupancy length mismatch");
        double d = 0.0;
        for (std::size_t i = 0; i < q.size(); ++i) d += std::abs(q[i] - q_star[i]);
        total += d / norm;
    }
    return total / static_cast<double>(runs.size());
}

OptimalSolution solve_optimal(const CmdpInstance& instance) {
    instance.validate();
    OptimalSolution out;
    const StandardLp lp = build_infinite_lp(instance);
    out.lp = solve_restricted_primal(lp, {});
    if (out.lp.status != LpStatus::Optimal)
        throw InputError(std::string("occupancy LP is ") + to_string(out.lp.status));
    const std::vector<double> q(out.lp.q.data(), out.lp.q.data() + out.lp.q.size());
    out.policy = extract_policy(q, instance.num_states, instance.num_actions);
    out.values = evaluate_exact(instance, out.policy);
    return out;
}

ValueIterationResult value_iteration(const CmdpInstance& instance, double tol, std::size_t max_iterations) {
    const std::size_t S = instance.num_states, A = instance.num_actions;
    std::vector<double> v(S, 0.0), next(S);
    ValueIterationResult res;
    // stop once the contraction bound puts the fixed point within tol
    const double stop = tol * (1.0 - instance.gamma) / std::max(instance.gamma, 1e-300);
    for (res.iterations = 0; res.iterations < max_iterations; ++res.iterations) {
        double diff = 0.0;
        for (std::size_t s = 0; s < S; ++s) {
            double best = -std::numeric_limits<double>::infinity();
            for (std::size_t a = 0; a < A; ++a) {
                double q = instance.mean_reward[s * A + a];
                for (std::size_t t = 0; t < S; ++t) q += instance.gamma * instance.transition(s, a, t) * v[t];
                best = std::max(best, q);
            }
            next[s] = best;
            diff = std::max(diff, std::abs(best - v[s]));
        }
        v.swap(next);
        if (diff <= stop) break;
    }
    res.values = v;
    for (std::size_t s = 0; s < S; ++s) res.value += instance.init_dist[s] * v[s];
    return res;
}

double backward_induction(const EpisodicInstance& instance) {
    const std::size_t S = instance.num_states, A = instance.num_actions, H = instance.horizon;
    std::vector<double> v(S, 0.0), next(S);
    for (std::size_t h = H; h-- > 0;) {
        for (std::size_t s = 0; s < S; ++s) {
            double best = -std::numeric_limits<double>::infinity();
            for (std::size_t a = 0; a < A; ++a) {
                double q = instance.mean_reward[instance.index(h, s, a)];
                for (std::size_t t = 0; t < S; ++t) q += instance.transition(h, s, a, t) * v[t];
                best = std::max(best, q);
            }
            next[s] = best;
        }
        v.swap(next);
    }
    double total = 0.0;
    for (std::size_t s = 0; s < S; ++s) total += instance.init_dist[s] * v[s];
    return total;
}

ValueReport evaluate_episodic(const EpisodicInstance& instance, const PolicyTable& policy) {
    const std::size_t S = instance.num_states, A = instance.num_actions, H = instance.horizon;
    const std::size_t K = instance.num_constraints();
    if (policy.num_states != S || policy.num_actions != A || policy.horizon != H)
        throw InputError("episodic policy does not match the instance");
    // forward pass over state distributions
    std::vector<double> d(instance.init_dist), nd(S);
    ValueReport rep;
    rep.v_costs.assign(K, 0.0);
    for (std::size_t h = 0; h < H; ++h) {
        std::fill(nd.begin(), nd.end(), 0.0);
        for (std::size_t s = 0; s < S; ++s)
            for (std::size_t a = 0; a < A; ++a) {
                const double m = d[s] * policy(s, a, h);
                if (m == 0.0) continue;
                const std::size_t i = instance.index(h, s, a);
                rep.v_reward += m * instance.mean_reward[i];
                for (std::size_t k = 0; k < K; ++k) rep.v_costs[k] += m * instance.mean_costs[k][i];
                for (std::size_t t = 0; t < S; ++t) nd[t] += m * instance.transition(h, s, a, t);
            }
        d.swap(nd);
    }
    return rep;
}

} // namespace cmdplp
