#pragma once

#include "cmdplp/lp.hpp"
#include "cmdplp/model.hpp"
#include "cmdplp/policy.hpp"
#include "cmdplp/rng.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace cmdplp {

/// Value-scale policy values from the initial distribution.
struct ValueReport {
    double v_reward = 0.0;
    std::vector<double> v_costs;
    std::vector<double> state_reward;               // per-state values (exact evaluation)
    std::vector<std::vector<double>> state_costs;   // [k][s]
    // Monte Carlo only: standard errors including the truncation tail bound
    double se_reward = 0.0;
    std::vector<double> se_costs;
    std::size_t truncation = 0;
};

/// Solves (I - gamma P_pi) v = r_pi for the reward and every cost channel.
ValueReport evaluate_exact(const CmdpInstance& instance, const PolicyTable& policy);

struct MonteCarloOptions {
    std::uint64_t rollouts = 10000;
    std::optional<std::size_t> truncation;  // default: smallest T with gamma^T / (1 - gamma) <= tail_tol
    double tail_tol = 1e-4;
};

/// Rollouts from mu1 with noisy observations, truncated at T steps.
ValueReport evaluate_monte_carlo(const CmdpInstance& instance, const PolicyTable& policy,
                                 const MonteCarloOptions& options, Rng& rng);

struct RegretReport {
    double regret_r = 0.0;
    std::vector<double> regret_k;  // V_k(pi) - alpha_k, value scale
    double max_regret_k() const;   // -inf when K = 0
};

RegretReport regret_report(const CmdpInstance& instance, const ValueReport& policy_report,
                           const ValueReport& optimal_report);

/// Mean over runs of ||q_bar - q_star||_1 / ||q_star||_1.
double err_metric(std::span<const std::vector<double>> runs, std::span<const double> q_star);

struct OptimalSolution {
    LpSolution lp;
    PolicyTable policy;
    ValueReport values;
};

/// Solves the true occupancy LP and evaluates the extracted policy.
/// Throws InputError when the LP is infeasible.
OptimalSolution solve_optimal(const CmdpInstance& instance);

struct ValueIterationResult {
    std::vector<double> values;  // per state
    double value = 0.0;          // mu1^T v
    std::size_t iterations = 0;
};

/// Unconstrained optimal values by value iteration (costs are ignored).
ValueIterationResult value_iteration(const CmdpInstance& instance, double tol = 1e-12,
                                     std::size_t max_iterations = 1'000'000);

/// Unconstrained optimal expected total reward of an episodic instance.
double backward_induction(const EpisodicInstance& instance);

/// Expected total reward and costs of a non-stationary policy.
ValueReport evaluate_episodic(const EpisodicInstance& instance, const PolicyTable& policy);

} // namespace cmdplp
