#pragma once

#include "cmdplp/rng.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace cmdplp {

/// Nominal range of the mean rewards and costs. Observations add bounded noise on top.
struct ValueScale {
    double low = 0.0;
    double high = 1.0;
    double width() const noexcept { return high - low; }
};

/// Tabular constrained MDP with a discounted objective.
///
/// Budgets are on the value scale: a policy is feasible when
/// V_k(pi, mu1) = E[sum_t gamma^t c_k(s_t, a_t)] <= budgets[k]. The occupancy LP
/// works with (1 - gamma)-normalized measures, so its cost right-hand side is
/// (1 - gamma) * budgets; see build_infinite_lp.
///
/// Action 0 plays the role of the null action in generated instances.
struct CmdpInstance {
    std::size_t num_states = 0;
    std::size_t num_actions = 0;
    double gamma = 0.0;
    std::vector<double> kernel;                   // [s][a][s'], row-major
    std::vector<double> mean_reward;              // [s][a]
    std::vector<std::vector<double>> mean_costs;  // [k][s][a]
    std::vector<double> budgets;                  // [k], value scale
    std::vector<double> init_dist;                // [s]
    double noise = 0.0;                           // half-width of the additive uniform noise
    ValueScale scale;

    std::size_t num_constraints() const noexcept { return mean_costs.size(); }
    std::size_t num_pairs() const noexcept { return num_states * num_actions; }
    std::size_t pair(std::size_t s, std::size_t a) const noexcept { return s * num_actions + a; }

    std::span<const double> next_distribution(std::size_t s, std::size_t a) const {
        return {kernel.data() + pair(s, a) * num_states, num_states};
    }
    double transition(std::size_t s, std::size_t a, std::size_t next) const {
        return kernel[pair(s, a) * num_states + next];
    }

    /// Width of the interval a single reward/cost observation can fall in, floored at 1
    /// because transition indicators always span [0, 1]. Confidence radii are scaled by it.
    double observation_width() const noexcept;

    /// Throws InputError when a structural invariant is violated.
    void validate() const;
};

/// Finite-horizon instance with period-dependent kernels, rewards and costs.
struct EpisodicInstance {
    std::size_t num_states = 0;
    std::size_t num_actions = 0;
    std::size_t horizon = 0;
    std::vector<double> kernel;                   // [h][s][a][s']
    std::vector<double> mean_reward;              // [h][s][a]
    std::vector<std::vector<double>> mean_costs;  // [k][h][s][a]
    std::vector<double> budgets;                  // [k]
    std::vector<double> init_dist;                // [s]
    double noise = 0.0;
    ValueScale scale;

    std::size_t num_constraints() const noexcept { return mean_costs.size(); }
    std::size_t num_pairs() const noexcept { return num_states * num_actions; }
    std::size_t index(std::size_t h, std::size_t s, std::size_t a) const noexcept {
        return (h * num_states + s) * num_actions + a;
    }
    double transition(std::size_t h, std::size_t s, std::size_t a, std::size_t next) const {
        return kernel[index(h, s, a) * num_states + next];
    }

    void validate() const;
};

/// One generative-model observation at a state-action pair.
struct Sample {
    double reward = 0.0;
    std::vector<double> costs;
    std::size_t next_state = 0;
};

/// Draws reward and cost noise (one uniform each, always consumed) and then the
/// next state, in that order.
Sample sample_generative(const CmdpInstance& instance, std::size_t s, std::size_t a, Rng& rng);

/// n observations of one pair reduced to sufficient statistics. The next-state counts
/// are an exact multinomial draw. The noise means are exact averages of uniforms up to
/// 64 draws and a moment-matched normal (clipped to the noise range) beyond that.
/// For sample sizes too large to draw one at a time.
struct SampleBatch {
    std::uint64_t n = 0;
    double reward_mean = 0.0;
    std::vector<double> cost_means;
    std::vector<std::uint64_t> next_counts;
};

SampleBatch sample_generative_batch(const CmdpInstance& instance, std::size_t s, std::size_t a, std::uint64_t n,
                                    Rng& rng);

struct RandomInstanceConfig {
    std::size_t num_states = 10;
    std::size_t num_actions = 10;
    double gamma = 0.7;
    std::size_t num_constraints = 5;
    std::uint64_t seed = 1;
    double noise = 0.5;
    ValueScale mean_range{1.0, 2.0};
    /// alpha_k = budget_fraction * mean_{s,a}(c_k) / (1 - gamma)
    double budget_fraction = 0.9;
};

/// Dense random instance: kernel rows are normalized i.i.d. uniforms, means are
/// uniform on `mean_range`, and action 0 has zero mean reward and zero mean cost.
CmdpInstance random_instance(const RandomInstanceConfig& config);

struct RandomEpisodicConfig {
    std::size_t num_states = 3;
    std::size_t num_actions = 2;
    std::size_t horizon = 3;
    std::size_t num_constraints = 0;
    std::uint64_t seed = 1;
    double budget_fraction = 0.9;
};

/// Episodic analogue of random_instance on the [0, 1] scale; action 0 is null.
EpisodicInstance random_episodic_instance(const RandomEpisodicConfig& config);

/// (1 - gamma)-normalized occupancy measure of a stationary policy given as pi[s][a].
std::vector<double> policy_occupancy(const CmdpInstance& instance, std::span<const double> policy);

/// Occupancy of the always-null-action policy when it satisfies every cost
/// constraint strictly; nullopt otherwise.
std::optional<std::vector<double>> slater_witness(const CmdpInstance& instance);

} // namespace cmdplp
