#pragma once

#include "cmdplp/rng.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace cmdplp {

/// pi(a | s), or pi_h(a | s) for an episodic policy.
struct PolicyTable {
    std::size_t num_states = 0;
    std::size_t num_actions = 0;
    std::size_t horizon = 0;    // 0: stationary
    std::vector<double> probs;  // [h][s][a]

    std::size_t periods() const noexcept { return horizon == 0 ? 1 : horizon; }
    double operator()(std::size_t s, std::size_t a, std::size_t h = 0) const {
        return probs[(h * num_states + s) * num_actions + a];
    }
    std::span<const double> row(std::size_t s, std::size_t h = 0) const {
        return {probs.data() + (h * num_states + s) * num_actions, num_actions};
    }
    std::size_t sample(std::size_t s, Rng& rng, std::size_t h = 0) const { return rng.discrete(row(s, h)); }

    static PolicyTable uniform(std::size_t num_states, std::size_t num_actions, std::size_t horizon = 0);
    /// Deterministic policy taking `actions[s]` everywhere.
    static PolicyTable deterministic(std::size_t num_actions, std::span<const std::size_t> actions);
};

/// Normalizes q(s, .) per state (and per period); states with zero mass get 1/|A|.
/// q is laid out as [h][s][a]. Entries below -1e-12 raise InputError; smaller
/// negatives are treated as zero.
PolicyTable extract_policy(std::span<const double> q, std::size_t num_states, std::size_t num_actions,
                           std::size_t horizon = 0);

} // namespace cmdplp
