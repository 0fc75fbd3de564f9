#pragma once

#include "cmdplp/model.hpp"

#include <cstddef>
#include <vector>

namespace fixture {

// Instance on the [0, 1] scale with zero noise. `next[s][a]` is a deterministic successor.
inline cmdplp::CmdpInstance deterministic(std::size_t S, std::size_t A, double gamma,
                                          const std::vector<std::vector<std::size_t>>& next,
                                          const std::vector<double>& reward,
                                          const std::vector<std::vector<double>>& costs = {},
                                          const std::vector<double>& budgets = {},
                                          std::vector<double> init = {}) {
    cmdplp::CmdpInstance m;
    m.num_states = S;
    m.num_actions = A;
    m.gamma = gamma;
    m.kernel.assign(S * A * S, 0.0);
    for (std::size_t s = 0; s < S; ++s)
        for (std::size_t a = 0; a < A; ++a) m.kernel[(s * A + a) * S + next[s][a]] = 1.0;
    m.mean_reward = reward;
    m.mean_costs = costs;
    m.budgets = budgets;
    if (init.empty()) init.assign(S, 1.0 / static_cast<double>(S));
    m.init_dist = init;
    m.validate();
    return m;
}

// Same structure with an explicit kernel ([s][a][s'] flattened).
inline cmdplp::CmdpInstance dense(std::size_t S, std::size_t A, double gamma, std::vector<double> kernel,
                                  const std::vector<double>& reward,
                                  const std::vector<std::vector<double>>& costs = {},
                                  const std::vector<double>& budgets = {}, std::vector<double> init = {}) {
    cmdplp::CmdpInstance m;
    m.num_states = S;
    m.num_actions = A;
    m.gamma = gamma;
    m.kernel = std::move(kernel);
    m.mean_reward = reward;
    m.mean_costs = costs;
    m.budgets = budgets;
    if (init.empty()) init.assign(S, 1.0 / static_cast<double>(S));
    m.init_dist = init;
    m.validate();
    return m;
}

// Random instance rescaled to [0, 1] means with no noise, handy for theory-scale checks.
inline cmdplp::CmdpInstance unit_scale(std::size_t S, std::size_t A, std::size_t K, double gamma,
                                       std::uint64_t seed, double noise = 0.0) {
    cmdplp::RandomInstanceConfig cfg;
    cfg.num_states = S;
    cfg.num_actions = A;
    cfg.num_constraints = K;
    cfg.gamma = gamma;
    cfg.seed = seed;
    cfg.noise = noise;
    cfg.mean_range = {0.0, 1.0};
    return cmdplp::random_instance(cfg);
}

inline cmdplp::CmdpInstance standard(std::size_t S, std::size_t A, std::size_t K, std::uint64_t seed,
                                     double gamma = 0.7) {
    cmdplp::RandomInstanceConfig cfg;
    cfg.num_states = S;
    cfg.num_actions = A;
    cfg.num_constraints = K;
    cfg.gamma = gamma;
    cfg.seed = seed;
    return cmdplp::random_instance(cfg);
}

} // namespace fixture
