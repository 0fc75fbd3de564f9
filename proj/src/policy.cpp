#include "cmdplp/policy.hpp"

#include "cmdplp/errors.hpp"

#include <algorithm>
#include <string>

namespace cmdplp {

PolicyTable PolicyTable::uniform(std::size_t num_states, std::size_t num_actions, std::size_t horizon) {
    PolicyTable p{num_states, num_actions, horizon, {}};
    p.probs.assign(p.periods() * num_states * num_actions, 1.0 / static_cast<double>(num_actions));
    return p;
}

PolicyTable PolicyTable::deterministic(std::size_t num_actions, std::span<const std::size_t> actions) {
    PolicyTable p{actions.size(), num_actions, 0, {}};
    p.probs.assign(actions.size() * num_actions, 0.0);
    for (std::size_t s = 0; s < actions.size(); ++s) {
        if (actions[s] >= num_actions) throw InputError("action index out of range");
        p.probs[s * num_actions + actions[s]] = 1.0;
    }
    return p;
}

PolicyTable extract_policy(std::span<const double> q, std::size_t num_states, std::size_t num_actions,
                           std::size_t horizon) {
    PolicyTable p{num_states, num_actions, horizon, {}};
    const std::size_t H = p.periods();
    if (q.size() != H * num_states * num_actions) throw InputError("occupancy vector has the wrong size");
    p.probs.resize(q.size());
    for (std::size_t i = 0; i < q.size(); ++i)
        if (q[i] < -1e-12) throw InputError("negative occupancy entry " + std::to_string(q[i]) + " at index " + std::to_string(i));

    for (std::size_t r = 0; r < H * num_states; ++r) {
        const double* in = q.data() + r * num_actions;
        double* out = p.probs.data() + r * num_actions;
        double mass = 0.0;
        for (std::size_t a = 0; a < num_actions; ++a) mass += std::max(0.0, in[a]);
        for (std::size_t a = 0; a < num_actions; ++a)
            out[a] = mass > 0.0 ? std::max(0.0, in[a]) / mass : 1.0 / static_cast<double>(num_actions);
    }
    return p;
}

} // namespace cmdplp
