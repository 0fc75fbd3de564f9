#include "cmdplp/model.hpp"

#include "cmdplp/errors.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

namespace cmdplp {

namespace {

constexpr double kStochasticTol = 1e-12;

void check_distribution(std::span<const double> p, const std::string& what) {
    double total = 0.0;
    for (double v : p) {
        if (!(v >= 0.0) || !std::isfinite(v)) throw InputError(what + " has a negative or non-finite entry");
        total += v;
    }
    if (std::abs(total - 1.0) > kStochasticTol * std::max<double>(1.0, static_cast<double>(p.size())))
        throw InputError(what + " does not sum to 1");
}

void check_size(std::size_t got, std::size_t want, const std::string& what) {
    if (got != want)
        throw InputError(what + ": expected " + std::to_string(want) + " entries, got " + std::to_string(got));
}

} // namespace

double CmdpInstance::observation_width() const noexcept {
    return std::max(1.0, scale.width() + 2.0 * noise);
}

void CmdpInstance::validate() const {
    if (num_states == 0 || num_actions == 0) throw InputError("instance needs at least one state and one action");
    if (!(gamma > 0.0 && gamma < 1.0)) throw InputError("discount must lie in (0, 1)");
    if (!(noise >= 0.0)) throw InputError("noise half-width must be non-negative");
    check_size(kernel.size(), num_pairs() * num_states, "kernel");
    check_size(mean_reward.size(), num_pairs(), "mean_reward");
    check_size(init_dist.size(), num_states, "init_dist");
    check_size(budgets.size(), num_constraints(), "budgets");
    for (std::size_t s = 0; s < num_states; ++s)
        for (std::size_t a = 0; a < num_actions; ++a)
            check_distribution(next_distribution(s, a),
                               "kernel row (" + std::to_string(s) + "," + std::to_string(a) + ")");
    check_distribution(init_dist, "init_dist");
    for (std::size_t k = 0; k < num_constraints(); ++k) {
        check_size(mean_costs[k].size(), num_pairs(), "mean_costs[" + std::to_string(k) + "]");
        const double cap = scale.high / (1.0 - gamma);
        if (!(budgets[k] >= 0.0) || budgets[k] > cap * (1.0 + 1e-12))
            throw InputError("budget " + std::to_string(k) + " outside [0, high/(1-gamma)]");
    }
}

void EpisodicInstance::validate() const {
    if (num_states == 0 || num_actions == 0 || horizon == 0)
        throw InputError("episodic instance needs states, actions and at least one period");
    check_size(kernel.size(), horizon * num_pairs() * num_states, "kernel");
    check_size(mean_reward.size(), horizon * num_pairs(), "mean_reward");
    check_size(init_dist.size(), num_states, "init_dist");
    check_size(budgets.size(), num_constraints(), "budgets");
    for (std::size_t h = 0; h < horizon; ++h)
        for (std::size_t s = 0; s < num_states; ++s)
            for (std::size_t a = 0; a < num_actions; ++a)
                check_distribution({kernel.data() + index(h, s, a) * num_states, num_states}, "episodic kernel row");
    check_distribution(init_dist, "init_dist");
    for (const auto& c : mean_costs) check_size(c.size(), horizon * num_pairs(), "mean_costs");
}

Sample sample_generative(const CmdpInstance& instance, std::size_t s, std::size_t a, Rng& rng) {
    if (s >= instance.num_states || a >= instance.num_actions)
        throw InputError("state-action index out of range: (" + std::to_string(s) + "," + std::to_string(a) + ")");
    const std::size_t p = instance.pair(s, a);
    const double w = instance.noise;
    Sample out;
    out.reward = instance.mean_reward[p] + rng.uniform(-w, w);
    out.costs.resize(instance.num_constraints());
    for (std::size_t k = 0; k < instance.num_constraints(); ++k)
        out.costs[k] = instance.mean_costs[k][p] + rng.uniform(-w, w);
    out.next_state = rng.discrete(instance.next_distribution(s, a));
    return out;
}

namespace {

// Mean of n independent uniforms on [-w, w].
double uniform_mean(double w, std::uint64_t n, Rng& rng) {
    if (n <= 64) {
        double sum = 0.0;
        for (std::uint64_t i = 0; i < n; ++i) sum += rng.uniform(-w, w);
        return sum / static_cast<double>(n);
    }
    std::normal_distribution<double> z(0.0, w / std::sqrt(3.0 * static_cast<double>(n)));
    return std::clamp(z(rng), -w, w);
}

} // namespace

SampleBatch sample_generative_batch(const CmdpInstance& instance, std::size_t s, std::size_t a, std::uint64_t n,
                                    Rng& rng) {
    if (s >= instance.num_states || a >= instance.num_actions)
        throw InputError("state-action index out of range: (" + std::to_string(s) + "," + std::to_string(a) + ")");
    if (n == 0) throw InputError("batch size must be positive");
    const std::size_t p = instance.pair(s, a);
    SampleBatch b;
    b.n = n;
    b.reward_mean = instance.mean_reward[p] + uniform_mean(instance.noise, n, rng);
    b.cost_means.resize(instance.num_constraints());
    for (std::size_t k = 0; k < instance.num_constraints(); ++k)
        b.cost_means[k] = instance.mean_costs[k][p] + uniform_mean(instance.noise, n, rng);
    // multinomial as a chain of conditional binomials
    b.next_counts.assign(instance.num_states, 0);
    const auto dist = instance.next_distribution(s, a);
    std::uint64_t left = n;
    double mass = 1.0;
    for (std::size_t t = 0; t < instance.num_states && left > 0; ++t) {
        if (t + 1 == instance.num_states || mass <= dist[t]) {
            b.next_counts[t] = left;
            break;
        }
        const double prob = std::clamp(dist[t] / mass, 0.0, 1.0);
        std::binomial_distribution<std::uint64_t> bin(left, prob);
        b.next_counts[t] = bin(rng);
        left -= b.next_counts[t];
        mass -= dist[t];
    }
    return b;
}

CmdpInstance random_instance(const RandomInstanceConfig& config) {
    if (config.num_states == 0 || config.num_actions == 0) throw InputError("dimensions must be positive");
    if (!(config.gamma > 0.0 && config.gamma < 1.0)) throw InputError("discount must lie in (0, 1)");

    Rng rng(config.seed);
    CmdpInstance inst;
    inst.num_states = config.num_states;
    inst.num_actions = config.num_actions;
    inst.gamma = config.gamma;
    inst.noise = config.noise;
    inst.scale = config.mean_range;

    const std::size_t S = inst.num_states;
    const std::size_t A = inst.num_actions;
    inst.kernel.resize(S * A * S);
    for (std::size_t p = 0; p < S * A; ++p) {
        double* row = inst.kernel.data() + p * S;
        double total = 0.0;
        for (std::size_t t = 0; t < S; ++t) {
            // strictly positive draws keep every row normalizable
            row[t] = 1.0 - rng.uniform();
            total += row[t];
        }
        for (std::size_t t = 0; t < S; ++t) row[t] /= total;
    }

    const auto draw_means = [&] {
        std::vector<double> m(S * A);
        for (std::size_t s = 0; s < S; ++s)
            for (std::size_t a = 0; a < A; ++a)
                m[s * A + a] = (a == 0) ? (rng.uniform(), 0.0) : rng.uniform(config.mean_range.low, config.mean_range.high);
        return m;
    };
    inst.mean_reward = draw_means();
    for (std::size_t k = 0; k < config.num_constraints; ++k) {
        inst.mean_costs.push_back(draw_means());
        const auto& c = inst.mean_costs.back();
        const double mean = std::accumulate(c.begin(), c.end(), 0.0) / static_cast<double>(c.size());
        inst.budgets.push_back(config.budget_fraction * mean / (1.0 - config.gamma));
    }
    inst.init_dist.assign(S, 1.0 / static_cast<double>(S));
    return inst;
}

EpisodicInstance random_episodic_instance(const RandomEpisodicConfig& config) {
    Rng rng(config.seed);
    EpisodicInstance inst;
    inst.num_states = config.num_states;
    inst.num_actions = config.num_actions;
    inst.horizon = config.horizon;
    const std::size_t S = config.num_states, A = config.num_actions, H = config.horizon;
    inst.kernel.resize(H * S * A * S);
    for (std::size_t r = 0; r < H * S * A; ++r) {
        double total = 0.0;
        for (std::size_t t = 0; t < S; ++t) total += (inst.kernel[r * S + t] = 1.0 - rng.uniform());
        for (std::size_t t = 0; t < S; ++t) inst.kernel[r * S + t] /= total;
    }
    const auto draw = [&] {
        std::vector<double> m(H * S * A);
        for (std::size_t i = 0; i < m.size(); ++i) m[i] = (i % A == 0) ? (rng.uniform(), 0.0) : rng.uniform();
        return m;
    };
    inst.mean_reward = draw();
    for (std::size_t k = 0; k < config.num_constraints; ++k) {
        inst.mean_costs.push_back(draw());
        const auto& c = inst.mean_costs.back();
        // mean per-period cost times H: comparable to a total-cost budget
        const double mean = std::accumulate(c.begin(), c.end(), 0.0) / static_cast<double>(S * A);
        inst.budgets.push_back(config.budget_fraction * mean);
    }
    inst.init_dist.assign(S, 1.0 / static_cast<double>(S));
    return inst;
}

std::vector<double> policy_occupancy(const CmdpInstance& instance, std::span<const double> policy) {
    const std::size_t S = instance.num_states, A = instance.num_actions;
    if (policy.size() != S * A) throw InputError("policy table has the wrong size");
    // d solves (I - gamma P_pi^T) d = mu1, the discounted state visitation.
    Eigen::MatrixXd M = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(S), static_cast<Eigen::Index>(S));
    for (std::size_t s = 0; s < S; ++s)
        for (std::size_t a = 0; a < A; ++a) {
            const double pa = policy[s * A + a];
            if (pa == 0.0) continue;
            for (std::size_t t = 0; t < S; ++t)
                M(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(s)) -= instance.gamma * pa * instance.transition(s, a, t);
        }
    Eigen::VectorXd mu = Eigen::Map<const Eigen::VectorXd>(instance.init_dist.data(), static_cast<Eigen::Index>(S));
    Eigen::VectorXd d = M.partialPivLu().solve(mu);
    std::vector<double> q(S * A);
    for (std::size_t s = 0; s < S; ++s)
        for (std::size_t a = 0; a < A; ++a) q[s * A + a] = (1.0 - instance.gamma) * d(static_cast<Eigen::Index>(s)) * policy[s * A + a];
    return q;
}

std::optional<std::vector<double>> slater_witness(const CmdpInstance& instance) {
    const std::size_t S = instance.num_states, A = instance.num_actions;
    std::vector<double> null_policy(S * A, 0.0);
    for (std::size_t s = 0; s < S; ++s) null_policy[s * A] = 1.0;
    auto q = policy_occupancy(instance, null_policy);
    for (std::size_t k = 0; k < instance.num_constraints(); ++k) {
        double lp_cost = 0.0;
        for (std::size_t p = 0; p < q.size(); ++p) lp_cost += instance.mean_costs[k][p] * q[p];
        if (!(lp_cost < (1.0 - instance.gamma) * instance.budgets[k])) return std::nullopt;
    }
    return q;
}

} // namespace cmdplp
