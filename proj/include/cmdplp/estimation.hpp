#pragma once

#include "cmdplp/lp.hpp"
#include "cmdplp/model.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace cmdplp {

/// Streaming sample means of rewards, costs and transition frequencies per (s, a).
class EmpiricalEstimates {
public:
    EmpiricalEstimates() = default;
    EmpiricalEstimates(std::size_t num_states, std::size_t num_actions, std::size_t num_constraints);

    void update(std::size_t s, std::size_t a, const Sample& sample);
    void update(std::size_t s, std::size_t a, const SampleBatch& batch);
    /// Count-weighted combination, for samples collected in parallel.
    void merge(const EmpiricalEstimates& other);

    std::size_t num_states() const noexcept { return num_states_; }
    std::size_t num_actions() const noexcept { return num_actions_; }
    std::size_t num_constraints() const noexcept { return cost_mean_.size(); }

    std::uint64_t count(std::size_t s, std::size_t a) const { return counts_[s * num_actions_ + a]; }
    std::uint64_t min_count() const;
    std::uint64_t total_count() const;
    double mean_reward(std::size_t s, std::size_t a) const { return reward_mean_[s * num_actions_ + a]; }
    double mean_cost(std::size_t k, std::size_t s, std::size_t a) const { return cost_mean_[k][s * num_actions_ + a]; }
    /// P-bar(next | s, a); zero for a pair with no samples.
    double transition_freq(std::size_t s, std::size_t a, std::size_t next) const;

    std::vector<std::size_t> uncovered_pairs() const;
    std::vector<double> kernel() const;
    const std::vector<double>& reward_means() const noexcept { return reward_mean_; }
    const std::vector<std::vector<double>>& cost_means() const noexcept { return cost_mean_; }

private:
    std::size_t num_states_ = 0;
    std::size_t num_actions_ = 0;
    std::vector<std::uint64_t> counts_;
    std::vector<double> reward_mean_;
    std::vector<std::vector<double>> cost_mean_;
    std::vector<std::uint64_t> next_counts_;  // [s][a][s']
};

struct ConfidenceParams {
    double epsilon = 0.05;
    std::uint64_t n0 = 1;
    /// Observation range width; Rad is multiplied by it.
    double width = 1.0;
    /// Multiplier on the identification slack and on both thresholds (value gap and
    /// singular value). 1 reproduces the algorithm as stated.
    double confidence_scale = 1.0;
};

/// sqrt(log(2 / epsilon) / (2 n0)).
double rad(std::uint64_t n0, double epsilon);

struct GapBounds {
    double rad = 0.0;  // width-scaled radius the gaps were computed from
    double gap1 = 0.0;
    double gap2 = 0.0;
    double threshold() const noexcept { return 2.0 * gap1 + 2.0 * gap2; }
};

/// Discounted-case gaps from a (scaled) radius. `min_budget` is the smallest LP-scale
/// budget; gap2 is 0 when there are no cost rows.
GapBounds gaps_from_rad(double radius, std::size_t num_states, double gamma, double min_budget,
                        std::size_t num_constraints);

GapBounds gaps(const ConfidenceParams& params, std::size_t num_states, double gamma, double min_budget,
               std::size_t num_constraints);

/// Episodic gaps: slack and gap1 are H * Rad, gap2 depends on sigma* of the episodic basis.
GapBounds episodic_gaps(double radius, std::size_t num_states, std::size_t horizon, std::size_t num_constraints,
                        double sigma_star);

/// Empirical discounted LP from the estimates. Budgets are on the value scale.
/// Throws InputError listing the uncovered pairs if any pair has no samples.
StandardLp build_empirical_lp(const EmpiricalEstimates& est, double gamma, std::span<const double> budgets,
                              std::span<const double> init_dist);

} // namespace cmdplp
