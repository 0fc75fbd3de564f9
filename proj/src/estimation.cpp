#include "cmdplp/estimation.hpp"

#include "cmdplp/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace cmdplp {

EmpiricalEstimates::EmpiricalEstimates(std::size_t num_states, std::size_t num_actions, std::size_t num_constraints)
    : num_states_(num_states),
      num_actions_(num_actions),
      counts_(num_states * num_actions, 0),
      reward_mean_(num_states * num_actions, 0.0),
      cost_mean_(num_constraints, std::vector<double>(num_states * num_actions, 0.0)),
      next_counts_(num_states * num_actions * num_states, 0) {}

void EmpiricalEstimates::update(std::size_t s, std::size_t a, const Sample& sample) {
    if (s >= num_states_ || a >= num_actions_ || sample.next_state >= num_states_)
        throw InputError("estimate update with an out-of-range index");
    if (sample.costs.size() < cost_mean_.size()) throw InputError("sample carries too few cost observations");
    const std::size_t p = s * num_actions_ + a;
    const double n = static_cast<double>(++counts_[p]);
    reward_mean_[p] += (sample.reward - reward_mean_[p]) / n;
    for (std::size_t k = 0; k < cost_mean_.size(); ++k) cost_mean_[k][p] += (sample.costs[k] - cost_mean_[k][p]) / n;
    ++next_counts_[p * num_states_ + sample.next_state];
}

void EmpiricalEstimates::update(std::size_t s, std::size_t a, const SampleBatch& batch) {
    if (s >= num_states_ || a >= num_actions_ || batch.next_counts.size() != num_states_)
        throw InputError("batch update with an out-of-range index");
    if (batch.cost_means.size() < cost_mean_.size()) throw InputError("batch carries too few cost observations");
    if (batch.n == 0) return;
    const std::size_t p = s * num_actions_ + a;
    counts_[p] += batch.n;
    const double w = static_cast<double>(batch.n) / static_cast<double>(counts_[p]);
    reward_mean_[p] += w * (batch.reward_mean - reward_mean_[p]);
    for (std::size_t k = 0; k < cost_mean_.size(); ++k) cost_mean_[k][p] += w * (batch.cost_means[k] - cost_mean_[k][p]);
    for (std::size_t t = 0; t < num_states_; ++t) next_counts_[p * num_states_ + t] += batch.next_counts[t];
}

void EmpiricalEstimates::merge(const EmpiricalEstimates& other) {
    if (other.num_states_ != num_states_ || other.num_actions_ != num_actions_ ||
        other.cost_mean_.size() != cost_mean_.size())
        throw InputError("cannot merge estimates of different shapes");
    for (std::size_t p = 0; p < counts_.size(); ++p) {
        const auto n1 = counts_[p], n2 = other.counts_[p];
        if (n2 == 0) continue;
        const double w = static_cast<double>(n2) / static_cast<double>(n1 + n2);
        reward_mean_[p] += w * (other.reward_mean_[p] - reward_mean_[p]);
        for (std::size_t k = 0; k < cost_mean_.size(); ++k)
            cost_mean_[k][p] += w * (other.cost_mean_[k][p] - cost_mean_[k][p]);
        counts_[p] = n1 + n2;
    }
    for (std::size_t i = 0; i < next_counts_.size(); ++i) next_counts_[i] += other.next_counts_[i];
}

std::uint64_t EmpiricalEstimates::min_count() const {
    return counts_.empty() ? 0 : *std::min_element(counts_.begin(), counts_.end());
}

std::uint64_t EmpiricalEstimates::total_count() const {
    return std::accumulate(counts_.begin(), counts_.end(), std::uint64_t{0});
}

double EmpiricalEstimates::transition_freq(std::size_t s, std::size_t a, std::size_t next) const {
    const std::size_t p = s * num_actions_ + a;
    if (counts_[p] == 0) return 0.0;
    return static_cast<double>(next_counts_[p * num_states_ + next]) / static_cast<double>(counts_[p]);
}

std::vector<std::size_t> EmpiricalEstimates::uncovered_pairs() const {
    std::vector<std::size_t> out;
    for (std::size_t p = 0; p < counts_.size(); ++p)
        if (counts_[p] == 0) out.push_back(p);
    return out;
}

std::vector<double> EmpiricalEstimates::kernel() const {
    std::vector<double> k(next_counts_.size(), 0.0);
    for (std::size_t p = 0; p < counts_.size(); ++p) {
        if (counts_[p] == 0) continue;
        const double inv = 1.0 / static_cast<double>(counts_[p]);
        for (std::size_t t = 0; t < num_states_; ++t)
            k[p * num_states_ + t] = static_cast<double>(next_counts_[p * num_states_ + t]) * inv;
    }
    return k;
}

double rad(std::uint64_t n0, double epsilon) {
    if (n0 == 0) throw InputError("rad: sample count must be positive");
    if (!(epsilon > 0.0 && epsilon < 1.0)) throw InputError("rad: epsilon must lie in (0, 1)");
    return std::sqrt(std::log(2.0 / epsilon) / (2.0 * static_cast<double>(n0)));
}

GapBounds gaps_from_rad(double radius, std::size_t num_states, double gamma, double min_budget,
                        std::size_t num_constraints) {
    GapBounds g;
    g.rad = radius;
    g.gap1 = radius;
    if (num_constraints == 0) return g;
    if (!(min_budget > 0.0)) throw InputError("gap bound undefined: smallest budget is zero");
    const double S = static_cast<double>(num_states);
    g.gap2 = 2.0 * radius / min_budget * (1.0 + S / (1.0 - gamma)) +
             radius * radius / min_budget * (S + S * S / (1.0 - gamma));
    return g;
}

GapBounds gaps(const ConfidenceParams& params, std::size_t num_states, double gamma, double min_budget,
               std::size_t num_constraints) {
    return gaps_from_rad(params.width * rad(params.n0, params.epsilon), num_states, gamma, min_budget,
                         num_constraints);
}

GapBounds episodic_gaps(double radius, std::size_t num_states, std::size_t horizon, std::size_t num_constraints,
                        double sigma_star) {
    if (!(sigma_star > 0.0)) throw InputError("episodic gap bound needs a positive sigma*");
    const double S = static_cast<double>(num_states), H = static_cast<double>(horizon);
    const double K = static_cast<double>(num_constraints);
    GapBounds g;
    g.rad = radius;
    g.gap1 = H * radius;
    g.gap2 = radius * 2.0 * (K + S * H) / sigma_star + radius * radius * (K * S + S * S * H) / sigma_star;
    return g;
}

StandardLp build_empirical_lp(const EmpiricalEstimates& est, double gamma, std::span<const double> budgets,
                              std::span<const double> init_dist) {
    const auto missing = est.uncovered_pairs();
    if (!missing.empty()) {
        std::string msg = "no samples for pairs:";
        for (auto p : missing)
            msg += " (" + std::to_string(p / est.num_actions()) + "," + std::to_string(p % est.num_actions()) + ")";
        throw InputError(msg);
    }
    const auto kernel = est.kernel();
    return assemble_discounted_lp(est.num_states(), est.num_actions(), gamma, kernel, est.reward_means(),
                                  est.cost_means(), budgets, init_dist);
}

} // namespace cmdplp
