#pragma once

#include "cmdplp/basis.hpp"
#include "cmdplp/estimation.hpp"
#include "cmdplp/lp.hpp"
#include "cmdplp/model.hpp"
#include "cmdplp/policy.hpp"
#include "cmdplp/rng.hpp"

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace cmdplp {

/// Euclidean projection of v onto {q : q >= lower, sum(q) <= radius}.
/// Throws InputError when lower * size > radius.
Vector project_capped_simplex(const Vector& v, double radius, double lower = 0.0);

/// Same projection for a full-length vector restricted to `support`; entries outside
/// the support are zero in the result.
Vector project_capped_simplex(const Vector& v, double radius, std::span<const std::size_t> support,
                              double lower = 0.0);

/// Source of observations for a set of required pairs. Every observation it makes is
/// folded into `est`; `out[i]` receives one observation of pairs[i].
class PairSampler {
public:
    virtual ~PairSampler() = default;
    /// Returns the number of environment queries or steps spent.
    virtual std::uint64_t collect(std::span<const std::size_t> pairs, std::vector<Sample>& out,
                                  EmpiricalEstimates& est, Rng& rng) = 0;
};

/// One query of the generative model per required pair.
class GenerativeSampler final : public PairSampler {
public:
    explicit GenerativeSampler(const CmdpInstance& instance) : instance_(instance) {}
    std::uint64_t collect(std::span<const std::size_t> pairs, std::vector<Sample>& out, EmpiricalEstimates& est,
                          Rng& rng) override;

private:
    const CmdpInstance& instance_;
};

/// Follows a stationary policy through the true environment until every required
/// pair has been visited. The walk position persists across calls.
class WalkSampler final : public PairSampler {
public:
    WalkSampler(const CmdpInstance& instance, PolicyTable policy, std::size_t start_state,
                std::uint64_t step_limit);
    std::uint64_t collect(std::span<const std::size_t> pairs, std::vector<Sample>& out, EmpiricalEstimates& est,
                          Rng& rng) override;

    void set_policy(PolicyTable policy) { policy_ = std::move(policy); }
    void set_step_limit(std::uint64_t limit) { step_limit_ = limit; }
    std::uint64_t step_limit() const noexcept { return step_limit_; }
    std::size_t state() const noexcept { return state_; }
    /// Visit counts per state since construction.
    const std::vector<std::uint64_t>& visits() const noexcept { return visits_; }

private:
    const CmdpInstance& instance_;
    PolicyTable policy_;
    std::size_t state_;
    std::uint64_t step_limit_;
    std::vector<std::uint64_t> visits_;
};

/// Remaining-budget ledger and running estimates of one resolving run.
struct ResolveState {
    BasisPair basis;
    std::size_t num_states = 0;
    std::size_t num_actions = 0;
    double gamma = 0.0;
    std::uint64_t round = 0;     // rounds completed
    std::uint64_t horizon = 0;   // N2
    Vector alpha;                // remaining budgets on J1
    Vector mu;                   // remaining flow on J2
    Vector alpha_initial;
    Vector mu_initial;
    Vector consumed_alpha;       // sum over rounds of realized C^m(J1, I) q^m
    Vector consumed_mu;          // sum over rounds of realized B^m(J2, I) q^m
    EmpiricalEstimates est;      // phase-one samples plus H_n
    Vector q_prev;               // previous round's q on I
    double radius = 2.0;
    double lower = 0.0;          // xi' in the on-policy variant
};

struct StepInfo {
    Vector q;                 // on I
    bool projection_active = false;
    bool fallback = false;
    std::uint64_t samples = 0;
};

/// Builds the ledger for a basis: alpha^1 = N2 * (1 - gamma) alpha_J1, mu^1 = N2 * mu_J2.
ResolveState make_resolve_state(const CmdpInstance& instance, const BasisPair& basis, std::uint64_t n2,
                                EmpiricalEstimates bootstrap);

/// Estimated A-bar = [C-bar(J1, I); B-bar(J2, I)] from the running estimates.
Matrix estimated_basis_matrix(const ResolveState& state);

/// One round: solve the square system against the pro-rated remaining budgets, project,
/// sample each pair of I once and update the ledger. A singular system reuses the
/// previous round's q (uniform on I in round one).
StepInfo resolve_step(ResolveState& state, PairSampler& sampler, Rng& rng);

struct ResolveOptions {
    std::uint64_t n1 = 1000;           // phase-one samples per pair (steps for the on-policy run)
    std::uint64_t n2 = 1000;           // resolving rounds
    double epsilon_target = 0.1;
    double confidence_scale = 1.0;      // forwarded to ConfidenceParams
    std::optional<BasisPair> basis;    // skip identification and use this basis
    bool record_trace = false;
    // off-policy and on-policy runs
    std::uint64_t step_limit = 50'000'000;
    // on-policy run
    std::uint64_t n3 = 64;
    std::optional<double> xi_prime;
};

struct RoundTrace {
    std::uint64_t n = 0;
    Vector alpha;
    Vector mu;
    bool projection_active = false;
    bool fallback = false;
    std::uint64_t samples_total = 0;
};

struct RunOutput {
    BasisPair basis;
    std::vector<Vector> rounds;      // q^n on I
    Vector q_bar;                    // full length
    PolicyTable policy;
    std::uint64_t phase1_samples = 0;
    std::uint64_t samples_used = 0;  // phase one plus resolving, queries or steps
    double epsilon = 0.0;            // confidence level used for identification
    std::uint64_t n0 = 0;            // per-pair count used for identification
    std::size_t fallbacks = 0;
    std::size_t projections_active = 0;
    std::uint64_t n3_doublings = 0;
    double xi_prime = 0.0;
    Vector alpha_initial, alpha_final, consumed_alpha;
    Vector mu_initial, mu_final, consumed_mu;
    std::vector<std::uint64_t> resolve_visits;  // per state, resolving phase of walk-based runs
    std::vector<RoundTrace> trace;
    std::vector<std::string> log;
};

/// epsilon = epsilon_target^2 / (max(K, 1) |S| |A|).
double identification_epsilon(const CmdpInstance& instance, double epsilon_target);

RunOutput run_adaptive_resolving(const CmdpInstance& instance, const ResolveOptions& options, Rng& rng);

/// Generative phase one (sampling and identification) kept apart so that a replicate
/// can be continued for several round counts. Continuing with a copy of the generator
/// left by generative_phase_one reproduces run_adaptive_resolving exactly.
struct PhaseOne {
    EmpiricalEstimates est;
    BasisPair basis;
    double epsilon = 0.0;
    std::uint64_t n0 = 0;
    std::uint64_t samples = 0;
};

PhaseOne generative_phase_one(const CmdpInstance& instance, const ResolveOptions& options, Rng& rng);
RunOutput continue_adaptive_resolving(const CmdpInstance& instance, const PhaseOne& phase_one,
                                      const ResolveOptions& options, Rng& rng);

/// Phase one walks `behavior` until every pair has n1 samples.
RunOutput run_offpolicy(const CmdpInstance& instance, const PolicyTable& behavior, const ResolveOptions& options,
                        Rng& rng);

/// Phase one follows the uniform policy for n1 steps; rounds follow the current iterate.
RunOutput run_onpolicy(const CmdpInstance& instance, const ResolveOptions& options, Rng& rng);

/// Stationary distribution of the state-action chain induced by `policy`.
std::vector<double> stationary_pair_distribution(const CmdpInstance& instance, const PolicyTable& policy);

/// One CSV row per round: n, err_l1 (when q_star is given), alpha entries, mu entries,
/// projection flag, cumulative samples.
void write_trace_csv(std::ostream& os, const RunOutput& run, const std::vector<double>* q_star);

} // namespace cmdplp
