#pragma once

#include "cmdplp/estimation.hpp"
#include "cmdplp/lp.hpp"
#include "cmdplp/model.hpp"
#include "cmdplp/rng.hpp"

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace cmdplp {

struct ColumnTest {
    std::size_t col = 0;
    double value = 0.0;  // V_{I \ {col}}
    bool dropped = false;
};

struct RowTest {
    RowLabel::Kind kind = RowLabel::Kind::Cost;
    std::size_t index = 0;
    double value = 0.0;  // Dual_{J \ {j}, I}
    double sigma = 0.0;  // smallest singular value of the reduced row block, 0 if too few rows
    bool dropped = false;
};

/// Execution record of one identification pass, in test order.
struct BasisTrace {
    double value = 0.0;  // V, or the empirical V-bar
    double value_threshold = 0.0;
    double slack = 0.0;
    std::vector<ColumnTest> columns;
    std::vector<RowTest> rows;
};

struct BasisResult {
    BasisPair basis;
    BasisTrace trace;
};

struct TrueIdentifyOptions {
    double value_tol = 1e-7;  // relative: |V' - V| <= value_tol * (1 + |V|)
    double rank_tol = 1e-9;
};

/// Drops columns whose removal keeps the LP value, then rows whose removal keeps the
/// restricted dual value and a full-rank row block, until |J| = |I|.
/// Throws InternalError if |J| never reaches |I|.
BasisResult identify_basis_true(const StandardLp& lp, const TrueIdentifyOptions& options = {});

/// The same sweep on the empirical LP with slack Rad * width, value tests against
/// 2 Gap1 + 2 Gap2 and the rank test sigma-bar >= |J'| |I| Rad * width. The slack and
/// both thresholds are multiplied by params.confidence_scale. Budgets are on the value scale.
BasisResult identify_basis_empirical(const EmpiricalEstimates& est, const ConfidenceParams& params, double gamma,
                                     std::span<const double> budgets, std::span<const double> init_dist);

/// A* = [C(J1, I); B(J2, I)].
Matrix basis_matrix(const StandardLp& lp, const BasisPair& basis);

struct BasisReport {
    bool pass = false;
    std::string failure;  // empty on pass
    double sigma_min = 0.0;
    double value = 0.0;   // r^T q of the completed basic solution
    Vector q;             // full length
};

/// Solves A* q_I = (alpha_J1; mu_J2) and checks positivity, feasibility and optimality.
BasisReport verify_basis(const StandardLp& lp, const BasisPair& basis);

struct HardnessConstants {
    double delta1 = 0.0;
    double delta2 = 0.0;
    double sigma0 = 0.0;
    double sigma_star = 0.0;
    bool exhaustive = false;
    BasisPair basis;
};

/// delta1, delta2 and sigma0 along the identification path, refined by full subset
/// enumeration when 2^(columns + rows) fits in `subset_limit` (delta1 alone needs
/// 2^columns). A constant with no positive candidate is reported as +infinity.
HardnessConstants hardness_constants(const StandardLp& lp, std::uint64_t subset_limit = 1u << 16);

struct DoublingOptions {
    ConfidenceParams params;        // n0 is ignored
    std::uint64_t n_start = 16;     // first per-pair sample count
    std::uint64_t sample_budget = 1u << 20;  // total generative queries
    /// Stop once this many consecutive stages return the same basis; 0 keeps doubling
    /// until the next stage would exceed the budget.
    std::size_t stop_after_agreeing = 0;
};

struct DoublingResult {
    BasisPair basis;
    bool converged = false;  // the last two stages returned the same square basis
    std::uint64_t n0 = 0;
    std::uint64_t samples_used = 0;
    std::vector<std::uint64_t> stages;
};

/// Doubles the per-pair sample count, reusing earlier samples, and identifies at every
/// stage. Returns the last stage's basis when the budget runs out, or the agreed basis
/// when early stopping is enabled.
DoublingResult identify_basis_doubling(const CmdpInstance& instance, const DoublingOptions& options, Rng& rng);

} // namespace cmdplp
