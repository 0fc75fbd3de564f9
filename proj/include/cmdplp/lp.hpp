#pragma once

#include "cmdplp/linalg.hpp"
#include "cmdplp/model.hpp"
#include "cmdplp/simplex.hpp"

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

namespace cmdplp {

struct ColumnLabel {
    std::size_t state = 0;
    std::size_t action = 0;
    std::size_t period = 0;  // always 0 for the discounted build
};

struct RowLabel {
    enum class Kind { Cost, Flow };
    Kind kind = Kind::Cost;
    std::size_t index = 0;   // constraint k, or state s
    std::size_t period = 0;
};

/// max r^T q  s.t.  C q <= alpha,  B q = mu,  q >= 0.
///
/// For the discounted build the objective is (1 - gamma) * V_r and `budgets` holds
/// the LP-scale right-hand side (1 - gamma) * alpha.
struct StandardLp {
    Vector objective;
    Matrix cost_matrix;   // K x n
    Matrix flow_matrix;   // F x n
    Vector budgets;       // K
    Vector flow_rhs;      // F
    std::vector<ColumnLabel> col_labels;
    std::vector<RowLabel> row_labels;  // cost rows first, then flow rows
    std::size_t num_states = 0;
    std::size_t num_actions = 0;
    std::size_t horizon = 0;  // 0 for the discounted build
    double gamma = 0.0;

    std::size_t num_cols() const noexcept { return static_cast<std::size_t>(objective.size()); }
    std::size_t num_cost_rows() const noexcept { return static_cast<std::size_t>(cost_matrix.rows()); }
    std::size_t num_flow_rows() const noexcept { return static_cast<std::size_t>(flow_matrix.rows()); }
};

struct RowSubset {
    std::vector<std::size_t> cost_rows;
    std::vector<std::size_t> flow_rows;

    static RowSubset all(const StandardLp& lp);
    std::size_t size() const noexcept { return cost_rows.size() + flow_rows.size(); }
};

/// Index sets of one optimal basis: non-zero basic columns and supporting rows.
struct BasisPair {
    std::vector<std::size_t> cols;
    std::vector<std::size_t> rows_cost;
    std::vector<std::size_t> rows_flow;

    RowSubset rows() const { return {rows_cost, rows_flow}; }
    bool operator==(const BasisPair&) const = default;
};

struct LpSolution {
    LpStatus status = LpStatus::Infeasible;
    double value = 0.0;
    Vector q;       // full length, zeros on fixed columns
    Vector dual_y;  // K, zero off the row subset
    Vector dual_z;  // F, zero off the row subset
};

/// Assembles the discounted LP from raw tables. Shared by the true and empirical builds.
/// `budgets` are on the value scale and are multiplied by (1 - gamma) here.
StandardLp assemble_discounted_lp(std::size_t num_states, std::size_t num_actions, double gamma,
                                  std::span<const double> kernel, std::span<const double> reward,
                                  const std::vector<std::vector<double>>& costs,
                                  std::span<const double> budgets, std::span<const double> init_dist);

StandardLp build_infinite_lp(const CmdpInstance& instance);

/// Episodic LP. Columns are ordered by (h, s, a); flow row (h, s) balances period h.
StandardLp build_finite_lp(const EpisodicInstance& instance);

/// max r^T q over q >= 0 with q_j = 0 for j in `fixed_zero`,
/// C(J1,:) q <= alpha_J1 + slack and |B(J2,:) q - mu_J2| <= slack.
/// With slack 0 the flow rows are equalities. `rows` defaults to every row.
LpSolution solve_restricted_primal(const StandardLp& lp, std::span<const std::size_t> fixed_zero,
                                   const std::optional<RowSubset>& rows = std::nullopt, double slack = 0.0,
                                   const SimplexOptions& options = {});

/// Dual_{J,I}: the minimum of alpha^T y + mu^T z with y >= 0 on J1, z free on J2 and
/// C(:,I)^T y + B(:,I)^T z >= r_I. Computed through the equivalent primal restricted
/// to columns I and rows J. An unbounded primal means the dual is infeasible, i.e. J
/// is too small to support the restricted problem; the value is then +infinity.
LpSolution solve_restricted_dual(const StandardLp& lp, std::span<const std::size_t> cols, const RowSubset& rows,
                                 double slack = 0.0, const SimplexOptions& options = {});

/// An optimal dual (y, z) of the full LP with the smallest ||y||_1, found by a second
/// LP over the optimal dual face {dual feasible, alpha^T y + mu^T z <= value + tol}.
LpSolution min_norm_dual(const StandardLp& lp, double value, double tol = 1e-9);

/// Columns outside `keep`, in ascending order.
std::vector<std::size_t> complement(std::span<const std::size_t> keep, std::size_t n);

/// Plain-text dump: objective, then C | alpha rows, then B | mu rows.
void write_lp_text(std::ostream& os, const StandardLp& lp);

} // namespace cmdplp
