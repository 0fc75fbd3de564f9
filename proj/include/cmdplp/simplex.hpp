#pragma once

#include "cmdplp/linalg.hpp"

#include <cstddef>
#include <vector>

namespace cmdplp {

enum class LpStatus { Optimal, Infeasible, Unbounded };

const char* to_string(LpStatus status) noexcept;

enum class RowSense { LessEqual, Equal, GreaterEqual };

/// max c^T x  s.t.  A x (sense) b,  x >= 0.
struct LinearProgram {
    Matrix a;
    Vector b;
    std::vector<RowSense> sense;
    Vector c;
};

struct SimplexOptions {
    double feasibility_tol = 1e-9;
    double optimality_tol = 1e-9;
    double pivot_tol = 1e-11;
    std::size_t max_iterations = 20000;
    /// Consecutive degenerate pivots tolerated under Dantzig pricing before the
    /// phase switches to Bland's rule for the rest of its run.
    std::size_t degenerate_switch = 40;
};

struct SimplexResult {
    LpStatus status = LpStatus::Infeasible;
    double value = 0.0;
    Vector x;
    /// Row multipliers of the original rows: >= 0 on <= rows, <= 0 on >= rows.
    Vector duals;
    std::size_t iterations = 0;
    bool used_bland = false;
};

/// Two-phase dense revised simplex. The basis matrix is refactorized with partial
/// pivoting at every iteration, which is cheap at the sizes this library targets
/// (a few dozen rows) and keeps primal and dual values accurate to ~1e-12.
SimplexResult solve_simplex(const LinearProgram& lp, const SimplexOptions& options = {});

} // namespace cmdplp
