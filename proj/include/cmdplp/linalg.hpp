#pragma once

#include <Eigen/Dense>

namespace cmdplp {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Singular values by one-sided (Hestenes) Jacobi rotations, sorted descending.
/// The shorter dimension is orthogonalized, so the result has min(rows, cols) entries.
Vector singular_values(const Matrix& a);

/// Smallest of the min(rows, cols) singular values.
double smallest_singular_value(const Matrix& a);

/// Solves A x = b for square A. Throws SingularMatrixError carrying sigma_min(A)
/// when sigma_min(A) < 1e-12 * ||A||_2.
Vector solve_square_system(const Matrix& a, const Vector& b);

} // namespace cmdplp
