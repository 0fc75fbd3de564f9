#include "cmdplp/linalg.hpp"

#include "cmdplp/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace cmdplp {

namespace {

constexpr double kSingularRel = 1e-12;
constexpr int kMaxSweeps = 80;

} // namespace

Vector singular_values(const Matrix& a) {
    if (a.size() == 0) throw InputError("singular values of an empty matrix");
    // Work on the tall orientation: columns are rotated until mutually orthogonal.
    Matrix u = a.rows() >= a.cols() ? a : Matrix(a.transpose());
    const Eigen::Index n = u.cols();
    const double eps = std::numeric_limits<double>::epsilon();

    for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
        bool rotated = false;
        for (Eigen::Index i = 0; i + 1 < n; ++i) {
            for (Eigen::Index j = i + 1; j < n; ++j) {
                const double alpha = u.col(i).squaredNorm();
                const double beta = u.col(j).squaredNorm();
                const double gamma = u.col(i).dot(u.col(j));
                if (gamma == 0.0 || std::abs(gamma) <= eps * std::sqrt(alpha * beta)) continue;
                rotated = true;
                const double zeta = (beta - alpha) / (2.0 * gamma);
                const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                for (Eigen::Index r = 0; r < u.rows(); ++r) {
                    const double ui = u(r, i);
                    const double uj = u(r, j);
                    u(r, i) = c * ui - s * uj;
                    u(r, j) = s * ui + c * uj;
                }
            }
        }
        if (!rotated) break;
    }

    Vector sv(n);
    for (Eigen::Index k = 0; k < n; ++k) sv(k) = u.col(k).norm();
    std::sort(sv.data(), sv.data() + n, std::greater<>());
    return sv;
}

double smallest_singular_value(const Matrix& a) {
    const Vector sv = singular_values(a);
    return sv(sv.size() - 1);
}

Vector solve_square_system(const Matrix& a, const Vector& b) {
    if (a.rows() != a.cols()) throw InputError("solve_square_system: matrix is not square");
    if (a.rows() != b.size()) throw InputError("solve_square_system: right-hand side has the wrong length");
    if (a.rows() == 0) return Vector(0);

    Eigen::PartialPivLU<Matrix> lu(a);
    // The 1-norm reciprocal condition estimate is cheap; only near-singular systems
    // pay for the full singular value check.
    if (!(lu.rcond() > 1e-8)) {
        const Vector sv = singular_values(a);
        const double smin = sv(sv.size() - 1);
        if (!(smin >= kSingularRel * sv(0)) || smin == 0.0)
            throw SingularMatrixError("singular system (sigma_min = " + std::to_string(smin) +
                                          ", ||A|| = " + std::to_string(sv(0)) + ")",
                                      smin);
    }
    Vector x = lu.solve(b);
    // one step of iterative refinement
    const Vector r = b - a * x;
    x += lu.solve(r);
    return x;
}

} // namespace cmdplp
