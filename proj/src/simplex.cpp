#include "cmdplp/simplex.hpp"

#include "cmdplp/errors.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace cmdplp {

const char* to_string(LpStatus status) noexcept {
    switch (status) {
    case LpStatus::Optimal: return "optimal";
    case LpStatus::Infeasible: return "infeasible";
    case LpStatus::Unbounded: return "unbounded";
    }
    return "unknown";
}

namespace {

enum class ColumnKind { Structural, Slack, Artificial };

class RevisedSimplex {
public:
    RevisedSimplex(const LinearProgram& lp, const SimplexOptions& options) : opt_(options) {
        m_ = lp.a.rows();
        n_ = lp.a.cols();
        if (lp.b.size() != m_ || static_cast<Eigen::Index>(lp.sense.size()) != m_ || lp.c.size() != n_)
            throw InputError("linear program dimensions are inconsistent");

        row_sign_.assign(static_cast<std::size_t>(m_), 1.0);
        std::vector<RowSense> sense = lp.sense;
        for (Eigen::Index i = 0; i < m_; ++i) {
            if (lp.b(i) < 0.0) {
                row_sign_[static_cast<std::size_t>(i)] = -1.0;
                auto& s = sense[static_cast<std::size_t>(i)];
                if (s == RowSense::LessEqual) s = RowSense::GreaterEqual;
                else if (s == RowSense::GreaterEqual) s = RowSense::LessEqual;
            }
        }

        Eigen::Index extra = 0;
        for (auto s : sense) extra += (s == RowSense::Equal) ? 1 : (s == RowSense::LessEqual ? 1 : 2);
        const Eigen::Index total = n_ + extra;
        table_ = Matrix::Zero(m_, total);
        kind_.assign(static_cast<std::size_t>(total), ColumnKind::Structural);
        b_ = Vector(m_);
        basis_.assign(static_cast<std::size_t>(m_), 0);

        for (Eigen::Index i = 0; i < m_; ++i) {
            const double sg = row_sign_[static_cast<std::size_t>(i)];
            table_.row(i).head(n_) = sg * lp.a.row(i);
            b_(i) = sg * lp.b(i);
        }
        Eigen::Index col = n_;
        for (Eigen::Index i = 0; i < m_; ++i) {
            const auto s = sense[static_cast<std::size_t>(i)];
            if (s == RowSense::LessEqual) {
                table_(i, col) = 1.0;
                kind_[static_cast<std::size_t>(col)] = ColumnKind::Slack;
                basis_[static_cast<std::size_t>(i)] = col++;
                continue;
            }
            if (s == RowSense::GreaterEqual) {
                table_(i, col) = -1.0;
                kind_[static_cast<std::size_t>(col++)] = ColumnKind::Slack;
            }
            table_(i, col) = 1.0;
            kind_[static_cast<std::size_t>(col)] = ColumnKind::Artificial;
            basis_[static_cast<std::size_t>(i)] = col++;
            has_artificial_ = true;
        }
        cost_ = Vector::Zero(total);
        cost_.head(n_) = lp.c;
    }

    SimplexResult run() {
        SimplexResult out;
        const Eigen::Index total = table_.cols();
        if (has_artificial_) {
            Vector phase1 = Vector::Zero(total);
            for (Eigen::Index j = 0; j < total; ++j)
                if (kind_[static_cast<std::size_t>(j)] == ColumnKind::Artificial) phase1(j) = -1.0;
            const auto status = iterate(phase1, /*phase_two=*/false, out);
            if (status != LpStatus::Optimal) throw SolverError("phase one did not terminate at an optimum");
            double infeasibility = 0.0;
            for (std::size_t i = 0; i < basis_.size(); ++i)
                if (kind_[static_cast<std::size_t>(basis_[i])] == ColumnKind::Artificial)
                    infeasibility += std::max(0.0, xb_(static_cast<Eigen::Index>(i)));
            const double scale = 1.0 + b_.cwiseAbs().maxCoeff();
            if (infeasibility > opt_.feasibility_tol * scale) {
                out.status = LpStatus::Infeasible;
                out.value = -std::numeric_limits<double>::infinity();
                return out;
            }
        }
        const auto status = iterate(cost_, /*phase_two=*/true, out);
        out.status = status;
        if (status == LpStatus::Unbounded) {
            out.value = std::numeric_limits<double>::infinity();
            return out;
        }
        out.x = Vector::Zero(n_);
        for (std::size_t i = 0; i < basis_.size(); ++i) {
            const Eigen::Index j = basis_[i];
            if (j < n_) out.x(j) = std::max(0.0, xb_(static_cast<Eigen::Index>(i)));
        }
        out.value = cost_.head(n_).dot(out.x);
        out.duals = Vector(m_);
        for (Eigen::Index i = 0; i < m_; ++i) out.duals(i) = row_sign_[static_cast<std::size_t>(i)] * y_(i);
        return out;
    }

private:
    void factorize() {
        Matrix basis_matrix(m_, m_);
        for (Eigen::Index i = 0; i < m_; ++i) basis_matrix.col(i) = table_.col(basis_[static_cast<std::size_t>(i)]);
        lu_.compute(basis_matrix);
        if (m_ > 0 && !(lu_.rcond() > 1e-14))
            throw SolverError("basis matrix became numerically singular (rcond = " + std::to_string(lu_.rcond()) + ")");
    }

    LpStatus iterate(const Vector& cost, bool phase_two, SimplexResult& out) {
        bool bland = false;
        std::size_t degenerate_run = 0;
        const Eigen::Index total = table_.cols();
        for (;;) {
            if (out.iterations++ > opt_.max_iterations)
                throw SolverError("simplex iteration limit reached (" + std::to_string(opt_.max_iterations) + ")");
            factorize();
            xb_ = m_ > 0 ? Vector(lu_.solve(b_)) : Vector(0);
            Vector cb(m_);
            for (Eigen::Index i = 0; i < m_; ++i) cb(i) = cost(basis_[static_cast<std::size_t>(i)]);
            y_ = m_ > 0 ? Vector(lu_.transpose().solve(cb)) : Vector(0);

            std::vector<bool> in_basis(static_cast<std::size_t>(total), false);
            for (auto j : basis_) in_basis[static_cast<std::size_t>(j)] = true;

            Eigen::Index entering = -1;
            double best = opt_.optimality_tol;
            const Vector reduced = cost - table_.transpose() * y_;
            for (Eigen::Index j = 0; j < total; ++j) {
                if (in_basis[static_cast<std::size_t>(j)] || kind_[static_cast<std::size_t>(j)] == ColumnKind::Artificial)
                    continue;
                if (reduced(j) > best) {
                    entering = j;
                    if (bland) break;
                    best = reduced(j);
                }
            }
            if (entering < 0) return LpStatus::Optimal;

            const Vector u = lu_.solve(table_.col(entering));
            Eigen::Index leaving = -1;
            double best_ratio = std::numeric_limits<double>::infinity();
            double best_pivot = 0.0;
            for (Eigen::Index i = 0; i < m_; ++i) {
                const bool artificial = kind_[static_cast<std::size_t>(basis_[static_cast<std::size_t>(i)])] == ColumnKind::Artificial;
                double ratio;
                double pivot;
                if (phase_two && artificial) {
                    // basic artificials sit at zero and must stay there
                    if (std::abs(u(i)) <= opt_.pivot_tol) continue;
                    ratio = 0.0;
                    pivot = std::abs(u(i));
                } else {
                    if (u(i) <= opt_.pivot_tol) continue;
                    ratio = std::max(0.0, xb_(i)) / u(i);
                    pivot = u(i);
                }
                bool take = false;
                if (leaving < 0 || ratio < best_ratio - 1e-12) {
                    take = true;
                } else if (ratio <= best_ratio + 1e-12) {
                    take = bland ? basis_[static_cast<std::size_t>(i)] < basis_[static_cast<std::size_t>(leaving)]
                                 : pivot > best_pivot;
                }
                if (take) {
                    leaving = i;
                    best_ratio = std::min(best_ratio, ratio);
                    best_pivot = pivot;
                }
            }
            if (leaving < 0) {
                if (!phase_two) throw SolverError("phase one reported an unbounded direction");
                return LpStatus::Unbounded;
            }
            if (best_ratio <= 1e-12) {
                if (++degenerate_run > opt_.degenerate_switch && !bland) {
                    bland = true;
                    out.used_bland = true;
                }
            } else {
                degenerate_run = 0;
            }
            basis_[static_cast<std::size_t>(leaving)] = entering;
        }
    }

    SimplexOptions opt_;
    Eigen::Index m_ = 0;
    Eigen::Index n_ = 0;
    Matrix table_;
    Vector b_;
    Vector cost_;
    std::vector<ColumnKind> kind_;
    std::vector<double> row_sign_;
    std::vector<Eigen::Index> basis_;
    bool has_artificial_ = false;
    Eigen::PartialPivLU<Matrix> lu_;
    Vector xb_;
    Vector y_;
};

} // namespace

SimplexResult solve_simplex(const LinearProgram& lp, const SimplexOptions& options) {
    RevisedSimplex engine(lp, options);
    return engine.run();
}

} // namespace cmdplp
