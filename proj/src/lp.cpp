#include "cmdplp/lp.hpp"

#include "cmdplp/errors.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>

namespace cmdplp {

RowSubset RowSubset::all(const StandardLp& lp) {
    RowSubset r;
    r.cost_rows.resize(lp.num_cost_rows());
    r.flow_rows.resize(lp.num_flow_rows());
    for (std::size_t k = 0; k < r.cost_rows.size(); ++k) r.cost_rows[k] = k;
    for (std::size_t s = 0; s < r.flow_rows.size(); ++s) r.flow_rows[s] = s;
    return r;
}

StandardLp assemble_discounted_lp(std::size_t num_states, std::size_t num_actions, double gamma,
                                  std::span<const double> kernel, std::span<const double> reward,
                                  const std::vector<std::vector<double>>& costs,
                                  std::span<const double> budgets, std::span<const double> init_dist) {
    const std::size_t S = num_states, A = num_actions, K = costs.size();
    const auto n = static_cast<Eigen::Index>(S * A);
    if (kernel.size() != S * A * S || reward.size() != S * A || budgets.size() != K || init_dist.size() != S)
        throw InputError("assemble_discounted_lp: inconsistent table sizes");

    StandardLp lp;
    lp.num_states = S;
    lp.num_actions = A;
    lp.gamma = gamma;
    lp.objective = Eigen::Map<const Vector>(reward.data(), n);
    lp.cost_matrix = Matrix::Zero(static_cast<Eigen::Index>(K), n);
    lp.budgets = Vector(static_cast<Eigen::Index>(K));
    for (std::size_t k = 0; k < K; ++k) {
        if (costs[k].size() != S * A) throw InputError("assemble_discounted_lp: cost table has the wrong size");
        lp.cost_matrix.row(static_cast<Eigen::Index>(k)) = Eigen::Map<const Vector>(costs[k].data(), n).transpose();
        lp.budgets(static_cast<Eigen::Index>(k)) = (1.0 - gamma) * budgets[k];
        lp.row_labels.push_back({RowLabel::Kind::Cost, k, 0});
    }
    lp.flow_matrix = Matrix::Zero(static_cast<Eigen::Index>(S), n);
    lp.flow_rhs = Vector(static_cast<Eigen::Index>(S));
    for (std::size_t s = 0; s < S; ++s) {
        lp.flow_rhs(static_cast<Eigen::Index>(s)) = (1.0 - gamma) * init_dist[s];
        lp.row_labels.push_back({RowLabel::Kind::Flow, s, 0});
    }
    for (std::size_t sp = 0; sp < S; ++sp)
        for (std::size_t a = 0; a < A; ++a) {
            const auto col = static_cast<Eigen::Index>(sp * A + a);
            lp.col_labels.push_back({sp, a, 0});
            lp.flow_matrix(static_cast<Eigen::Index>(sp), col) += 1.0;
            for (std::size_t s = 0; s < S; ++s)
                lp.flow_matrix(static_cast<Eigen::Index>(s), col) -= gamma * kernel[(sp * A + a) * S + s];
        }
    return lp;
}

StandardLp build_infinite_lp(const CmdpInstance& instance) {
    return assemble_discounted_lp(instance.num_states, instance.num_actions, instance.gamma, instance.kernel,
                                  instance.mean_reward, instance.mean_costs, instance.budgets, instance.init_dist);
}

StandardLp build_finite_lp(const EpisodicInstance& instance) {
    const std::size_t S = instance.num_states, A = instance.num_actions, H = instance.horizon;
    const std::size_t K = instance.num_constraints();
    const auto n = static_cast<Eigen::Index>(H * S * A);

    StandardLp lp;
    lp.num_states = S;
    lp.num_actions = A;
    lp.horizon = H;
    lp.objective = Eigen::Map<const Vector>(instance.mean_reward.data(), n);
    lp.cost_matrix = Matrix(static_cast<Eigen::Index>(K), n);
    lp.budgets = Vector(static_cast<Eigen::Index>(K));
    for (std::size_t k = 0; k < K; ++k) {
        lp.cost_matrix.row(static_cast<Eigen::Index>(k)) =
            Eigen::Map<const Vector>(instance.mean_costs[k].data(), n).transpose();
        lp.budgets(static_cast<Eigen::Index>(k)) = instance.budgets[k];
        lp.row_labels.push_back({RowLabel::Kind::Cost, k, 0});
    }
    lp.flow_matrix = Matrix::Zero(static_cast<Eigen::Index>(H * S), n);
    lp.flow_rhs = Vector::Zero(static_cast<Eigen::Index>(H * S));
    for (std::size_t s = 0; s < S; ++s) lp.flow_rhs(static_cast<Eigen::Index>(s)) = instance.init_dist[s];
    for (std::size_t h = 0; h < H; ++h)
        for (std::size_t s = 0; s < S; ++s) lp.row_labels.push_back({RowLabel::Kind::Flow, s, h});

    for (std::size_t h = 0; h < H; ++h)
        for (std::size_t s = 0; s < S; ++s)
            for (std::size_t a = 0; a < A; ++a) {
                const auto col = static_cast<Eigen::Index>(instance.index(h, s, a));
                lp.col_labels.push_back({s, a, h});
                lp.flow_matrix(static_cast<Eigen::Index>(h * S + s), col) = 1.0;
                if (h + 1 == H) continue;
                for (std::size_t t = 0; t < S; ++t)
                    lp.flow_matrix(static_cast<Eigen::Index>((h + 1) * S + t), col) -= instance.transition(h, s, a, t);
            }
    return lp;
}

std::vector<std::size_t> complement(std::span<const std::size_t> keep, std::size_t n) {
    std::vector<bool> in(n, false);
    for (auto j : keep) {
        if (j >= n) throw InputError("index " + std::to_string(j) + " out of range");
        in[j] = true;
    }
    std::vector<std::size_t> out;
    for (std::size_t j = 0; j < n; ++j)
        if (!in[j]) out.push_back(j);
    return out;
}

LpSolution solve_restricted_primal(const StandardLp& lp, std::span<const std::size_t> fixed_zero,
                                   const std::optional<RowSubset>& rows, double slack,
                                   const SimplexOptions& options) {
    if (!(slack >= 0.0)) throw InputError("slack must be non-negative");
    const std::size_t n = lp.num_cols();
    const RowSubset subset = rows ? *rows : RowSubset::all(lp);
    for (auto k : subset.cost_rows)
        if (k >= lp.num_cost_rows()) throw InputError("cost row index out of range");
    for (auto s : subset.flow_rows)
        if (s >= lp.num_flow_rows()) throw InputError("flow row index out of range");

    std::vector<bool> fixed(n, false);
    for (auto j : fixed_zero) {
        if (j >= n) throw InputError("column index out of range");
        fixed[j] = true;
    }
    std::vector<Eigen::Index> active;
    for (std::size_t j = 0; j < n; ++j)
        if (!fixed[j]) active.push_back(static_cast<Eigen::Index>(j));

    const bool two_sided = slack > 0.0;
    const std::size_t m = subset.cost_rows.size() + subset.flow_rows.size() * (two_sided ? 2 : 1);
    const auto na = static_cast<Eigen::Index>(active.size());

    LinearProgram prog;
    prog.a = Matrix(static_cast<Eigen::Index>(m), na);
    prog.b = Vector(static_cast<Eigen::Index>(m));
    prog.c = Vector(na);
    for (Eigen::Index j = 0; j < na; ++j) prog.c(j) = lp.objective(active[static_cast<std::size_t>(j)]);

    Eigen::Index row = 0;
    const auto copy_row = [&](const Matrix& src, std::size_t r) {
        for (Eigen::Index j = 0; j < na; ++j)
            prog.a(row, j) = src(static_cast<Eigen::Index>(r), active[static_cast<std::size_t>(j)]);
    };
    for (auto k : subset.cost_rows) {
        copy_row(lp.cost_matrix, k);
        prog.b(row) = lp.budgets(static_cast<Eigen::Index>(k)) + slack;
        prog.sense.push_back(RowSense::LessEqual);
        ++row;
    }
    for (auto s : subset.flow_rows) {
        const double mu = lp.flow_rhs(static_cast<Eigen::Index>(s));
        copy_row(lp.flow_matrix, s);
        if (!two_sided) {
            prog.b(row) = mu;
            prog.sense.push_back(RowSense::Equal);
            ++row;
            continue;
        }
        prog.b(row) = mu + slack;
        prog.sense.push_back(RowSense::LessEqual);
        ++row;
        copy_row(lp.flow_matrix, s);
        prog.b(row) = mu - slack;
        prog.sense.push_back(RowSense::GreaterEqual);
        ++row;
    }

    const SimplexResult res = solve_simplex(prog, options);
    LpSolution out;
    out.status = res.status;
    out.q = Vector::Zero(static_cast<Eigen::Index>(n));
    out.dual_y = Vector::Zero(static_cast<Eigen::Index>(lp.num_cost_rows()));
    out.dual_z = Vector::Zero(static_cast<Eigen::Index>(lp.num_flow_rows()));
    if (res.status != LpStatus::Optimal) {
        out.value = res.status == LpStatus::Unbounded ? std::numeric_limits<double>::infinity()
                                                       : -std::numeric_limits<double>::infinity();
        return out;
    }
    out.value = res.value;
    for (Eigen::Index j = 0; j < na; ++j) out.q(active[static_cast<std::size_t>(j)]) = res.x(j);
    row = 0;
    for (auto k : subset.cost_rows) out.dual_y(static_cast<Eigen::Index>(k)) = res.duals(row++);
    for (auto s : subset.flow_rows) {
        double z = res.duals(row++);
        if (two_sided) z += res.duals(row++);
        out.dual_z(static_cast<Eigen::Index>(s)) = z;
    }
    return out;
}

LpSolution solve_restricted_dual(const StandardLp& lp, std::span<const std::size_t> cols, const RowSubset& rows,
                                 double slack, const SimplexOptions& options) {
    const auto fixed = complement(cols, lp.num_cols());
    return solve_restricted_primal(lp, fixed, rows, slack, options);
}

LpSolution min_norm_dual(const StandardLp& lp, double value, double tol) {
    const auto K = static_cast<Eigen::Index>(lp.num_cost_rows());
    const auto F = static_cast<Eigen::Index>(lp.num_flow_rows());
    const auto n = static_cast<Eigen::Index>(lp.num_cols());

    // variables (y, z+, z-) >= 0
    LinearProgram prog;
    prog.a = Matrix::Zero(n + 1, K + 2 * F);
    prog.b = Vector(n + 1);
    prog.c = Vector::Zero(K + 2 * F);
    prog.c.head(K).setConstant(-1.0);
    prog.a.block(0, 0, n, K) = lp.cost_matrix.transpose();
    prog.a.block(0, K, n, F) = lp.flow_matrix.transpose();
    prog.a.block(0, K + F, n, F) = -lp.flow_matrix.transpose();
    prog.b.head(n) = lp.objective;
    prog.sense.assign(static_cast<std::size_t>(n), RowSense::GreaterEqual);
    prog.a.block(n, 0, 1, K) = lp.budgets.transpose();
    prog.a.block(n, K, 1, F) = lp.flow_rhs.transpose();
    prog.a.block(n, K + F, 1, F) = -lp.flow_rhs.transpose();
    prog.b(n) = value + tol * (1.0 + std::abs(value));
    prog.sense.push_back(RowSense::LessEqual);

    const SimplexResult res = solve_simplex(prog);
    LpSolution out;
    out.status = res.status;
    if (res.status != LpStatus::Optimal) return out;
    out.dual_y = res.x.head(K);
    out.dual_z = res.x.segment(K, F) - res.x.segment(K + F, F);
    out.value = lp.budgets.dot(out.dual_y) + lp.flow_rhs.dot(out.dual_z);
    return out;
}

void write_lp_text(std::ostream& os, const StandardLp& lp) {
    const auto flags = os.flags();
    const auto prec = os.precision();
    os << std::setprecision(17);
    os << "cols " << lp.num_cols() << " cost_rows " << lp.num_cost_rows() << " flow_rows " << lp.num_flow_rows()
       << '\n';
    os << "objective";
    for (Eigen::Index j = 0; j < lp.objective.size(); ++j) os << ' ' << lp.objective(j);
    os << '\n';
    const auto dump = [&](const char* tag, const Matrix& m, const Vector& rhs) {
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
            os << tag;
            for (Eigen::Index j = 0; j < m.cols(); ++j) os << ' ' << m(i, j);
            os << " | " << rhs(i) << '\n';
        }
    };
    dump("C", lp.cost_matrix, lp.budgets);
    dump("B", lp.flow_matrix, lp.flow_rhs);
    os.flags(flags);
    os.precision(prec);
}

} // namespace cmdplp
