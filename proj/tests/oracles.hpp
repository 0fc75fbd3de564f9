#pragma once
// Independent reference implementations used as test oracles. None of them call into
// the solver code they are used to check.

#include "cmdplp/lp.hpp"
#include "cmdplp/model.hpp"
#include "cmdplp/policy.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

namespace oracle {

using cmdplp::Matrix;
using cmdplp::Vector;

// Calls f(subset) for every k-subset of [0, n), in lexicographic order.
template <class F>
void for_each_subset(std::size_t n, std::size_t k, F&& f) {
    if (k > n) return;
    std::vector<std::size_t> idx(k);
    for (std::size_t i = 0; i < k; ++i) idx[i] = i;
    for (;;) {
        f(idx);
        std::size_t i = k;
        while (i > 0 && idx[i - 1] == n - k + i - 1) --i;
        if (i == 0) return;
        ++idx[i - 1];
        for (std::size_t j = i; j < k; ++j) idx[j] = idx[j - 1] + 1;
    }
}

// max c^T x s.t. A x = b, x >= 0 by enumerating every basic solution. Requires A to
// have full row rank and the feasible set to be bounded. nullopt when infeasible.
inline std::optional<double> vertex_max(const Matrix& a, const Vector& b, const Vector& c) {
    const auto m = static_cast<std::size_t>(a.rows()), n = static_cast<std::size_t>(a.cols());
    std::optional<double> best;
    for_each_subset(n, m, [&](const std::vector<std::size_t>& cols) {
        Matrix sub(a.rows(), static_cast<Eigen::Index>(m));
        for (std::size_t j = 0; j < m; ++j) sub.col(static_cast<Eigen::Index>(j)) = a.col(static_cast<Eigen::Index>(cols[j]));
        Eigen::FullPivLU<Matrix> lu(sub);
        if (lu.rank() < static_cast<Eigen::Index>(m)) return;
        const Vector x = lu.solve(b);
        if ((sub * x - b).cwiseAbs().maxCoeff() > 1e-9) return;
        if (x.minCoeff() < -1e-9) return;
        double v = 0.0;
        for (std::size_t j = 0; j < m; ++j) v += c(static_cast<Eigen::Index>(cols[j])) * x(static_cast<Eigen::Index>(j));
        if (!best || v > *best) best = v;
    });
    return best;
}

// Occupancy LP optimum by vertex enumeration: cost rows get slack columns, flow rows
// stay equalities, and columns listed in `fixed_zero` are removed. `cost_rows` keeps
// a subset of the cost rows; all flow rows are always kept so the region stays bounded.
inline std::optional<double> occupancy_lp_max(const cmdplp::StandardLp& lp, const std::vector<std::size_t>& fixed_zero = {},
                                              std::optional<std::vector<std::size_t>> cost_rows = std::nullopt) {
    if (!cost_rows) {
        cost_rows.emplace();
        for (std::size_t k = 0; k < lp.num_cost_rows(); ++k) cost_rows->push_back(k);
    }
    const auto K = static_cast<Eigen::Index>(cost_rows->size()), F = lp.flow_matrix.rows();
    std::vector<std::size_t> keep;
    for (std::size_t j = 0; j < lp.num_cols(); ++j)
        if (std::find(fixed_zero.begin(), fixed_zero.end(), j) == fixed_zero.end()) keep.push_back(j);
    const auto n = static_cast<Eigen::Index>(keep.size());
    Matrix a = Matrix::Zero(K + F, n + K);
    Vector c = Vector::Zero(n + K);
    for (Eigen::Index j = 0; j < n; ++j) {
        const auto col = static_cast<Eigen::Index>(keep[static_cast<std::size_t>(j)]);
        for (Eigen::Index k = 0; k < K; ++k) a(k, j) = lp.cost_matrix(static_cast<Eigen::Index>((*cost_rows)[static_cast<std::size_t>(k)]), col);
        a.block(K, j, F, 1) = lp.flow_matrix.col(col);
        c(j) = lp.objective(col);
    }
    a.block(0, n, K, K) = Matrix::Identity(K, K);
    Vector b(K + F);
    for (Eigen::Index k = 0; k < K; ++k) b(k) = lp.budgets(static_cast<Eigen::Index>((*cost_rows)[static_cast<std::size_t>(k)]));
    b.tail(F) = lp.flow_rhs;
    return vertex_max(a, b, c);
}

// Euclidean projection onto {q >= lower, sum q <= radius} by trying every active set.
inline Vector capped_simplex_projection(const Vector& v, double radius, double lower) {
    const auto n = v.size();
    Vector best;
    double best_obj = std::numeric_limits<double>::infinity();
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
        for (int sum_active = 0; sum_active < 2; ++sum_active) {
            Vector q(n);
            std::vector<Eigen::Index> free;
            for (Eigen::Index i = 0; i < n; ++i) {
                if (mask >> i & 1) q(i) = lower;
                else free.push_back(i);
            }
            double theta = 0.0;
            if (sum_active) {
                if (free.empty()) continue;
                double fixed = lower * static_cast<double>(n - static_cast<Eigen::Index>(free.size()));
                double vs = 0.0;
                for (auto i : free) vs += v(i);
                theta = (vs + fixed - radius) / static_cast<double>(free.size());
            }
            for (auto i : free) q(i) = v(i) - theta;
            if (q.minCoeff() < lower - 1e-12 || q.sum() > radius + 1e-12) continue;
            const double obj = (q - v).squaredNorm();
            if (obj < best_obj) {
                best_obj = obj;
                best = q;
            }
        }
    }
    return best;
}

// Optimal unconstrained discounted values by plain value iteration.
inline std::vector<double> value_iteration(const cmdplp::CmdpInstance& m, double tol = 1e-13) {
    std::vector<double> v(m.num_states, 0.0), next(m.num_states);
    for (int it = 0; it < 100000; ++it) {
        double diff = 0.0;
        for (std::size_t s = 0; s < m.num_states; ++s) {
            double best = -std::numeric_limits<double>::infinity();
            for (std::size_t a = 0; a < m.num_actions; ++a) {
                double q = m.mean_reward[m.pair(s, a)];
                for (std::size_t t = 0; t < m.num_states; ++t) q += m.gamma * m.transition(s, a, t) * v[t];
                best = std::max(best, q);
            }
            next[s] = best;
            diff = std::max(diff, std::abs(next[s] - v[s]));
        }
        v.swap(next);
        if (diff < tol) break;
    }
    return v;
}

inline double start_value(const cmdplp::CmdpInstance& m, const std::vector<double>& v) {
    double out = 0.0;
    for (std::size_t s = 0; s < m.num_states; ++s) out += m.init_dist[s] * v[s];
    return out;
}

// Finite-horizon optimum by backward induction over the period tables.
inline double backward_induction(const cmdplp::EpisodicInstance& m) {
    std::vector<double> v(m.num_states, 0.0);
    for (std::size_t h = m.horizon; h-- > 0;) {
        std::vector<double> cur(m.num_states);
        for (std::size_t s = 0; s < m.num_states; ++s) {
            double best = -std::numeric_limits<double>::infinity();
            for (std::size_t a = 0; a < m.num_actions; ++a) {
                double q = m.mean_reward[m.index(h, s, a)];
                for (std::size_t t = 0; t < m.num_states; ++t) q += m.transition(h, s, a, t) * v[t];
                best = std::max(best, q);
            }
            cur[s] = best;
        }
        v = cur;
    }
    double out = 0.0;
    for (std::size_t s = 0; s < m.num_states; ++s) out += m.init_dist[s] * v[s];
    return out;
}

// Policy values for `table` ([s][a] means) by truncated power series sum_t gamma^t P_pi^t r_pi.
inline std::vector<double> policy_values(const cmdplp::CmdpInstance& m, const cmdplp::PolicyTable& pi,
                                         const std::vector<double>& table) {
    const std::size_t S = m.num_states;
    std::vector<double> r(S, 0.0), term(S), v(S, 0.0);
    for (std::size_t s = 0; s < S; ++s)
        for (std::size_t a = 0; a < m.num_actions; ++a) r[s] += pi(s, a) * table[m.pair(s, a)];
    term = r;
    double scale = 1.0;
    while (scale > 1e-16) {
        for (std::size_t s = 0; s < S; ++s) v[s] += scale * term[s];
        std::vector<double> nxt(S, 0.0);
        for (std::size_t s = 0; s < S; ++s)
            for (std::size_t a = 0; a < m.num_actions; ++a)
                for (std::size_t t = 0; t < S; ++t) nxt[s] += pi(s, a) * m.transition(s, a, t) * term[t];
        term = nxt;
        scale *= m.gamma;
    }
    return v;
}

} // namespace oracle
