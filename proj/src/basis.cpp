#include "cmdplp/basis.hpp"

#include "cmdplp/errors.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>

namespace cmdplp {

namespace {

struct SweepRules {
    double slack = 0.0;
    std::function<bool(double)> value_ok;
    std::function<bool(double sigma, std::size_t rows, std::size_t cols)> rank_ok;
};

Matrix row_block(const StandardLp& lp, std::span<const std::size_t> cols, const RowSubset& rows) {
    Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
    Eigen::Index r = 0;
    for (auto k : rows.cost_rows) {
        for (std::size_t j = 0; j < cols.size(); ++j)
            m(r, static_cast<Eigen::Index>(j)) = lp.cost_matrix(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(cols[j]));
        ++r;
    }
    for (auto s : rows.flow_rows) {
        for (std::size_t j = 0; j < cols.size(); ++j)
            m(r, static_cast<Eigen::Index>(j)) = lp.flow_matrix(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(cols[j]));
        ++r;
    }
    return m;
}

// sigma_min of the block as a candidate basis matrix: needs at least as many rows as columns
double column_rank_sigma(const StandardLp& lp, std::span<const std::size_t> cols, const RowSubset& rows) {
    if (cols.empty() || rows.size() < cols.size()) return 0.0;
    return smallest_singular_value(row_block(lp, cols, rows));
}

BasisResult sweep(const StandardLp& lp, double reference, const SweepRules& rules) {
    BasisResult out;
    out.trace.value = reference;
    out.trace.slack = rules.slack;

    std::vector<std::size_t> cols(lp.num_cols());
    for (std::size_t j = 0; j < cols.size(); ++j) cols[j] = j;
    for (std::size_t i = 0; i < lp.num_cols(); ++i) {
        std::vector<std::size_t> trial;
        trial.reserve(cols.size());
        for (auto j : cols)
            if (j != i) trial.push_back(j);
        const auto sol = solve_restricted_primal(lp, complement(trial, lp.num_cols()), std::nullopt, rules.slack);
        const bool drop = std::isfinite(sol.value) && rules.value_ok(sol.value);
        out.trace.columns.push_back({i, sol.value, drop});
        if (drop) cols = std::move(trial);
    }
    if (cols.empty()) throw InternalError("basis identification removed every column");

    RowSubset rows = RowSubset::all(lp);
    std::vector<std::pair<RowLabel::Kind, std::size_t>> order;
    for (std::size_t k = 0; k < lp.num_cost_rows(); ++k) order.emplace_back(RowLabel::Kind::Cost, k);
    for (std::size_t s = 0; s < lp.num_flow_rows(); ++s) order.emplace_back(RowLabel::Kind::Flow, s);

    for (const auto& [kind, index] : order) {
        if (rows.size() == cols.size()) break;
        RowSubset trial = rows;
        auto& list = kind == RowLabel::Kind::Cost ? trial.cost_rows : trial.flow_rows;
        list.erase(std::find(list.begin(), list.end(), index));
        const auto sol = solve_restricted_dual(lp, cols, trial, rules.slack);
        const double sigma = column_rank_sigma(lp, cols, trial);
        const bool drop = std::isfinite(sol.value) && rules.value_ok(sol.value) &&
                          rules.rank_ok(sigma, trial.size(), cols.size()) && trial.size() >= cols.size();
        out.trace.rows.push_back({kind, index, sol.value, sigma, drop});
        if (drop) rows = std::move(trial);
    }
    if (rows.size() != cols.size())
        throw InternalError("basis identification ended with " + std::to_string(rows.size()) + " rows for " +
                            std::to_string(cols.size()) + " columns");
    out.basis = {cols, rows.cost_rows, rows.flow_rows};
    return out;
}

double solve_reference(const StandardLp& lp, double slack) {
    const auto sol = solve_restricted_primal(lp, {}, std::nullopt, slack);
    if (sol.status != LpStatus::Optimal)
        throw InputError(std::string("basis identification needs a solvable LP, got ") + to_string(sol.status));
    return sol.value;
}

} // namespace

BasisResult identify_basis_true(const StandardLp& lp, const TrueIdentifyOptions& options) {
    const double v = solve_reference(lp, 0.0);
    const double tol = options.value_tol * (1.0 + std::abs(v));
    SweepRules rules;
    rules.value_ok = [v, tol](double x) { return std::abs(x - v) <= tol; };
    rules.rank_ok = [&options](double sigma, std::size_t, std::size_t) { return sigma > options.rank_tol; };
    auto res = sweep(lp, v, rules);
    res.trace.value_threshold = tol;
    return res;
}

BasisResult identify_basis_empirical(const EmpiricalEstimates& est, const ConfidenceParams& params, double gamma,
                                     std::span<const double> budgets, std::span<const double> init_dist) {
    const StandardLp lp = build_empirical_lp(est, gamma, budgets, init_dist);
    const double min_budget = lp.budgets.size() > 0 ? lp.budgets.minCoeff() : 0.0;
    const GapBounds g = gaps(params, lp.num_states, gamma, min_budget, lp.num_cost_rows());
    const double slack = params.confidence_scale * g.rad;
    const double threshold = params.confidence_scale * g.threshold();
    const double v = solve_reference(lp, slack);

    SweepRules rules;
    rules.slack = slack;
    rules.value_ok = [v, threshold](double x) { return std::abs(x - v) <= threshold; };
    const double rank_scale = params.confidence_scale * g.rad;
    rules.rank_ok = [rank_scale](double sigma, std::size_t rows, std::size_t cols) {
        return sigma > 0.0 && sigma >= static_cast<double>(rows * cols) * rank_scale;
    };
    auto res = sweep(lp, v, rules);
    res.trace.value_threshold = threshold;
    return res;
}

Matrix basis_matrix(const StandardLp& lp, const BasisPair& basis) {
    return row_block(lp, basis.cols, basis.rows());
}

BasisReport verify_basis(const StandardLp& lp, const BasisPair& basis) {
    BasisReport rep;
    rep.q = Vector::Zero(static_cast<Eigen::Index>(lp.num_cols()));
    if (basis.cols.size() != basis.rows_cost.size() + basis.rows_flow.size()) {
        rep.failure = "cardinality: |I| != |J|";
        return rep;
    }
    if (basis.cols.empty()) {
        rep.failure = "empty basis";
        return rep;
    }
    const Matrix a = basis_matrix(lp, basis);
    const Vector sv = singular_values(a);
    rep.sigma_min = sv(sv.size() - 1);
    if (!(rep.sigma_min > 1e-12 * sv(0))) {
        rep.failure = "singular basis matrix";
        return rep;
    }
    Vector rhs(a.rows());
    Eigen::Index r = 0;
    for (auto k : basis.rows_cost) rhs(r++) = lp.budgets(static_cast<Eigen::Index>(k));
    for (auto s : basis.rows_flow) rhs(r++) = lp.flow_rhs(static_cast<Eigen::Index>(s));
    const Vector qi = solve_square_system(a, rhs);
    for (std::size_t j = 0; j < basis.cols.size(); ++j) rep.q(static_cast<Eigen::Index>(basis.cols[j])) = qi(static_cast<Eigen::Index>(j));
    rep.value = lp.objective.dot(rep.q);

    if (qi.minCoeff() <= 1e-9) {
        rep.failure = "positivity: basic entry " + std::to_string(qi.minCoeff());
        return rep;
    }
    const Vector cost = lp.cost_matrix * rep.q - lp.budgets;
    for (Eigen::Index k = 0; k < cost.size(); ++k)
        if (cost(k) > 1e-9 * (1.0 + std::abs(lp.budgets(k)))) {
            rep.failure = "feasibility: cost row " + std::to_string(k) + " exceeded by " + std::to_string(cost(k));
            return rep;
        }
    const Vector flow = lp.flow_matrix * rep.q - lp.flow_rhs;
    if (flow.size() > 0 && flow.cwiseAbs().maxCoeff() > 1e-9) {
        rep.failure = "feasibility: flow residual " + std::to_string(flow.cwiseAbs().maxCoeff());
        return rep;
    }
    const auto opt = solve_restricted_primal(lp, {});
    if (opt.status != LpStatus::Optimal || std::abs(opt.value - rep.value) > 1e-7 * (1.0 + std::abs(opt.value))) {
        rep.failure = "value: basic solution " + std::to_string(rep.value) + " vs optimum " + std::to_string(opt.value);
        return rep;
    }
    rep.pass = true;
    return rep;
}

HardnessConstants hardness_constants(const StandardLp& lp, std::uint64_t subset_limit) {
    constexpr double kInf = std::numeric_limits<double>::infinity();
    TrueIdentifyOptions opts;
    const auto res = identify_basis_true(lp, opts);
    const double v = res.trace.value;
    const double tol = opts.value_tol * (1.0 + std::abs(v));

    HardnessConstants h;
    h.basis = res.basis;
    h.delta1 = h.delta2 = h.sigma0 = kInf;
    for (const auto& c : res.trace.columns)
        if (std::isfinite(c.value) && v - c.value > tol) h.delta1 = std::min(h.delta1, v - c.value);
    // along the path V_I = V, so the dual rise is measured against V
    for (const auto& r : res.trace.rows) {
        if (std::isfinite(r.value) && r.value - v > tol) h.delta2 = std::min(h.delta2, r.value - v);
        if (r.sigma > opts.rank_tol) h.sigma0 = std::min(h.sigma0, r.sigma);
    }
    h.sigma_star = smallest_singular_value(basis_matrix(lp, res.basis));
    h.sigma0 = std::min(h.sigma0, h.sigma_star);

    const std::size_t n = lp.num_cols();
    const std::size_t m = lp.num_cost_rows() + lp.num_flow_rows();
    const auto fits = [subset_limit](std::size_t bits) {
        return bits < 63 && (std::uint64_t{1} << bits) <= subset_limit;
    };
    if (!fits(n)) return h;

    const auto mask_to_set = [](std::uint64_t mask, std::size_t len) {
        std::vector<std::size_t> out;
        for (std::size_t j = 0; j < len; ++j)
            if (mask >> j & 1u) out.push_back(j);
        return out;
    };
    std::vector<double> vi(std::size_t{1} << n, -kInf);
    for (std::uint64_t mask = 1; mask < (std::uint64_t{1} << n); ++mask) {
        const auto cols = mask_to_set(mask, n);
        vi[mask] = solve_restricted_primal(lp, complement(cols, n)).value;
        if (std::isfinite(vi[mask]) && v - vi[mask] > tol) h.delta1 = std::min(h.delta1, v - vi[mask]);
    }
    if (!fits(n + m)) return h;

    for (std::uint64_t cmask = 1; cmask < (std::uint64_t{1} << n); ++cmask) {
        const auto cols = mask_to_set(cmask, n);
        for (std::uint64_t rmask = 1; rmask < (std::uint64_t{1} << m); ++rmask) {
            RowSubset rows;
            for (std::size_t j = 0; j < m; ++j) {
                if (!(rmask >> j & 1u)) continue;
                if (j < lp.num_cost_rows()) rows.cost_rows.push_back(j);
                else rows.flow_rows.push_back(j - lp.num_cost_rows());
            }
            const double sigma = smallest_singular_value(row_block(lp, cols, rows));
            if (sigma > opts.rank_tol) h.sigma0 = std::min(h.sigma0, sigma);
            if (!std::isfinite(vi[cmask])) continue;
            const double dual = solve_restricted_dual(lp, cols, rows).value;
            if (std::isfinite(dual) && dual - vi[cmask] > tol) h.delta2 = std::min(h.delta2, dual - vi[cmask]);
        }
    }
    h.exhaustive = true;
    return h;
}

DoublingResult identify_basis_doubling(const CmdpInstance& instance, const DoublingOptions& options, Rng& rng) {
    if (options.n_start == 0) throw InputError("doubling driver needs a positive starting sample count");
    const std::size_t S = instance.num_states, A = instance.num_actions;
    EmpiricalEstimates est(S, A, instance.num_constraints());
    DoublingResult out;
    std::optional<BasisPair> prev;
    std::size_t streak = 0;
    ConfidenceParams params = options.params;
    for (std::uint64_t n0 = options.n_start;; n0 *= 2) {
        if (n0 * S * A > options.sample_budget) break;
        for (std::size_t s = 0; s < S; ++s)
            for (std::size_t a = 0; a < A; ++a)
                while (est.count(s, a) < n0) est.update(s, a, sample_generative(instance, s, a, rng));
        params.n0 = n0;
        out.stages.push_back(n0);
        out.n0 = n0;
        std::optional<BasisPair> cur;
        try {
            cur = identify_basis_empirical(est, params, instance.gamma, instance.budgets, instance.init_dist).basis;
        } catch (const InternalError&) {
            // no square basis at this sample size; keep doubling
        }
        out.basis = cur ? *cur : BasisPair{};
        out.converged = cur && prev && *cur == *prev;
        streak = out.converged ? streak + 1 : (cur ? 1 : 0);
        if (options.stop_after_agreeing > 0 && streak >= options.stop_after_agreeing) break;
        prev = cur;
    }
    out.samples_used = est.total_count();
    return out;
}

} // namespace cmdplp
