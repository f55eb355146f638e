#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <optional>
#include <string>
#include <vector>

#include "cd_solver.hpp"
#include "grouped_design.hpp"
#include "local_search.hpp"

namespace grpsel {

struct PipelineOptions
{
    bool standardize = true;
    /// Route through the overlap expansion; when false the groups must be
    /// disjoint and columns are only permuted.
    bool expand_overlap = true;
    bool orthogonalize = true;
};

struct FitOptions
{
    PipelineOptions pipeline;
    SolverOptions solver;
    bool local_search = false;
};

/// A grouped problem carried through standardization, overlap expansion and
/// optional orthogonalization, with the maps back to the raw columns.
struct PreparedProblem
{
    Standardization scaling;
    ExpandedProblem expanded;              // latent basis, standardized columns
    std::optional<OrthoTransform> ortho;
    ExpandedProblem solver_problem;        // what coordinate descent sees
    std::vector<std::vector<Index>> groups;
    LossKind task = LossKind::square;

    /// Latent coefficients (one block per group) on the raw column scale.
    Vector latent_original(const Vector& theta) const
    {
        Vector nu = ortho ? ortho->to_original(theta) : theta;
        for (Index c = 0; c < nu.size(); ++c) {
            nu[c] /= scaling.scale[expanded.back_map[static_cast<std::size_t>(c)]];
        }
        return nu;
    }

    Vector beta_original(const Vector& latent) const
    {
        return collapse_coefficients(expanded, latent);
    }

    double intercept_original(const Vector& beta, double solver_intercept) const
    {
        return solver_intercept + scaling.y_offset - scaling.center.dot(beta);
    }
};

inline PreparedProblem prepare(const GroupedProblem& problem, const PipelineOptions& opt)
{
    validate(problem);
    PreparedProblem out;
    out.task = problem.task;
    out.groups = problem.groups;
    GroupedProblem work = problem;
    if (opt.standardize) {
        auto [std_problem, rec] = standardize(problem);
        work = std::move(std_problem);
        out.scaling = std::move(rec);
    } else {
        out.scaling.center = Vector::Zero(problem.p());
        out.scaling.scale = Vector::Ones(problem.p());
    }
    out.expanded = opt.expand_overlap ? expand_overlap(work) : as_disjoint(work);
    // Without centering the square-loss intercept has to be fitted explicitly.
    out.expanded.intercept = problem.task == LossKind::logistic || !opt.standardize;
    if (opt.orthogonalize) {
        auto [q, tf] = orthogonalize(out.expanded);
        out.solver_problem = std::move(q);
        out.ortho = std::move(tf);
    } else {
        out.solver_problem = out.expanded;
    }
    return out;
}

struct PathSpec
{
    Index n_lambda0 = 100;
    /// Fraction α ∈ [0, 1) applied to the adaptive λ0 step.
    double alpha = 0.9;
    Index n_secondary = 10;
    double lambda1_min_ratio = 1e-4;
    double lambda2_max = 100.0;
    double lambda2_min = 1e-4;
    /// Stop a λ0 path once more groups than this are active (<= 0: no limit).
    Index max_active_groups = 0;
    /// Plain group lasso: λ0 fixed at zero and the primary grid runs over λ1.
    bool group_lasso = false;
    /// Overrides the secondary grid when nonempty.
    std::vector<double> secondary_values;
};

struct PathPoint
{
    double lambda0 = 0.0;
    double lambda1 = 0.0;
    double lambda2 = 0.0;
    Index secondary_index = 0;
    Index position = 0;
    Vector theta;               // solver basis
    double solver_intercept = 0.0;
    Vector latent;              // per-group coefficients, raw column scale
    Vector beta;                // collapsed, raw column scale
    double intercept = 0.0;
    double objective = 0.0;
    std::vector<Index> active;
    ConvergenceReport report;
    int swaps = 0;
};

struct PathResult
{
    LossKind task = LossKind::square;
    ShrinkKind shrink = ShrinkKind::none;
    bool group_lasso = false;
    std::vector<std::vector<Index>> groups;
    std::vector<double> secondary_values;
    std::vector<PathPoint> points;
    std::uint64_t seed = 0;
    std::string data_hash;

    std::vector<const PathPoint*> secondary_path(Index s) const
    {
        std::vector<const PathPoint*> out;
        for (const auto& pt : points) {
            if (pt.secondary_index == s) out.push_back(&pt);
        }
        return out;
    }
};

/// FNV-1a over the raw bytes of X and y.
inline std::string data_fingerprint(const Matrix& X, const Vector& y)
{
    std::uint64_t h = 1469598103934665603ULL;
    auto mix = [&](const double* data, Index count) {
        for (Index i = 0; i < count; ++i) {
            unsigned char bytes[sizeof(double)];
            std::memcpy(bytes, data + i, sizeof(double));
            for (unsigned char b : bytes) {
                h ^= b;
                h *= 1099511628211ULL;
            }
        }
    };
    mix(X.data(), X.size());
    mix(y.data(), y.size());
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

inline double lambda0_entry_value(const CoordinateDescent& cd, const SolverState& s, Index k,
                                  const Vector& grad)
{
    const double m0 = s.config.mult0[static_cast<std::size_t>(k)];
    if (!(m0 > 0.0)) return 0.0;
    const double norm = grad.norm();
    double excess = norm - s.config.lambda1k(k);
    // Rounding-level excess (e.g. λ1 at the top of its grid) cannot enter.
    if (excess <= 1e-12 * std::max(1.0, norm)) excess = 0.0;
    return excess * excess / (2.0 * m0 * (cd.cbar()[k] + 2.0 * s.config.lambda2k(k)));
}

/// Largest λ0 at which some inactive group would pass the threshold from the
/// current point; nullopt when every group is active or no group can enter.
inline std::optional<double> max_entry_lambda0(const CoordinateDescent& cd, const SolverState& s)
{
    double best = 0.0;
    bool any_inactive = false;
    for (Index k = 0; k < cd.problem().g(); ++k) {
        if (s.active[static_cast<std::size_t>(k)]) continue;
        any_inactive = true;
        best = std::max(best, lambda0_entry_value(cd, s, k, cd.gradient(s, k)));
    }
    if (!any_inactive || !(best > 0.0)) return std::nullopt;
    return best;
}

/// Adaptive next grid value α·max_{k∉A} (‖∇kL‖ - λ1k)₊² / (2 m0k (c̄k + 2λ2k)),
/// where m0k is the group's λ0 multiplier (pk by default).
inline std::optional<double> next_lambda0(const CoordinateDescent& cd, const SolverState& s,
                                          double alpha)
{
    if (!(alpha >= 0.0 && alpha < 1.0)) throw Error("alpha must lie in [0, 1)");
    auto top = max_entry_lambda0(cd, s);
    if (!top) return std::nullopt;
    return alpha * *top;
}

/// Relative margin placing the first grid value (λ0, or λ1 for lasso grids)
/// strictly above the entry level of the strongest group, so that ties cannot
/// activate it.
inline constexpr double kFirstLambda0Margin = 1e-9;

/// Smallest λ0 that keeps every group at zero from β = 0.
inline double first_lambda0(const CoordinateDescent& cd, const SolverState& zero_state)
{
    auto top = max_entry_lambda0(cd, zero_state);
    return top ? *top * (1.0 + kFirstLambda0Margin) : 0.0;
}

/// Smallest λ1 with an all-zero group lasso solution: max_k ‖∇kL(0)‖ / m1k.
inline double lambda1_max(const CoordinateDescent& cd, const SolverState& zero_state)
{
    double best = 0.0;
    for (Index k = 0; k < cd.problem().g(); ++k) {
        const double m1 = zero_state.config.mult1[static_cast<std::size_t>(k)];
        if (!(m1 > 0.0)) continue;
        best = std::max(best, cd.gradient(zero_state, k).norm() / m1);
    }
    return best;
}

inline std::vector<double> log_grid(double hi, double lo, Index count)
{
    std::vector<double> out;
    if (count <= 0) return out;
    if (count == 1) return {hi};
    const double a = std::log(hi);
    const double b = std::log(lo);
    for (Index i = 0; i < count; ++i) {
        out.push_back(std::exp(a + (b - a) * static_cast<double>(i) / static_cast<double>(count - 1)));
    }
    return out;
}

namespace detail {

inline PathPoint make_point(const PreparedProblem& prep, const SolverState& s,
                            const ConvergenceReport& report, Index secondary, Index position,
                            int swaps)
{
    PathPoint pt;
    pt.lambda0 = s.config.lambda0;
    pt.lambda1 = s.config.lambda1;
    pt.lambda2 = s.config.lambda2;
    pt.secondary_index = secondary;
    pt.position = position;
    pt.theta = s.beta;
    pt.solver_intercept = s.intercept;
    pt.latent = prep.latent_original(s.beta);
    pt.beta = prep.beta_original(pt.latent);
    pt.intercept = prep.intercept_original(pt.beta, s.intercept);
    pt.objective = report.final_objective;
    pt.active = s.active_set();
    pt.report = report;
    pt.report.trace.clear();
    pt.swaps = swaps;
    return pt;
}

inline void solve_point(const CoordinateDescent& cd, SolverState& s, bool local_search,
                        ConvergenceReport& report, int& swaps)
{
    if (local_search) {
        auto fit = fit_with_local_search(cd, s);
        report = std::move(fit.report);
        swaps = fit.swaps;
    } else {
        report = cd.run(s);
        swaps = 0;
    }
}

} // namespace detail

/// Secondary grid (λ1 for lasso, λ2 for ridge, a single zero otherwise).
inline std::vector<double> secondary_grid(const CoordinateDescent& cd, const SolverState& zero_state,
                                          const PathSpec& spec, ShrinkKind shrink)
{
    if (!spec.secondary_values.empty()) return spec.secondary_values;
    switch (shrink) {
    case ShrinkKind::lasso: {
        const double top = lambda1_max(cd, zero_state) * (1.0 + kFirstLambda0Margin);
        return log_grid(top, spec.lambda1_min_ratio * top, spec.n_secondary);
    }
    case ShrinkKind::ridge:
        return log_grid(spec.lambda2_max, spec.lambda2_min, spec.n_secondary);
    case ShrinkKind::none:
        break;
    }
    return {0.0};
}

/// Regularization path over a prepared problem with warm starts along λ0.
inline PathResult fit_path(const PreparedProblem& prep, const PathSpec& spec, ShrinkKind shrink,
                           const FitOptions& opt)
{
    if (!(spec.alpha >= 0.0 && spec.alpha < 1.0)) throw Error("alpha must lie in [0, 1)");
    const auto& sp = prep.solver_problem;
    CoordinateDescent cd(sp, opt.solver);
    PathResult out;
    out.task = prep.task;
    out.shrink = shrink;
    out.group_lasso = spec.group_lasso;
    out.groups = prep.groups;

    if (spec.group_lasso) {
        if (shrink != ShrinkKind::lasso) throw Error("group lasso path needs lasso shrinkage");
        PenaltyConfig cfg = make_penalty(sp.groups, sp.group_weights, shrink, 0.0, 0.0, 0.0);
        SolverState s = cd.init_state(cfg);
        const double top = lambda1_max(cd, s) * (1.0 + kFirstLambda0Margin);
        const auto grid = log_grid(top, spec.lambda1_min_ratio * top, spec.n_lambda0);
        out.secondary_values = {0.0};
        Index pos = 0;
        for (double l1 : grid) {
            s.config.lambda1 = l1;
            s.objective = cd.objective(s);
            ConvergenceReport report;
            int swaps = 0;
            try {
                detail::solve_point(cd, s, opt.local_search, report, swaps);
            } catch (const Error& e) {
                throw Error("group lasso path point " + std::to_string(pos) + ": " + e.what());
            }
            out.points.push_back(detail::make_point(prep, s, report, 0, pos++, swaps));
            if (spec.max_active_groups > 0 && s.active_count() > spec.max_active_groups) break;
        }
        return out;
    }

    PenaltyConfig base = make_penalty(sp.groups, sp.group_weights, shrink, 0.0, 0.0, 0.0);
    SolverState zero = cd.init_state(base);
    out.secondary_values = secondary_grid(cd, zero, spec, shrink);
    for (std::size_t si = 0; si < out.secondary_values.size(); ++si) {
        const double v = out.secondary_values[si];
        PenaltyConfig cfg = make_penalty(sp.groups, sp.group_weights, shrink, 0.0,
                                         shrink == ShrinkKind::lasso ? v : 0.0,
                                         shrink == ShrinkKind::ridge ? v : 0.0);
        SolverState s = cd.init_state(cfg);
        double lambda0 = first_lambda0(cd, s);
        for (Index t = 0; t < spec.n_lambda0; ++t) {
            s.config.lambda0 = lambda0;
            s.objective = cd.objective(s);
            ConvergenceReport report;
            int swaps = 0;
            try {
                detail::solve_point(cd, s, opt.local_search, report, swaps);
            } catch (const Error& e) {
                throw Error("path point (secondary " + std::to_string(si) + ", position " +
                            std::to_string(t) + "): " + e.what());
            }
            out.points.push_back(
                detail::make_point(prep, s, report, static_cast<Index>(si), t, swaps));
            if (spec.max_active_groups > 0 && s.active_count() > spec.max_active_groups) break;
            auto next = next_lambda0(cd, s, spec.alpha);
            if (!next) break;
            lambda0 = *next;
        }
    }
    return out;
}

inline PathResult fit_path(const GroupedProblem& problem, const PathSpec& spec, ShrinkKind shrink,
                           const FitOptions& opt = {})
{
    const PreparedProblem prep = prepare(problem, opt.pipeline);
    PathResult out = fit_path(prep, spec, shrink, opt);
    out.data_hash = data_fingerprint(problem.X, problem.y);
    return out;
}

/// Path point with exactly `target` active groups on secondary path
/// `secondary`. When the grid jumps over `target`, λ0 is bisected between the
/// two neighbouring points, warm-starting from either neighbour. Returns
/// nullopt when no λ0 in the bracket produces that many groups.
inline std::optional<PathPoint> point_with_sparsity(const PreparedProblem& prep, const PathResult& path,
                                                    Index target, Index secondary, const FitOptions& opt,
                                                    int max_bisections = 60)
{
    const auto pts = path.secondary_path(secondary);
    const PathPoint* sparser = nullptr;
    const PathPoint* denser = nullptr;
    for (const PathPoint* pt : pts) {
        const auto count = static_cast<Index>(pt->active.size());
        if (count == target) return *pt;
        if (count < target) sparser = pt;
        if (count > target && sparser && !denser) denser = pt;
    }
    if (!sparser || !denser || path.group_lasso) return std::nullopt;

    const auto& sp = prep.solver_problem;
    CoordinateDescent cd(sp, opt.solver);
    PenaltyConfig cfg = make_penalty(sp.groups, sp.group_weights, path.shrink, 0.0, sparser->lambda1,
                                     sparser->lambda2);
    // First pass continues the sparser solution downward in λ0, the second
    // continues the denser one upward.
    for (const PathPoint* start : {sparser, denser}) {
        const bool from_sparse = start == sparser;
        double hi = sparser->lambda0;
        double lo = denser->lambda0;
        Vector warm = start->theta;
        double warm_b = start->solver_intercept;
        for (int it = 0; it < max_bisections; ++it) {
            const double mid = 0.5 * (lo + hi);
            if (mid <= lo || mid >= hi) break;
            cfg.lambda0 = mid;
            SolverState s = cd.init_state(cfg, warm, warm_b);
            ConvergenceReport report;
            int swaps = 0;
            detail::solve_point(cd, s, opt.local_search, report, swaps);
            const Index count = s.active_count();
            if (count == target) return detail::make_point(prep, s, report, secondary, -1, swaps);
            const bool too_sparse = count < target;
            (too_sparse ? hi : lo) = mid;
            if (too_sparse == from_sparse) {
                warm = s.beta;
                warm_b = s.intercept;
            }
        }
    }
    return std::nullopt;
}

/// Linear predictor intercept + Xβ on raw columns.
inline Vector predict_linear(const PathPoint& pt, const Matrix& X)
{
    if (X.cols() != pt.beta.size()) {
        throw Error("prediction matrix has " + std::to_string(X.cols()) + " columns, model has " +
                    std::to_string(pt.beta.size()));
    }
    Vector eta = X * pt.beta;
    eta.array() += pt.intercept;
    return eta;
}

/// Predictions on the response scale (probabilities for logistic loss).
inline Vector predict(LossKind task, const PathPoint& pt, const Matrix& X)
{
    Vector eta = predict_linear(pt, X);
    if (task == LossKind::logistic) {
        for (Index i = 0; i < eta.size(); ++i) eta[i] = sigmoid(eta[i]);
    }
    return eta;
}

} // namespace grpsel
