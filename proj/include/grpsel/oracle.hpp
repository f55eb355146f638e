#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "cd_solver.hpp"

namespace grpsel {

struct OracleResult
{
    std::vector<Index> best_subset;
    Vector best_beta;
    double best_intercept = 0.0;
    double best_objective = std::numeric_limits<double>::infinity();
    double best_loss = std::numeric_limits<double>::infinity();
    long long subsets_enumerated = 0;
};

struct OracleOptions
{
    double tol = 1e-10;
    int max_sweeps = 1000000;
    long long budget = 1000000;
};

/// Number of subsets of size <= max_active drawn from g groups.
inline long long count_subsets(Index g, Index max_active)
{
    long long total = 0;
    long double term = 1;  // C(g, s)
    for (Index s = 0; s <= max_active && s <= g; ++s) {
        if (s > 0) term = term * static_cast<long double>(g - s + 1) / static_cast<long double>(s);
        total += static_cast<long long>(std::llround(term));
        if (total > (1LL << 60)) break;
    }
    return total;
}

/// Global minimizer of loss + Ω over all group subsets of size <= max_active,
/// found by fitting the convex restricted problem (λ0 dropped, shrinkage kept)
/// on every subset. Ties within 1e-12 keep the first subset in enumeration
/// order (by size, then lexicographic).
inline OracleResult solve_exhaustive(const ExpandedProblem& problem, const PenaltyConfig& config,
                                     Index max_active, OracleOptions options = {})
{
    const Index g = problem.g();
    if (max_active < 0 || max_active > g) max_active = g;
    const long long needed = count_subsets(g, max_active);
    if (needed > options.budget) {
        throw Error("exhaustive search needs " + std::to_string(needed) +
                    " subset fits, budget is " + std::to_string(options.budget));
    }

    SolverOptions sopt;
    sopt.tol = options.tol;
    sopt.max_sweeps = options.max_sweeps;
    sopt.screening = false;
    sopt.active_set_updates = false;
    sopt.gradient_ordering = false;

    OracleResult best;
    std::vector<Index> subset;
    auto evaluate = [&](const std::vector<Index>& chosen) {
        ++best.subsets_enumerated;
        ExpandedProblem sub;
        sub.y = problem.y;
        sub.task = problem.task;
        sub.intercept = problem.intercept;
        sub.original_p = problem.original_p;
        Index width = 0;
        for (Index k : chosen) width += problem.groups[static_cast<std::size_t>(k)].size;
        sub.X.resize(problem.n(), width);
        PenaltyConfig cfg;
        cfg.shrink = config.shrink;
        cfg.lambda1 = config.lambda1;
        cfg.lambda2 = config.lambda2;
        Index col = 0;
        for (Index k : chosen) {
            const auto& r = problem.groups[static_cast<std::size_t>(k)];
            sub.X.middleCols(col, r.size) = problem.block(k);
            sub.groups.push_back({col, r.size});
            cfg.mult0.push_back(0.0);
            cfg.mult1.push_back(config.mult1[static_cast<std::size_t>(k)]);
            cfg.mult2.push_back(config.mult2[static_cast<std::size_t>(k)]);
            col += r.size;
        }

        Vector beta = Vector::Zero(problem.p());
        double intercept = 0.0;
        if (problem.intercept) {
            // Intercept-only fit: the mean (square) or its logit (logistic) is exact.
            const double m = std::clamp(problem.y.mean(), 1e-6, 1 - 1e-6);
            intercept = problem.task == LossKind::square ? problem.y.mean() : std::log(m / (1 - m));
        }
        if (!chosen.empty()) {
            CoordinateDescent cd(sub, sopt);
            const FitResult fit = cd.fit(cfg);
            intercept = fit.intercept;
            Index at = 0;
            for (Index k : chosen) {
                const auto& r = problem.groups[static_cast<std::size_t>(k)];
                beta.segment(r.start, r.size) = fit.beta.segment(at, r.size);
                at += r.size;
            }
        }
        const double loss = loss_value(problem.task, problem.X, problem.y, beta, intercept);
        const double obj = loss + omega(config, problem.groups, beta);
        const double slack = 1e-12 * std::max(1.0, std::abs(best.best_objective));
        if (!std::isfinite(best.best_objective) || obj < best.best_objective - slack) {
            best.best_objective = obj;
            best.best_loss = loss;
            best.best_beta = beta;
            best.best_intercept = intercept;
            best.best_subset = chosen;
        }
    };

    for (Index size = 0; size <= max_active; ++size) {
        // Lexicographic enumeration of combinations of `size` groups.
        subset.resize(static_cast<std::size_t>(size));
        for (Index i = 0; i < size; ++i) subset[static_cast<std::size_t>(i)] = i;
        while (true) {
            evaluate(subset);
            Index i = size - 1;
            while (i >= 0 && subset[static_cast<std::size_t>(i)] == g - size + i) --i;
            if (i < 0) break;
            ++subset[static_cast<std::size_t>(i)];
            for (Index j = i + 1; j < size; ++j) {
                subset[static_cast<std::size_t>(j)] = subset[static_cast<std::size_t>(j - 1)] + 1;
            }
        }
    }
    return best;
}

} // namespace grpsel
