#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "cd_solver.hpp"

namespace grpsel {

/// Best replacement found for one removed active group.
struct SwapCandidate
{
    Index remove_k = -1;
    Index add_j = -1;
    Vector trial_coefs;  // optimized coefficients of group add_j
    double trial_objective = std::numeric_limits<double>::infinity();
};

struct LocalSearchOutcome
{
    bool improved = false;
    SwapCandidate swap;
    double objective_before = 0.0;
    double objective_after = 0.0;
};

namespace detail {

inline double group_penalty(const PenaltyConfig& cfg, Index k, double norm)
{
    if (norm == 0.0) return 0.0;
    return cfg.lambda0k(k) + cfg.lambda1k(k) * norm + cfg.lambda2k(k) * norm * norm;
}

/// Minimizes F over group j's coordinates with every other coefficient held
/// fixed at the linear predictor `eta_base`. The convex part is solved by
/// iterating the thresholding operator (λ0 = 0); the group penalty decides
/// between that minimizer and zero. Returns the optimal coefficients and
/// writes the attained loss + group-j penalty to `value`.
inline Vector minimize_single_group(const CoordinateDescent& cd, const SolverState& s, Index j,
                                    const Vector& eta_base, double& value)
{
    const auto& prob = cd.problem();
    const auto Xj = prob.block(j);
    const double c = cd.cbar()[j];
    const double l1 = s.config.lambda1k(j);
    const double l2 = s.config.lambda2k(j);
    Vector xi = Vector::Zero(Xj.cols());
    Vector eta = eta_base;
    WorkingResidual wr;
    wr.eta = eta;
    wr.refresh_from_predictor(prob.task, prob.y);
    for (int it = 0; it < 100; ++it) {
        const Vector grad = group_gradient(Xj, wr.r);
        const Vector next = threshold(xi - grad / c, c, 0.0, l1, l2);
        const Vector delta = next - xi;
        if (delta.norm() == 0.0) break;
        xi = next;
        wr.update(prob.task, prob.y, Xj, delta);
        if (delta.norm() < 1e-8) break;
    }
    const double loss_zero = loss_from_predictor(prob.task, prob.y, eta_base);
    const double with_group = wr.loss(prob.task, prob.y) + group_penalty(s.config, j, xi.norm());
    if (xi.norm() != 0.0 && with_group < loss_zero) {
        value = with_group;
        return xi;
    }
    value = loss_zero;
    return Vector::Zero(Xj.cols());
}

} // namespace detail

/// Inactive groups enumerated by the inner loop: all of them, or the top
/// fraction by gradient score when screening is in effect.
inline std::vector<Index> swap_candidates(const CoordinateDescent& cd, const SolverState& s,
                                          bool screen)
{
    std::vector<Index> inactive;
    for (Index k = 0; k < cd.problem().g(); ++k) {
        if (!s.active[static_cast<std::size_t>(k)]) inactive.push_back(k);
    }
    const auto& opt = cd.options();
    if (!screen || static_cast<Index>(inactive.size()) <= opt.strong_set_size) return inactive;
    const auto scores = cd.gradient_scores(s);
    const auto keep = static_cast<std::size_t>(
        std::max(1.0, std::ceil(opt.ls_screen_fraction * static_cast<double>(inactive.size()))));
    std::stable_sort(inactive.begin(), inactive.end(), [&](Index a, Index b) {
        return scores[static_cast<std::size_t>(a)] > scores[static_cast<std::size_t>(b)];
    });
    inactive.resize(keep);
    std::sort(inactive.begin(), inactive.end());
    return inactive;
}

/// Single-swap local search: for each active group k, drop it and find the
/// best inactive group j to optimize in its place; the first k whose best
/// swap strictly lowers the objective is accepted and the search stops.
inline LocalSearchOutcome local_search_step(const CoordinateDescent& cd, SolverState& s, bool screen)
{
    const auto& prob = cd.problem();
    LocalSearchOutcome out;
    out.objective_before = cd.fresh_objective(s);
    out.objective_after = out.objective_before;
    const auto active = s.active_set();
    const auto candidates = swap_candidates(cd, s, screen);
    if (active.empty() || candidates.empty()) return out;

    const Vector eta = prob.X * s.beta + Vector::Constant(prob.n(), s.intercept);
    const double omega_all = omega(s.config, prob.groups, s.beta);
    for (Index k : active) {
        const auto& rk = prob.groups[static_cast<std::size_t>(k)];
        const Vector bk = s.beta.segment(rk.start, rk.size);
        const Vector eta_k = eta - prob.block(k) * bk;
        const double omega_k = omega_all - detail::group_penalty(s.config, k, bk.norm());
        SwapCandidate best;
        best.remove_k = k;
        for (Index j : candidates) {
            double value = 0.0;
            Vector xi = detail::minimize_single_group(cd, s, j, eta_k, value);
            const double f = value + omega_k;
            if (f < best.trial_objective) {
                best.trial_objective = f;
                best.add_j = j;
                best.trial_coefs = std::move(xi);
            }
        }
        if (best.add_j < 0 || !(best.trial_objective < out.objective_before)) continue;

        Vector trial = s.beta;
        trial.segment(rk.start, rk.size).setZero();
        const auto& rj = prob.groups[static_cast<std::size_t>(best.add_j)];
        trial.segment(rj.start, rj.size) = best.trial_coefs;
        SolverState next = cd.init_state(s.config, trial, s.intercept);
        const double f_new = cd.fresh_objective(next);
        if (f_new < out.objective_before) {
            next.sweeps = s.sweeps;
            s = std::move(next);
            out.improved = true;
            out.swap = std::move(best);
            out.objective_after = f_new;
            return out;
        }
    }
    return out;
}

inline LocalSearchOutcome local_search_step(const CoordinateDescent& cd, SolverState& s)
{
    return local_search_step(cd, s, cd.options().screening);
}

struct LocalSearchFit
{
    Vector beta;
    double intercept = 0.0;
    ConvergenceReport report;  // from the final coordinate descent run
    int swaps = 0;
    bool round_cap_hit = false;
    int total_sweeps = 0;
};

/// Alternates coordinate descent to convergence with one local search step
/// until local search no longer improves the objective.
inline LocalSearchFit fit_with_local_search(const CoordinateDescent& cd, SolverState& s)
{
    LocalSearchFit out;
    out.report = cd.run(s);
    out.total_sweeps = out.report.sweeps;
    while (true) {
        if (out.swaps >= cd.options().max_local_search_rounds) {
            out.round_cap_hit = true;
            break;
        }
        const auto step = local_search_step(cd, s);
        if (!step.improved) break;
        ++out.swaps;
        out.report = cd.run(s);
        out.total_sweeps += out.report.sweeps;
    }
    out.report.sweeps = out.total_sweeps;
    out.beta = s.beta;
    out.intercept = s.intercept;
    return out;
}

inline LocalSearchFit fit_with_local_search(const CoordinateDescent& cd, const PenaltyConfig& config,
                                            const Vector& beta0, double intercept0)
{
    SolverState s = cd.init_state(config, beta0, intercept0);
    return fit_with_local_search(cd, s);
}

inline LocalSearchFit fit_with_local_search(const CoordinateDescent& cd, const PenaltyConfig& config)
{
    return fit_with_local_search(cd, config, Vector::Zero(cd.problem().p()), cd.default_intercept());
}

} // namespace grpsel
