#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <utility>
#include <vector>

#include "grouped_design.hpp"
#include "loss.hpp"
#include "penalty.hpp"

namespace grpsel {

struct SolverOptions
{
    /// Fixed-point and relative-objective tolerance.
    double tol = 1e-4;
    int max_sweeps = 100000;
    /// c̄k = cbar_factor · ck. Must be >= 1; convergence of the iterates needs > 1.
    double cbar_factor = 1.01;

    bool screening = true;
    Index strong_set_size = 500;
    /// Fraction of inactive groups enumerated by the local search inner loop
    /// once screening is in effect.
    double ls_screen_fraction = 0.05;
    bool gradient_ordering = true;
    bool active_set_updates = true;

    /// Square-loss residuals are rebuilt from scratch after this many group updates.
    int residual_refresh = 1000;
    double coef_cap = 1e6;
    bool record_trace = false;
    int max_local_search_rounds = 1000;
};

/// One coordinate descent sweep as seen by the monotone-descent bound.
struct SweepRecord
{
    double objective = 0.0;
    /// Σk (c̄k - ck)/2 ‖Δβk‖² over the groups updated in this sweep.
    double descent_bound = 0.0;
    Index groups_visited = 0;
};

struct ConvergenceReport
{
    bool converged = false;
    bool diverged = false;
    int sweeps = 0;
    double initial_objective = 0.0;
    double final_objective = 0.0;
    double max_fixedpoint_violation = 0.0;
    std::vector<SweepRecord> trace;
};

struct SolverState
{
    Vector beta;
    double intercept = 0.0;
    WorkingResidual resid;
    std::vector<char> active;
    PenaltyConfig config;
    double objective = 0.0;
    int sweeps = 0;
    int updates_since_refresh = 0;

    std::vector<Index> active_set() const
    {
        std::vector<Index> out;
        for (std::size_t k = 0; k < active.size(); ++k) {
            if (active[k]) out.push_back(static_cast<Index>(k));
        }
        return out;
    }

    Index active_count() const
    {
        return static_cast<Index>(std::count(active.begin(), active.end(), char{1}));
    }
};

struct FitResult
{
    Vector beta;
    double intercept = 0.0;
    ConvergenceReport report;
};

/// Block coordinate descent for L(β) + Ω(β) over a disjoint-group design.
/// Holds a reference to the problem, which must outlive the solver.
class CoordinateDescent
{
public:
    explicit CoordinateDescent(const ExpandedProblem& problem, SolverOptions options = {})
        : problem_(problem), options_(options)
    {
        if (!(options_.cbar_factor >= 1.0)) throw Error("cbar_factor must be >= 1");
        if (!(options_.tol > 0.0)) throw Error("tolerance must be positive");
        lipschitz_.resize(problem.g());
        cbar_.resize(problem.g());
        for (Index k = 0; k < problem.g(); ++k) {
            lipschitz_[k] = lipschitz_constant(problem.task, problem.block(k));
            cbar_[k] = options_.cbar_factor * lipschitz_[k];
        }
        intercept_lipschitz_ = problem.task == LossKind::square
                                   ? static_cast<double>(problem.n())
                                   : static_cast<double>(problem.n()) / 4.0;
    }

    const ExpandedProblem& problem() const { return problem_; }
    const SolverOptions& options() const { return options_; }
    const Vector& lipschitz() const { return lipschitz_; }
    const Vector& cbar() const { return cbar_; }

    SolverState init_state(const PenaltyConfig& config, const Vector& beta0,
                           double intercept0) const
    {
        if (beta0.size() != problem_.p()) throw Error("initial coefficients have wrong length");
        if (config.g() != problem_.g()) throw Error("penalty config has wrong number of groups");
        SolverState state;
        state.beta = beta0;
        state.intercept = problem_.intercept ? intercept0 : 0.0;
        state.config = config;
        state.resid.reset(problem_.task, problem_.X, problem_.y, state.beta, state.intercept);
        state.active.assign(static_cast<std::size_t>(problem_.g()), 0);
        for (Index k = 0; k < problem_.g(); ++k) {
            state.active[static_cast<std::size_t>(k)] = group_coefs(state, k).norm() != 0.0;
        }
        state.objective = objective(state);
        return state;
    }

    SolverState init_state(const PenaltyConfig& config) const
    {
        return init_state(config, Vector::Zero(problem_.p()), default_intercept());
    }

    /// Intercept at β = 0: mean response for square loss, its logit for logistic loss.
    double default_intercept() const
    {
        if (!problem_.intercept) return 0.0;
        const double m = problem_.y.mean();
        if (problem_.task == LossKind::square) return m;
        const double clipped = std::clamp(m, 1e-6, 1.0 - 1e-6);
        return std::log(clipped / (1.0 - clipped));
    }

    Eigen::VectorBlock<const Vector> group_coefs(const SolverState& s, Index k) const
    {
        const auto& r = problem_.groups[static_cast<std::size_t>(k)];
        return s.beta.segment(r.start, r.size);
    }

    Vector gradient(const SolverState& s, Index k) const
    {
        return group_gradient(problem_.block(k), s.resid.r);
    }

    double objective(const SolverState& s) const
    {
        return s.resid.loss(problem_.task, problem_.y) + omega(s.config, problem_.groups, s.beta);
    }

    /// Objective recomputed from the coefficients alone, bypassing the
    /// incrementally maintained residual.
    double fresh_objective(const SolverState& s) const
    {
        return loss_value(problem_.task, problem_.X, problem_.y, s.beta, s.intercept) +
               omega(s.config, problem_.groups, s.beta);
    }

    /// Thresholded gradient step on group k; returns ‖Δβk‖.
    double group_update(SolverState& s, Index k) const
    {
        bool support_changed = false;
        return group_update(s, k, support_changed);
    }

    double group_update(SolverState& s, Index k, bool& support_changed) const
    {
        const auto& range = problem_.groups[static_cast<std::size_t>(k)];
        const auto Xk = problem_.block(k);
        const Vector old = s.beta.segment(range.start, range.size);
        const Vector grad = group_gradient(Xk, s.resid.r);
        const Vector proposal = old - grad / cbar_[k];
        const Vector next = threshold(proposal, cbar_[k], s.config.lambda0k(k), s.config.lambda1k(k),
                                      s.config.lambda2k(k));
        const Vector delta = next - old;
        const double move = delta.norm();
        if (move != 0.0) {
            s.beta.segment(range.start, range.size) = next;
            s.resid.update(problem_.task, problem_.y, Xk, delta);
            if (++s.updates_since_refresh >= options_.residual_refresh) {
                s.resid.reset(problem_.task, problem_.X, problem_.y, s.beta, s.intercept);
                s.updates_since_refresh = 0;
            }
        }
        const char now = next.norm() != 0.0;
        auto& flag = s.active[static_cast<std::size_t>(k)];
        if (flag != now) support_changed = true;
        flag = now;
        return move;
    }

    /// One-dimensional step on the unpenalized intercept; returns |Δb|.
    double intercept_update(SolverState& s) const
    {
        if (!problem_.intercept) return 0.0;
        const double n = static_cast<double>(problem_.n());
        const double rsum = s.resid.r.sum();
        if (problem_.task == LossKind::square) {
            const double delta = rsum / n;
            s.intercept += delta;
            s.resid.shift_intercept(problem_.task, problem_.y, delta);
            return std::abs(delta);
        }
        double curvature = 0.0;
        for (Index i = 0; i < problem_.n(); ++i) {
            const double pr = sigmoid(s.resid.eta[i]);
            curvature += pr * (1.0 - pr);
        }
        const double before = s.resid.loss(problem_.task, problem_.y);
        const double lipschitz_step = rsum / intercept_lipschitz_;
        double delta = curvature > 0 ? rsum / curvature : lipschitz_step;
        s.resid.shift_intercept(problem_.task, problem_.y, delta);
        if (s.resid.loss(problem_.task, problem_.y) > before) {
            s.resid.shift_intercept(problem_.task, problem_.y, lipschitz_step - delta);
            delta = lipschitz_step;
        }
        s.intercept += delta;
        return std::abs(delta);
    }

    /// Largest relative movement max_k ‖T(βk - ∇k/c̄k) - βk‖ / (1 + ‖βk‖).
    double fixed_point_violation(const SolverState& s) const
    {
        double worst = 0.0;
        for (Index k = 0; k < problem_.g(); ++k) {
            const Vector cur = group_coefs(s, k);
            const Vector grad = gradient(s, k);
            const Vector next = threshold(cur - grad / cbar_[k], cbar_[k], s.config.lambda0k(k),
                                          s.config.lambda1k(k), s.config.lambda2k(k));
            worst = std::max(worst, (next - cur).norm() / (1.0 + cur.norm()));
        }
        return worst;
    }

    /// Intercept stationarity measured as the size of a Lipschitz gradient step.
    double intercept_violation(const SolverState& s) const
    {
        if (!problem_.intercept) return 0.0;
        return std::abs(s.resid.r.sum()) / intercept_lipschitz_ / (1.0 + std::abs(s.intercept));
    }

    /// Screening score ‖∇k L‖ / √pk.
    std::vector<double> gradient_scores(const SolverState& s) const
    {
        std::vector<double> out(static_cast<std::size_t>(problem_.g()));
        for (Index k = 0; k < problem_.g(); ++k) {
            out[static_cast<std::size_t>(k)] =
                gradient(s, k).norm() /
                std::sqrt(static_cast<double>(problem_.groups[static_cast<std::size_t>(k)].size));
        }
        return out;
    }

    /// Visit order: active groups first, then inactive groups, each by
    /// descending gradient score (index order when ordering is disabled).
    std::vector<Index> visit_order(const SolverState& s) const
    {
        std::vector<Index> order(static_cast<std::size_t>(problem_.g()));
        std::iota(order.begin(), order.end(), Index{0});
        if (!options_.gradient_ordering) return order;
        const auto scores = gradient_scores(s);
        std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
            const auto ua = static_cast<std::size_t>(a);
            const auto ub = static_cast<std::size_t>(b);
            if (s.active[ua] != s.active[ub]) return s.active[ua] > s.active[ub];
            return scores[ua] > scores[ub];
        });
        return order;
    }

    /// Runs coordinate descent from the current state until the fixed-point
    /// equations hold to tolerance.
    ConvergenceReport run(SolverState& s) const
    {
        Run run(*this, s);
        return run.execute();
    }

    FitResult fit(const PenaltyConfig& config, const Vector& beta0, double intercept0) const
    {
        SolverState s = init_state(config, beta0, intercept0);
        FitResult out;
        out.report = run(s);
        out.beta = std::move(s.beta);
        out.intercept = s.intercept;
        return out;
    }

    FitResult fit(const PenaltyConfig& config) const
    {
        return fit(config, Vector::Zero(problem_.p()), default_intercept());
    }

private:
    struct SweepStats
    {
        double max_rel_move = 0.0;
        double intercept_move = 0.0;
        bool support_changed = false;
        double rel_objective_change = 0.0;
    };

    class Run
    {
    public:
        Run(const CoordinateDescent& cd, SolverState& s) : cd_(cd), s_(s) {}

        ConvergenceReport execute()
        {
            const auto& opt = cd_.options_;
            report_.initial_objective = cd_.objective(s_);
            last_objective_ = report_.initial_objective;
            const Index g = cd_.problem_.g();

            std::vector<Index> order = cd_.visit_order(s_);
            std::vector<Index> strong;
            std::vector<Index> weak;
            if (opt.screening && g > opt.strong_set_size) {
                Index inactive_taken = 0;
                for (Index k : order) {
                    const bool act = s_.active[static_cast<std::size_t>(k)];
                    if (act || inactive_taken < opt.strong_set_size) {
                        strong.push_back(k);
                        if (!act) ++inactive_taken;
                    } else {
                        weak.push_back(k);
                    }
                }
            } else {
                strong = order;
            }

            while (!stopped()) {
                if (!converge_on(strong)) break;
                if (!weak.empty()) {
                    sweep(weak);
                    if (stopped()) break;
                    std::vector<Index> still_weak;
                    bool promoted = false;
                    for (Index k : weak) {
                        if (s_.active[static_cast<std::size_t>(k)]) {
                            strong.push_back(k);
                            promoted = true;
                        } else {
                            still_weak.push_back(k);
                        }
                    }
                    weak.swap(still_weak);
                    if (promoted) continue;
                }
                const double viol = cd_.fixed_point_violation(s_);
                report_.max_fixedpoint_violation = viol;
                if (viol < opt.tol && cd_.intercept_violation(s_) < opt.tol) {
                    report_.converged = true;
                    break;
                }
            }
            if (!report_.converged) report_.max_fixedpoint_violation = cd_.fixed_point_violation(s_);
            s_.objective = cd_.objective(s_);
            report_.final_objective = s_.objective;
            report_.sweeps = sweeps_;
            return std::move(report_);
        }

    private:
        bool stopped() const
        {
            return report_.diverged || sweeps_ >= cd_.options_.max_sweeps;
        }

        bool converged(const SweepStats& st) const
        {
            const double tol = cd_.options_.tol;
            return st.max_rel_move < tol && st.intercept_move < tol &&
                   st.rel_objective_change <= tol && !st.support_changed &&
                   !previous_support_changed_;
        }

        SweepStats sweep(const std::vector<Index>& ids)
        {
            SweepStats st;
            double bound = 0.0;
            for (Index k : ids) {
                const double move = cd_.group_update(s_, k, st.support_changed);
                if (move != 0.0) {
                    const double norm = cd_.group_coefs(s_, k).norm();
                    st.max_rel_move = std::max(st.max_rel_move, move / (1.0 + norm));
                    bound += 0.5 * (cd_.cbar_[k] - cd_.lipschitz_[k]) * move * move;
                    if (norm > cd_.options_.coef_cap) report_.diverged = true;
                }
            }
            const double b_move = cd_.intercept_update(s_);
            st.intercept_move = b_move / (1.0 + std::abs(s_.intercept));
            ++sweeps_;
            ++s_.sweeps;
            const double f = cd_.objective(s_);
            st.rel_objective_change = std::abs(last_objective_ - f) / std::max(std::abs(f), 1e-300);
            if (last_objective_ == f) st.rel_objective_change = 0.0;
            last_objective_ = f;
            s_.objective = f;
            if (cd_.options_.record_trace) {
                report_.trace.push_back({f, bound, static_cast<Index>(ids.size())});
            }
            return st;
        }

        bool converge_on(const std::vector<Index>& ids)
        {
            while (!stopped()) {
                SweepStats st = sweep(ids);
                const bool done = converged(st);
                previous_support_changed_ = st.support_changed;
                if (done) return true;
                if (stopped()) return false;
                if (cd_.options_.active_set_updates && !st.support_changed) {
                    std::vector<Index> act;
                    for (Index k : ids) {
                        if (s_.active[static_cast<std::size_t>(k)]) act.push_back(k);
                    }
                    if (act.size() < ids.size()) {
                        while (!stopped()) {
                            SweepStats a = sweep(act);
                            const bool a_done = converged(a);
                            previous_support_changed_ = a.support_changed;
                            if (a_done || a.support_changed) break;
                        }
                    }
                }
            }
            return false;
        }

        const CoordinateDescent& cd_;
        SolverState& s_;
        ConvergenceReport report_;
        double last_objective_ = 0.0;
        bool previous_support_changed_ = false;
        int sweeps_ = 0;
    };

    const ExpandedProblem& problem_;
    SolverOptions options_;
    Vector lipschitz_;
    Vector cbar_;
    double intercept_lipschitz_ = 1.0;
};

} // namespace grpsel
