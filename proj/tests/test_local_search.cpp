#include <gtest/gtest.h>

#include "support.hpp"

using namespace grpsel;
namespace ts = testing_support;

namespace {

ExpandedProblem correlated(std::uint64_t seed)
{
    ts::RandomProblemSpec spec;
    spec.n = 30;
    spec.g = 8;
    spec.max_group = 2;
    spec.rho = 0.8;
    spec.true_groups = 3;
    return ts::random_expanded(seed, spec);
}

/// Objective of the best fit with group `remove` dropped and `add` allowed,
/// holding the other coefficients fixed. Uses a long proximal iteration on
/// group `add` only, separate from the library's single-group routine.
double best_swap_value(const ExpandedProblem& e, const PenaltyConfig& cfg, const Vector& beta, Index remove,
                       Index add)
{
    Vector b = beta;
    const auto& rr = e.groups[static_cast<std::size_t>(remove)];
    b.segment(rr.start, rr.size).setZero();
    const auto& ra = e.groups[static_cast<std::size_t>(add)];
    const Matrix Xa = e.block(add);
    const double L = ts::top_eigenvalue_gram(Xa);
    const Vector base = e.X * b;
    Vector xi = Vector::Zero(ra.size);
    for (int it = 0; it < 5000; ++it) {
        const Vector r = base + Xa * xi - e.y;
        const Vector z = xi - Xa.transpose() * r / L;
        // Convex part only: λ1 and λ2 prox; λ0 is added afterwards.
        const double nz = z.norm();
        const double shrink = std::max(0.0, 1.0 - cfg.lambda1k(add) / (L * std::max(nz, 1e-300)));
        xi = shrink * z / (1.0 + 2.0 * cfg.lambda2k(add) / L);
    }
    auto value = [&](const Vector& full) {
        return ts::reference_loss(e.task, e.X, e.y, full, 0.0) + omega(cfg, e.groups, full);
    };
    Vector with = b;
    with.segment(ra.start, ra.size) = xi;
    return std::min(value(b), value(with));
}

} // namespace

TEST(LocalSearch, NeverWorseAndSometimesBetter)
{
    int strictly_better = 0;
    for (std::uint64_t seed = 1; seed <= 15; ++seed) {
        const auto e = correlated(seed);
        const auto cfg = make_penalty(e.groups, {}, ShrinkKind::ridge, 1.0, 0.0, 0.05);
        CoordinateDescent cd(e);
        const auto plain = cd.fit(cfg);
        const auto ls = fit_with_local_search(cd, cfg);
        const double fp = ts::reference_loss(e.task, e.X, e.y, plain.beta, 0.0) + omega(cfg, e.groups, plain.beta);
        const double fl = ts::reference_loss(e.task, e.X, e.y, ls.beta, 0.0) + omega(cfg, e.groups, ls.beta);
        EXPECT_LE(fl, fp + 1e-9 * fp);
        if (fl < fp * (1 - 1e-6)) ++strictly_better;
    }
    EXPECT_GE(strictly_better, 1);
}

TEST(LocalSearch, ResultIsSwapStable)
{
    // After local search, no single swap found by enumeration improves the
    // objective beyond the convergence tolerance.
    for (std::uint64_t seed = 1; seed <= 6; ++seed) {
        const auto e = correlated(seed);
        const auto cfg = make_penalty(e.groups, {}, ShrinkKind::ridge, 1.0, 0.0, 0.05);
        SolverOptions opt;
        opt.tol = 1e-8;
        CoordinateDescent cd(e, opt);
        const auto ls = fit_with_local_search(cd, cfg);
        const double f = ts::reference_loss(e.task, e.X, e.y, ls.beta, 0.0) + omega(cfg, e.groups, ls.beta);
        std::vector<Index> active, inactive;
        for (Index k = 0; k < e.g(); ++k) {
            const auto& r = e.groups[static_cast<std::size_t>(k)];
            (ls.beta.segment(r.start, r.size).norm() != 0.0 ? active : inactive).push_back(k);
        }
        for (Index k : active) {
            for (Index j : inactive) EXPECT_GE(best_swap_value(e, cfg, ls.beta, k, j), f - 1e-4 * f);
        }
    }
}

TEST(LocalSearch, NoMoveFromTheGlobalOptimum)
{
    const auto e = correlated(4);
    const auto cfg = make_penalty(e.groups, {}, ShrinkKind::ridge, 1.0, 0.0, 0.05);
    const auto oracle = solve_exhaustive(e, cfg, e.g());
    SolverOptions opt;
    opt.tol = 1e-10;
    CoordinateDescent cd(e, opt);
    SolverState s = cd.init_state(cfg, oracle.best_beta, 0.0);
    const auto step = local_search_step(cd, s, false);
    EXPECT_FALSE(step.improved);
}

TEST(LocalSearch, EmptyModelHasNoSwap)
{
    const auto e = correlated(2);
    const auto cfg = make_penalty(e.groups, {}, ShrinkKind::none, 1e6);
    CoordinateDescent cd(e);
    SolverState s = cd.init_state(cfg);
    EXPECT_FALSE(local_search_step(cd, s).improved);
}
