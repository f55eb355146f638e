#include <gtest/gtest.h>

#include "support.hpp"

using namespace grpsel;
namespace ts = testing_support;

namespace {

PenaltyConfig moderate_penalty(const ExpandedProblem& e, ShrinkKind shrink)
{
    return make_penalty(e.groups, e.group_weights, shrink, 0.5, shrink == ShrinkKind::lasso ? 0.3 : 0.0,
                        shrink == ShrinkKind::ridge ? 0.2 : 0.0);
}

} // namespace

TEST(CoordinateDescent, RejectsBadOptions)
{
    const auto e = ts::random_expanded(1);
    SolverOptions opt;
    opt.cbar_factor = 0.99;
    EXPECT_THROW(CoordinateDescent(e, opt), Error);
    opt.cbar_factor = 1.01;
    opt.tol = 0.0;
    EXPECT_THROW(CoordinateDescent(e, opt), Error);
}

class DescentProperties : public ::testing::TestWithParam<int> {};

TEST_P(DescentProperties, MonotoneTraceWithDescentBound)
{
    const auto seed = static_cast<std::uint64_t>(GetParam());
    for (LossKind task : {LossKind::square, LossKind::logistic}) {
        for (ShrinkKind shrink : {ShrinkKind::none, ShrinkKind::lasso, ShrinkKind::ridge}) {
            ts::RandomProblemSpec spec;
            spec.task = task;
            const auto e = ts::random_expanded(seed, spec, task == LossKind::logistic);
            SolverOptions opt;
            opt.record_trace = true;
            opt.gradient_ordering = false;
            CoordinateDescent cd(e, opt);
            const auto fit = cd.fit(moderate_penalty(e, shrink));
            double prev = fit.report.initial_objective;
            for (const auto& rec : fit.report.trace) {
                EXPECT_LE(rec.objective, prev - rec.descent_bound + 1e-9 * (1 + std::abs(prev)));
                prev = rec.objective;
            }
            EXPECT_TRUE(fit.report.converged);
        }
    }
}

TEST_P(DescentProperties, ConvergedFitIsAFixedPoint)
{
    const auto seed = static_cast<std::uint64_t>(GetParam());
    const auto e = ts::random_expanded(seed, {}, true);
    SolverOptions opt;
    CoordinateDescent cd(e, opt);
    const auto cfg = moderate_penalty(e, ShrinkKind::lasso);
    const auto fit = cd.fit(cfg);
    ASSERT_TRUE(fit.report.converged);
    // Recompute T(β - ∇/c̄) - β from scratch, independent of solver state.
    const Vector eta = (e.X * fit.beta).array() + fit.intercept;
    const Vector r = eta - e.y;
    for (Index k = 0; k < e.g(); ++k) {
        const auto& rg = e.groups[static_cast<std::size_t>(k)];
        const Vector bk = fit.beta.segment(rg.start, rg.size);
        const Vector grad = e.block(k).transpose() * r;
        const double c = cd.cbar()[k];
        const Vector next = threshold(bk - grad / c, c, cfg.lambda0k(k), cfg.lambda1k(k), cfg.lambda2k(k));
        EXPECT_LE((next - bk).norm(), opt.tol * (1.0 + bk.norm()));
    }
    EXPECT_LE(std::abs(r.sum()) / static_cast<double>(e.n()), opt.tol * (1 + std::abs(fit.intercept)));
}

TEST_P(DescentProperties, ScreeningDoesNotChangeTheAnswer)
{
    const auto seed = static_cast<std::uint64_t>(GetParam());
    const auto e = ts::random_expanded(seed, {60, 20, 3});
    SolverOptions on;
    on.tol = 1e-9;
    on.strong_set_size = 3;
    SolverOptions off = on;
    off.screening = false;
    off.active_set_updates = false;
    off.gradient_ordering = false;
    const auto cfg = moderate_penalty(e, ShrinkKind::ridge);
    const auto a = CoordinateDescent(e, on).fit(cfg);
    const auto b = CoordinateDescent(e, off).fit(cfg);
    ASSERT_TRUE(a.report.converged);
    ASSERT_TRUE(b.report.converged);
    // Both are fixed points; the objective must pass the same certificate.
    CoordinateDescent checker(e, off);
    auto sa = checker.init_state(cfg, a.beta, a.intercept);
    EXPECT_LT(checker.fixed_point_violation(sa), 1e-6);
}

INSTANTIATE_TEST_SUITE_P(Seeds, DescentProperties, ::testing::Range(1, 9));

TEST(CoordinateDescent, GroupLassoMatchesProximalReference)
{
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto e = ts::random_expanded(seed, {40, 5, 3});
        const double l1 = 2.0;
        SolverOptions opt;
        opt.tol = 1e-10;
        const auto fit = CoordinateDescent(e, opt).fit(make_penalty(e.groups, {}, ShrinkKind::lasso, 0.0, l1));
        const Vector ref = ts::proximal_group_lasso(e, l1, 20000);
        const double fa = ts::group_lasso_objective(e, fit.beta, l1);
        const double fb = ts::group_lasso_objective(e, ref, l1);
        EXPECT_LE(std::abs(fa - fb), 1e-7 * fb);
    }
}

TEST(CoordinateDescent, OrthonormalGroupsSolvedInOneSweep)
{
    // With orthonormal blocks and no λ0, each group minimizer is the closed form
    // ridge shrinkage of Xkᵀy, computed here independently.
    std::mt19937_64 rng(3);
    Eigen::HouseholderQR<Matrix> qr(ts::correlated_gaussian(rng, 30, 6, 0.0));
    ExpandedProblem e;
    e.X = qr.householderQ() * Matrix::Identity(30, 6);
    e.y = ts::correlated_gaussian(rng, 30, 1, 0.0).col(0);
    e.groups = {{0, 2}, {2, 3}, {5, 1}};
    e.back_map = {0, 1, 2, 3, 4, 5};
    e.original_p = 6;
    const double l2 = 0.3;
    SolverOptions opt;
    opt.cbar_factor = 1.0;
    opt.tol = 1e-12;
    const auto fit = CoordinateDescent(e, opt).fit(make_penalty(e.groups, {}, ShrinkKind::ridge, 0.0, 0.0, l2));
    const Vector expect = e.X.transpose() * e.y / (1.0 + 2.0 * l2);
    EXPECT_LT((fit.beta - expect).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(CoordinateDescent, LogisticInterceptOnlyIsLogitOfMean)
{
    ts::RandomProblemSpec spec;
    spec.task = LossKind::logistic;
    const auto e = ts::random_expanded(6, spec, true);
    // A huge λ0 keeps all groups out, leaving the intercept alone.
    SolverOptions opt;
    opt.tol = 1e-10;
    CoordinateDescent cd(e, opt);
    const auto fit = cd.fit(make_penalty(e.groups, {}, ShrinkKind::none, 1e6), Vector::Zero(e.p()), 3.0);
    const double m = e.y.mean();
    EXPECT_EQ(fit.beta.norm(), 0.0);
    EXPECT_NEAR(fit.intercept, std::log(m / (1 - m)), 1e-6);
}

TEST(CoordinateDescent, HugeLambda0GivesEmptyModel)
{
    const auto e = ts::random_expanded(7);
    const auto fit = CoordinateDescent(e).fit(make_penalty(e.groups, {}, ShrinkKind::none, 1e8));
    EXPECT_EQ(fit.beta.norm(), 0.0);
}

TEST(CoordinateDescent, ZeroPenaltyReachesLeastSquares)
{
    const auto e = ts::random_expanded(8, {50, 4, 3});
    SolverOptions opt;
    opt.tol = 1e-12;
    const auto fit = CoordinateDescent(e, opt).fit(make_penalty(e.groups, {}, ShrinkKind::none, 0.0));
    const Vector ls = e.X.colPivHouseholderQr().solve(e.y);
    EXPECT_LT((fit.beta - ls).cwiseAbs().maxCoeff(), 1e-6);
}
