#pragma once

// Random instances and independent reference computations shared by the
// test binaries. Nothing here calls into the solver internals beyond the
// public types.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

#include <grpsel/grpsel.hpp>

namespace testing_support {

using grpsel::Index;
using grpsel::LossKind;
using grpsel::Matrix;
using grpsel::Vector;

struct RandomProblemSpec
{
    Index n = 40;
    Index g = 6;
    Index max_group = 3;
    LossKind task = LossKind::square;
    double rho = 0.3;            // constant correlation between columns
    Index true_groups = 2;
};

inline Matrix correlated_gaussian(std::mt19937_64& rng, Index n, Index p, double rho)
{
    std::normal_distribution<double> normal;
    Matrix X(n, p);
    for (Index i = 0; i < n; ++i) {
        const double shared = normal(rng);
        for (Index j = 0; j < p; ++j) X(i, j) = std::sqrt(rho) * shared + std::sqrt(1 - rho) * normal(rng);
    }
    return X;
}

/// Disjoint random groups of sizes 1..max_group with a sparse true signal.
inline grpsel::GroupedProblem random_problem(std::uint64_t seed, const RandomProblemSpec& spec = {})
{
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<Index> size(1, spec.max_group);
    grpsel::GroupedProblem prob;
    Index p = 0;
    for (Index k = 0; k < spec.g; ++k) {
        const Index s = size(rng);
        std::vector<Index> grp(static_cast<std::size_t>(s));
        std::iota(grp.begin(), grp.end(), p);
        p += s;
        prob.groups.push_back(std::move(grp));
    }
    prob.X = correlated_gaussian(rng, spec.n, p, spec.rho);
    Vector beta = Vector::Zero(p);
    std::normal_distribution<double> normal;
    for (Index k = 0; k < std::min(spec.true_groups, spec.g); ++k) {
        for (Index j : prob.groups[static_cast<std::size_t>(k)]) beta[j] = 1.0 + std::abs(normal(rng));
    }
    Vector f = prob.X * beta;
    prob.task = spec.task;
    prob.y.resize(spec.n);
    if (spec.task == LossKind::square) {
        for (Index i = 0; i < spec.n; ++i) prob.y[i] = f[i] + normal(rng);
    } else {
        std::uniform_real_distribution<double> unif(0, 1);
        for (Index i = 0; i < spec.n; ++i) prob.y[i] = unif(rng) < 1.0 / (1.0 + std::exp(-0.5 * f[i])) ? 1 : 0;
        prob.y[0] = 0;
        prob.y[1] = 1;
    }
    return prob;
}

/// Disjoint expanded problem used directly by the solver, without
/// standardization (columns keep unequal scales).
inline grpsel::ExpandedProblem random_expanded(std::uint64_t seed, const RandomProblemSpec& spec = {},
                                               bool intercept = false)
{
    grpsel::ExpandedProblem e = grpsel::as_disjoint(random_problem(seed, spec));
    e.intercept = intercept;
    return e;
}

/// Loss evaluated independently of the library.
inline double reference_loss(LossKind task, const Matrix& X, const Vector& y, const Vector& beta, double b)
{
    const Vector eta = (X * beta).array() + b;
    double total = 0.0;
    for (Index i = 0; i < y.size(); ++i) {
        if (task == LossKind::square) {
            total += 0.5 * (y[i] - eta[i]) * (y[i] - eta[i]);
        } else {
            total += std::log1p(std::exp(-std::abs(eta[i]))) + std::max(eta[i], 0.0) - y[i] * eta[i];
        }
    }
    return total;
}

/// Central finite-difference gradient of the reference loss.
inline Vector fd_gradient(LossKind task, const Matrix& X, const Vector& y, const Vector& beta, double h)
{
    Vector g(beta.size());
    for (Index j = 0; j < beta.size(); ++j) {
        Vector up = beta;
        Vector dn = beta;
        up[j] += h;
        dn[j] -= h;
        g[j] = (reference_loss(task, X, y, up, 0.0) - reference_loss(task, X, y, dn, 0.0)) / (2 * h);
    }
    return g;
}

/// Surrogate minimized by the thresholding operator.
inline double surrogate(const Vector& beta, const Vector& beta_hat, double c, double l0, double l1, double l2)
{
    const double nb = beta.norm();
    return 0.5 * c * (beta - beta_hat).squaredNorm() + (nb != 0.0 ? l0 : 0.0) + l1 * nb + l2 * nb * nb;
}

/// Largest eigenvalue of AᵀA by power iteration.
inline double top_eigenvalue_gram(const Matrix& A, int iters = 2000)
{
    const Matrix G = A.transpose() * A;
    Vector v = Vector::Ones(G.rows()) / std::sqrt(static_cast<double>(G.rows()));
    double lambda = 0.0;
    for (int it = 0; it < iters; ++it) {
        Vector w = G * v;
        const double nw = w.norm();
        if (nw == 0.0) return 0.0;
        lambda = v.dot(w);
        v = w / nw;
    }
    return lambda;
}

/// Full-gradient proximal descent for loss + Σ λ1 √pk ‖βk‖ (plain group
/// lasso, no intercept) with step 1/L.
inline Vector proximal_group_lasso(const grpsel::ExpandedProblem& e, double lambda1, int iters)
{
    const double L0 = top_eigenvalue_gram(e.X);
    const double L = e.task == LossKind::square ? L0 : L0 / 4.0;
    Vector beta = Vector::Zero(e.p());
    for (int it = 0; it < iters; ++it) {
        const Vector eta = e.X * beta;
        Vector resid(e.n());
        for (Index i = 0; i < e.n(); ++i) {
            resid[i] = e.task == LossKind::square ? e.y[i] - eta[i] : e.y[i] - 1.0 / (1.0 + std::exp(-eta[i]));
        }
        const Vector step = beta + e.X.transpose() * resid / L;
        for (std::size_t k = 0; k < e.groups.size(); ++k) {
            const auto& r = e.groups[k];
            const Vector z = step.segment(r.start, r.size);
            const double thr = lambda1 * std::sqrt(static_cast<double>(r.size)) / L;
            const double nz = z.norm();
            beta.segment(r.start, r.size) = nz > thr ? Vector((1.0 - thr / nz) * z) : Vector::Zero(r.size);
        }
    }
    return beta;
}

inline double group_lasso_objective(const grpsel::ExpandedProblem& e, const Vector& beta, double lambda1)
{
    double pen = 0.0;
    for (const auto& r : e.groups) pen += lambda1 * std::sqrt(static_cast<double>(r.size)) * beta.segment(r.start, r.size).norm();
    return reference_loss(e.task, e.X, e.y, beta, 0.0) + pen;
}

} // namespace testing_support
