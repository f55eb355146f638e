#pragma once

#include <cmath>

#include <Eigen/Eigenvalues>

#include "types.hpp"

namespace grpsel {

inline double sigmoid(double eta)
{
    if (eta >= 0) return 1.0 / (1.0 + std::exp(-eta));
    const double e = std::exp(eta);
    return e / (1.0 + e);
}

/// log(1 + exp(eta)) without overflow.
inline double softplus(double eta)
{
    return eta > 0 ? eta + std::log1p(std::exp(-eta)) : std::log1p(std::exp(eta));
}

/// Loss as a function of the linear predictor.
inline double loss_from_predictor(LossKind kind, const Vector& y, const Vector& eta)
{
    if (kind == LossKind::square) return 0.5 * (y - eta).squaredNorm();
    double total = 0.0;
    for (Index i = 0; i < y.size(); ++i) total += softplus(eta[i]) - y[i] * eta[i];
    return total;
}

inline double loss_value(LossKind kind, const Matrix& X, const Vector& y, const Vector& beta,
                         double intercept = 0.0)
{
    if (X.rows() != y.size() || X.cols() != beta.size()) {
        throw Error("loss_value: dimension mismatch");
    }
    if (!X.allFinite() || !y.allFinite() || !beta.allFinite() || !std::isfinite(intercept)) {
        throw Error("loss_value: non-finite input");
    }
    Vector eta = X * beta;
    eta.array() += intercept;
    return loss_from_predictor(kind, y, eta);
}

/// Negative working residual correlation: ∇k L = -Xkᵀ r.
template <class Block>
Vector group_gradient(const Block& Xk, const Vector& residual)
{
    return -(Xk.transpose() * residual);
}

/// Block Lipschitz constant of the gradient: σmax(Xk)² for square loss and a
/// quarter of it for logistic loss.
template <class Block>
double lipschitz_constant(LossKind kind, const Block& Xk)
{
    const Matrix gram = Xk.transpose() * Xk;
    double top;
    if (gram.rows() == 1) {
        top = gram(0, 0);
    } else {
        Eigen::SelfAdjointEigenSolver<Matrix> eig(gram, Eigen::EigenvaluesOnly);
        top = eig.eigenvalues().maxCoeff();
    }
    if (!(top > 0.0)) throw Error("lipschitz_constant: zero design block");
    return kind == LossKind::square ? top : top / 4.0;
}

/// Residual vector kept in sync with the coefficients. For logistic loss the
/// linear predictor is tracked too and r = y - sigmoid(eta).
struct WorkingResidual
{
    Vector r;
    Vector eta;

    void reset(LossKind kind, const Matrix& X, const Vector& y, const Vector& beta, double intercept)
    {
        eta = X * beta;
        eta.array() += intercept;
        refresh_from_predictor(kind, y);
    }

    void refresh_from_predictor(LossKind kind, const Vector& y)
    {
        if (kind == LossKind::square) {
            r = y - eta;
        } else {
            r.resize(y.size());
            for (Index i = 0; i < y.size(); ++i) r[i] = y[i] - sigmoid(eta[i]);
        }
    }

    /// Applies the change `delta` of one group's coefficients in O(pk n).
    template <class Block>
    void update(LossKind kind, const Vector& y, const Block& Xk, const Vector& delta)
    {
        const Vector shift = Xk * delta;
        eta += shift;
        if (kind == LossKind::square) {
            r -= shift;
        } else {
            for (Index i = 0; i < y.size(); ++i) r[i] = y[i] - sigmoid(eta[i]);
        }
    }

    void shift_intercept(LossKind kind, const Vector& y, double delta)
    {
        eta.array() += delta;
        if (kind == LossKind::square) {
            r.array() -= delta;
        } else {
            for (Index i = 0; i < y.size(); ++i) r[i] = y[i] - sigmoid(eta[i]);
        }
    }

    double loss(LossKind kind, const Vector& y) const
    {
        if (kind == LossKind::square) return 0.5 * r.squaredNorm();
        return loss_from_predictor(kind, y, eta);
    }
};

} // namespace grpsel
