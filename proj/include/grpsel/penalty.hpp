#pragma once

#include <cmath>
#include <vector>

#include "types.hpp"

namespace grpsel {

/// Global penalty levels plus per-group multipliers. The effective group
/// parameters are λ0k = mult0[k]·λ0, λ1k = mult1[k]·λ1, λ2k = mult2[k]·λ2, with
/// the shrinkage term not selected by `shrink` forced to zero.
struct PenaltyConfig
{
    double lambda0 = 0.0;
    double lambda1 = 0.0;
    double lambda2 = 0.0;
    ShrinkKind shrink = ShrinkKind::none;
    std::vector<double> mult0;
    std::vector<double> mult1;
    std::vector<double> mult2;

    Index g() const { return static_cast<Index>(mult0.size()); }

    double lambda0k(Index k) const { return mult0[static_cast<std::size_t>(k)] * lambda0; }

    double lambda1k(Index k) const
    {
        return shrink == ShrinkKind::lasso ? mult1[static_cast<std::size_t>(k)] * lambda1 : 0.0;
    }

    double lambda2k(Index k) const
    {
        return shrink == ShrinkKind::ridge ? mult2[static_cast<std::size_t>(k)] * lambda2 : 0.0;
    }
};

/// Default scalings λ0k = pk·λ0, λ1k = √pk·λ1, λ2k = λ2, each multiplied by
/// the group's weight (λ2k is never weighted).
inline PenaltyConfig make_penalty(const std::vector<GroupRange>& groups,
                                  const std::vector<double>& weights, ShrinkKind shrink,
                                  double lambda0, double lambda1 = 0.0, double lambda2 = 0.0)
{
    if (lambda0 < 0 || lambda1 < 0 || lambda2 < 0) throw Error("penalty parameters must be >= 0");
    PenaltyConfig cfg;
    cfg.lambda0 = lambda0;
    cfg.lambda1 = lambda1;
    cfg.lambda2 = lambda2;
    cfg.shrink = shrink;
    for (std::size_t k = 0; k < groups.size(); ++k) {
        const double w = weights.empty() ? 1.0 : weights[k];
        const double pk = static_cast<double>(groups[k].size);
        cfg.mult0.push_back(pk * w);
        cfg.mult1.push_back(std::sqrt(pk) * w);
        cfg.mult2.push_back(1.0);
    }
    return cfg;
}

inline double omega(const PenaltyConfig& cfg, const std::vector<GroupRange>& groups,
                    const Vector& beta)
{
    double total = 0.0;
    for (std::size_t k = 0; k < groups.size(); ++k) {
        const double norm = beta.segment(groups[k].start, groups[k].size).norm();
        if (norm != 0.0) {
            const auto kk = static_cast<Index>(k);
            total += cfg.lambda0k(kk) + cfg.lambda1k(kk) * norm + cfg.lambda2k(kk) * norm * norm;
        }
    }
    return total;
}

/// Closed-form minimizer of
///   c/2‖ξ - β̂‖² + λ0·1(ξ ≠ 0) + λ1‖ξ‖ + λ2‖ξ‖².
/// Ties at the cutoff keep the nonzero branch.
inline Vector threshold(const Vector& beta_hat, double c, double lambda0, double lambda1,
                        double lambda2)
{
    if (!(c > 0)) throw Error("threshold: step constant must be positive");
    const double norm = beta_hat.norm();
    if (norm == 0.0) return Vector::Zero(beta_hat.size());
    const double denom = c + 2.0 * lambda2;
    const double phi = c / denom * std::max(0.0, 1.0 - lambda1 / (c * norm));
    if (phi == 0.0) return Vector::Zero(beta_hat.size());
    if (phi * norm >= std::sqrt(2.0 * lambda0 / denom)) return phi * beta_hat;
    return Vector::Zero(beta_hat.size());
}

} // namespace grpsel
