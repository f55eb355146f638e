#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/SVD>

#include "types.hpp"

namespace grpsel {

/// Raw regression or classification problem with possibly overlapping
/// predictor groups. `group_weights` multiplies every penalty term of a group
/// (the default scalings by group size are applied on top of it).
struct GroupedProblem
{
    Matrix X;
    Vector y;
    LossKind task = LossKind::square;
    std::vector<std::vector<Index>> groups;
    std::vector<double> group_weights;

    Index n() const { return X.rows(); }
    Index p() const { return X.cols(); }
    Index g() const { return static_cast<Index>(groups.size()); }

    double weight(Index k) const
    {
        return group_weights.empty() ? 1.0 : group_weights[static_cast<std::size_t>(k)];
    }
};

inline void validate(const GroupedProblem& problem)
{
    if (problem.y.size() != problem.n()) {
        throw Error("response has length " + std::to_string(problem.y.size()) +
                    " but X has " + std::to_string(problem.n()) + " rows");
    }
    if (problem.groups.empty()) throw Error("no groups given");
    if (!problem.group_weights.empty() &&
        problem.group_weights.size() != problem.groups.size()) {
        throw Error("group_weights must have one entry per group");
    }
    std::vector<char> covered(static_cast<std::size_t>(problem.p()), 0);
    for (std::size_t k = 0; k < problem.groups.size(); ++k) {
        const auto& gk = problem.groups[k];
        if (gk.empty()) throw Error("group " + std::to_string(k) + " is empty");
        std::set<Index> seen;
        for (Index j : gk) {
            if (j < 0 || j >= problem.p()) {
                throw Error("group " + std::to_string(k) + " references column " +
                            std::to_string(j) + " outside 0.." + std::to_string(problem.p() - 1));
            }
            if (!seen.insert(j).second) {
                throw Error("group " + std::to_string(k) + " lists column " + std::to_string(j) +
                            " twice");
            }
            covered[static_cast<std::size_t>(j)] = 1;
        }
        if (!problem.group_weights.empty() && !(problem.group_weights[k] >= 0.0)) {
            throw Error("group " + std::to_string(k) + " has a negative weight");
        }
    }
    for (std::size_t j = 0; j < covered.size(); ++j) {
        if (!covered[j]) throw Error("column " + std::to_string(j) + " belongs to no group");
    }
    if (problem.task == LossKind::logistic) {
        for (Index i = 0; i < problem.n(); ++i) {
            if (problem.y[i] != 0.0 && problem.y[i] != 1.0) {
                throw Error("logistic response must be 0/1 (row " + std::to_string(i) + ")");
            }
        }
    }
    if (!problem.X.allFinite() || !problem.y.allFinite()) throw Error("non-finite input data");
}

/// Centering and scaling applied by `standardize`.
struct Standardization
{
    Vector center;   // column means
    Vector scale;    // l2 norms of the centered columns
    double y_offset = 0.0;  // mean of y (square loss), 0 for logistic

    /// Maps coefficients fitted on the standardized columns back to the raw
    /// columns; `intercept` is the fitted intercept on the standardized scale.
    std::pair<Vector, double> to_original(const Vector& beta, double intercept) const
    {
        Vector out = beta.cwiseQuotient(scale);
        double b = intercept + y_offset - center.dot(out);
        return {out, b};
    }

    Matrix apply(const Matrix& X) const
    {
        Matrix out = X;
        for (Index j = 0; j < out.cols(); ++j) {
            out.col(j) = (out.col(j).array() - center[j]) / scale[j];
        }
        return out;
    }
};

/// Centers every column to mean zero and scales it to unit l2 norm. For square
/// loss the response is centered as well, which absorbs the intercept.
inline std::pair<GroupedProblem, Standardization> standardize(const GroupedProblem& problem)
{
    const Index n = problem.n();
    if (n < 2) throw Error("standardize needs at least 2 observations");
    Standardization rec;
    rec.center.resize(problem.p());
    rec.scale.resize(problem.p());
    GroupedProblem out = problem;
    for (Index j = 0; j < problem.p(); ++j) {
        auto col = problem.X.col(j);
        const double lo = col.minCoeff();
        const double hi = col.maxCoeff();
        const double mean = col.mean();
        Vector centered = col.array() - mean;
        const double norm = centered.norm();
        if (lo == hi || norm <= 1e-14 * std::max(1.0, col.cwiseAbs().maxCoeff())) {
            throw Error("constant column " + std::to_string(j));
        }
        rec.center[j] = mean;
        rec.scale[j] = norm;
        out.X.col(j) = centered / norm;
    }
    if (problem.task == LossKind::square) {
        rec.y_offset = problem.y.mean();
        out.y = problem.y.array() - rec.y_offset;
    }
    return {std::move(out), std::move(rec)};
}

/// Disjoint-group representation: every group owns a contiguous block of
/// (possibly replicated) columns. Coefficients on block k are the latent
/// vector of group k.
struct ExpandedProblem
{
    Matrix X;
    Vector y;
    LossKind task = LossKind::square;
    std::vector<GroupRange> groups;
    std::vector<Index> back_map;
    std::vector<double> group_weights;
    Index original_p = 0;
    /// Whether an unpenalized intercept is fitted alongside the groups.
    bool intercept = false;

    Index n() const { return X.rows(); }
    Index p() const { return X.cols(); }
    Index g() const { return static_cast<Index>(groups.size()); }

    auto block(Index k) const
    {
        const auto& r = groups[static_cast<std::size_t>(k)];
        return X.middleCols(r.start, r.size);
    }

    double weight(Index k) const
    {
        return group_weights.empty() ? 1.0 : group_weights[static_cast<std::size_t>(k)];
    }
};

/// Replicates every column once per group it belongs to, concatenated in
/// group order, so that the resulting groups are disjoint.
inline ExpandedProblem expand_overlap(const GroupedProblem& problem)
{
    validate(problem);
    ExpandedProblem out;
    Index total = 0;
    for (const auto& gk : problem.groups) total += static_cast<Index>(gk.size());
    out.X.resize(problem.n(), total);
    out.y = problem.y;
    out.task = problem.task;
    out.original_p = problem.p();
    out.intercept = problem.task == LossKind::logistic;
    out.back_map.reserve(static_cast<std::size_t>(total));
    Index col = 0;
    for (const auto& gk : problem.groups) {
        out.groups.push_back({col, static_cast<Index>(gk.size())});
        for (Index j : gk) {
            out.X.col(col++) = problem.X.col(j);
            out.back_map.push_back(j);
        }
    }
    out.group_weights.resize(problem.groups.size());
    for (Index k = 0; k < problem.g(); ++k) out.group_weights[static_cast<std::size_t>(k)] = problem.weight(k);
    return out;
}

/// Direct route for problems whose groups are already disjoint: columns are
/// permuted into group order without replication.
inline ExpandedProblem as_disjoint(const GroupedProblem& problem)
{
    validate(problem);
    std::size_t total = 0;
    for (const auto& gk : problem.groups) total += gk.size();
    if (total != static_cast<std::size_t>(problem.p())) {
        throw Error("groups overlap; use expand_overlap");
    }
    return expand_overlap(problem);
}

inline Vector collapse_coefficients(const ExpandedProblem& expanded, const Vector& nu)
{
    if (nu.size() != static_cast<Index>(expanded.back_map.size())) {
        throw Error("latent coefficient vector has length " + std::to_string(nu.size()) +
                    ", expected " + std::to_string(expanded.back_map.size()));
    }
    Vector beta = Vector::Zero(expanded.original_p);
    for (std::size_t c = 0; c < expanded.back_map.size(); ++c) {
        beta[expanded.back_map[c]] += nu[static_cast<Index>(c)];
    }
    return beta;
}

/// Per-group basis change making every group block orthonormal.
struct OrthoTransform
{
    /// Maps transformed coefficients to the original block basis (pk x rk).
    std::vector<Matrix> basis;
    /// Left inverse of `basis` on the row space of the block (rk x pk).
    std::vector<Matrix> inverse;
    std::vector<GroupRange> original_groups;
    std::vector<GroupRange> transformed_groups;

    Vector to_original(const Vector& theta) const
    {
        Index total = original_groups.empty() ? 0 : original_groups.back().end();
        Vector nu(total);
        for (std::size_t k = 0; k < basis.size(); ++k) {
            const auto& o = original_groups[k];
            const auto& t = transformed_groups[k];
            nu.segment(o.start, o.size) = basis[k] * theta.segment(t.start, t.size);
        }
        return nu;
    }

    Vector to_transformed(const Vector& nu) const
    {
        Index total = transformed_groups.empty() ? 0 : transformed_groups.back().end();
        Vector theta(total);
        for (std::size_t k = 0; k < basis.size(); ++k) {
            const auto& o = original_groups[k];
            const auto& t = transformed_groups[k];
            theta.segment(t.start, t.size) = inverse[k] * nu.segment(o.start, o.size);
        }
        return theta;
    }
};

/// Replaces every group block Xk by Qk = Xk Rk with QkᵀQk = I. Full-rank
/// blocks use the symmetric choice Rk = (XkᵀXk)^(-1/2), so blocks that are
/// already orthonormal are left untouched; rank-deficient blocks keep only
/// their rk leading singular directions.
inline std::pair<ExpandedProblem, OrthoTransform> orthogonalize(const ExpandedProblem& expanded)
{
    ExpandedProblem out = expanded;
    OrthoTransform tf;
    std::vector<Matrix> blocks;
    Index total = 0;
    for (Index k = 0; k < expanded.g(); ++k) {
        Matrix Xk = expanded.block(k);
        Eigen::JacobiSVD<Matrix> svd(Xk, Eigen::ComputeThinU | Eigen::ComputeThinV);
        const Vector& s = svd.singularValues();
        const double smax = s.size() ? s[0] : 0.0;
        if (!(smax > 1e-12)) {
            throw Error("group " + std::to_string(k) + " has a numerically zero design block");
        }
        const double cutoff = smax * 1e-10 * static_cast<double>(std::max(Xk.rows(), Xk.cols()));
        Index rank = 0;
        while (rank < s.size() && s[rank] > cutoff) ++rank;
        const Matrix V = svd.matrixV().leftCols(rank);
        const Vector sr = s.head(rank);
        Matrix R;
        Matrix Rinv;
        if (rank == Xk.cols()) {
            R = V * sr.cwiseInverse().asDiagonal() * V.transpose();
            Rinv = V * sr.asDiagonal() * V.transpose();
        } else {
            R = V * sr.cwiseInverse().asDiagonal();
            Rinv = sr.asDiagonal() * V.transpose();
        }
        blocks.push_back(Xk * R);
        tf.original_groups.push_back(expanded.groups[static_cast<std::size_t>(k)]);
        tf.transformed_groups.push_back({total, rank});
        tf.basis.push_back(std::move(R));
        tf.inverse.push_back(std::move(Rinv));
        total += rank;
    }
    out.X.resize(expanded.n(), total);
    out.groups = tf.transformed_groups;
    out.back_map.clear();
    for (std::size_t k = 0; k < blocks.size(); ++k) {
        out.X.middleCols(tf.transformed_groups[k].start, tf.transformed_groups[k].size) = blocks[k];
    }
    // Transformed columns no longer correspond to single raw columns.
    out.back_map.assign(static_cast<std::size_t>(total), -1);
    return {std::move(out), std::move(tf)};
}

} // namespace grpsel
