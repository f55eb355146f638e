#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "path.hpp"

namespace grpsel {

enum class CvMetric { mse, logistic };

inline std::string to_string(CvMetric m) { return m == CvMetric::mse ? "mse" : "logistic_loss"; }

/// Mean square error of predictions on the response scale.
inline double mean_square_error(const Vector& y, const Vector& pred)
{
    if (y.size() != pred.size() || y.size() == 0) throw Error("mean_square_error: size mismatch");
    return (y - pred).squaredNorm() / static_cast<double>(y.size());
}

/// Mean of -y log p - (1 - y) log(1 - p), evaluated from the linear predictor.
inline double mean_logistic_loss(const Vector& y, const Vector& eta)
{
    if (y.size() != eta.size() || y.size() == 0) throw Error("mean_logistic_loss: size mismatch");
    return loss_from_predictor(LossKind::logistic, y, eta) / static_cast<double>(y.size());
}

/// Validation loss of a fitted point on held-out rows.
inline double validation_loss(CvMetric metric, const Vector& y, const Vector& eta)
{
    return metric == CvMetric::mse ? mean_square_error(y, eta) : mean_logistic_loss(y, eta);
}

enum class FunctionType { zero, linear, nonlinear };

inline std::string to_string(FunctionType t)
{
    switch (t) {
    case FunctionType::zero: return "zero";
    case FunctionType::linear: return "linear";
    case FunctionType::nonlinear: return "nonlinear";
    }
    return "zero";
}

struct RecoveryMetrics
{
    double relative_error = 0.0;
    double f1 = 0.0;
    Index true_positives = 0;
    Index false_positives = 0;
    Index false_negatives = 0;
    Index fitted_linear = 0;
    Index fitted_nonlinear = 0;
};

/// Relative error ‖f0 - f̂‖² / ‖f0‖² and the micro F1 over the nonzero
/// classes: a predictor counts as a true positive when its fitted type is
/// nonzero and matches the truth, a false positive when the fitted type is
/// nonzero and wrong, a false negative when the true type is nonzero and missed.
inline RecoveryMetrics evaluate_metrics(const Vector& f0, const Vector& fitted,
                                        const std::vector<FunctionType>& truth,
                                        const std::vector<FunctionType>& estimate)
{
    if (f0.size() != fitted.size()) throw Error("evaluate_metrics: fitted values have the wrong length");
    if (truth.size() != estimate.size()) throw Error("evaluate_metrics: label vectors differ in length");
    const double denom = f0.squaredNorm();
    if (!(denom > 0.0)) throw Error("relative estimation error undefined for a zero true function");
    RecoveryMetrics m;
    m.relative_error = (f0 - fitted).squaredNorm() / denom;
    for (std::size_t j = 0; j < truth.size(); ++j) {
        const FunctionType t = truth[j];
        const FunctionType e = estimate[j];
        if (e == FunctionType::linear) ++m.fitted_linear;
        if (e == FunctionType::nonlinear) ++m.fitted_nonlinear;
        if (e != FunctionType::zero && e == t) ++m.true_positives;
        if (e != FunctionType::zero && e != t) ++m.false_positives;
        if (t != FunctionType::zero && e != t) ++m.false_negatives;
    }
    const double den = 2.0 * m.true_positives + m.false_positives + m.false_negatives;
    m.f1 = den > 0.0 ? 2.0 * m.true_positives / den : 1.0;
    return m;
}

/// Fold label per row. Sizes differ by at most one; for logistic loss each
/// class is dealt round-robin separately so class proportions carry over.
inline std::vector<Index> make_folds(const Vector& y, LossKind task, Index folds, std::uint64_t seed)
{
    const Index n = y.size();
    if (folds < 2) throw Error("need at least 2 folds");
    if (n < folds) throw Error("cannot split " + std::to_string(n) + " rows into " +
                               std::to_string(folds) + " folds");
    std::mt19937_64 rng(seed);
    std::vector<Index> out(static_cast<std::size_t>(n), 0);
    std::vector<std::vector<Index>> strata;
    if (task == LossKind::logistic) {
        strata.resize(2);
        for (Index i = 0; i < n; ++i) strata[y[i] == 1.0 ? 1 : 0].push_back(i);
    } else {
        strata.emplace_back(static_cast<std::size_t>(n));
        std::iota(strata[0].begin(), strata[0].end(), Index{0});
    }
    Index counter = 0;
    for (auto& stratum : strata) {
        std::shuffle(stratum.begin(), stratum.end(), rng);
        for (Index i : stratum) out[static_cast<std::size_t>(i)] = counter++ % folds;
    }
    return out;
}

/// Raw design passed through unchanged, with fixed groups and weights.
struct IdentityDesign
{
    std::vector<std::vector<Index>> groups;
    std::vector<double> group_weights;

    struct Fitted
    {
        GroupedProblem problem;
        Matrix transform(const Matrix& X) const { return X; }
    };

    Fitted fit(const Matrix& X, const Vector& y, LossKind task) const
    {
        Fitted f;
        f.problem.X = X;
        f.problem.y = y;
        f.problem.task = task;
        f.problem.groups = groups;
        f.problem.group_weights = group_weights;
        return f;
    }
};

struct CvOptions
{
    Index folds = 5;
    std::uint64_t seed = 0;
    std::optional<CvMetric> metric;   // defaults by task
    std::vector<Index> fold_of;       // explicit assignment overrides the seed
};

struct CvCell
{
    Index secondary_index = 0;
    Index position = 0;
    double mean = 0.0;
    double std_error = 0.0;
};

struct CvResult
{
    CvMetric metric = CvMetric::mse;
    Index folds = 0;
    std::vector<Index> fold_of;
    std::vector<CvCell> cells;
    Index selected_cell = -1;
    PathResult full_path;
    Index selected_point = -1;

    const PathPoint& selected() const
    {
        return full_path.points[static_cast<std::size_t>(selected_point)];
    }
};

namespace detail {

inline Matrix take_rows(const Matrix& X, const std::vector<Index>& rows)
{
    Matrix out(static_cast<Index>(rows.size()), X.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Index>(i)) = X.row(rows[i]);
    return out;
}

inline Vector take_rows(const Vector& y, const std::vector<Index>& rows)
{
    Vector out(static_cast<Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) out[static_cast<Index>(i)] = y[rows[i]];
    return out;
}

/// Point of secondary path `s` at `position`, carrying the last point forward
/// when the path stopped early.
inline const PathPoint* point_at(const PathResult& path, Index s, Index position)
{
    const PathPoint* last = nullptr;
    for (const auto& pt : path.points) {
        if (pt.secondary_index != s) continue;
        last = &pt;
        if (pt.position == position) return last;
    }
    return last;
}

} // namespace detail

/// K-fold cross-validation of a full regularization path. Every fold derives
/// its own adaptive λ0 grid; losses are aggregated by grid position.
template <class Design>
CvResult cross_validate(const Matrix& X, const Vector& y, LossKind task, const Design& design,
                        const PathSpec& spec, ShrinkKind shrink, const FitOptions& fit_opt,
                        const CvOptions& cv_opt)
{
    CvResult out;
    out.metric = cv_opt.metric.value_or(task == LossKind::square ? CvMetric::mse : CvMetric::logistic);
    out.folds = cv_opt.folds;
    out.fold_of = cv_opt.fold_of.empty() ? make_folds(y, task, cv_opt.folds, cv_opt.seed)
                                         : cv_opt.fold_of;
    if (static_cast<Index>(out.fold_of.size()) != y.size()) throw Error("fold assignment has wrong length");
    if (X.rows() != y.size()) throw Error("X and y disagree on the number of rows");

    std::vector<PathResult> fold_paths;
    std::vector<std::vector<Index>> held_out(static_cast<std::size_t>(out.folds));
    std::vector<std::vector<Index>> kept(static_cast<std::size_t>(out.folds));
    for (Index i = 0; i < y.size(); ++i) {
        const Index f = out.fold_of[static_cast<std::size_t>(i)];
        if (f < 0 || f >= out.folds) throw Error("fold label out of range");
        for (Index other = 0; other < out.folds; ++other) {
            (other == f ? held_out : kept)[static_cast<std::size_t>(other)].push_back(i);
        }
    }

    Index n_secondary = 0;
    std::vector<Index> max_position;
    std::vector<typename Design::Fitted> fitted_designs;
    for (Index f = 0; f < out.folds; ++f) {
        const auto& train = kept[static_cast<std::size_t>(f)];
        const auto& test = held_out[static_cast<std::size_t>(f)];
        if (test.empty()) throw Error("fold " + std::to_string(f) + " is empty");
        const Vector y_train = detail::take_rows(y, train);
        if (task == LossKind::logistic) {
            const double m = y_train.mean();
            if (m == 0.0 || m == 1.0) {
                throw Error("fold " + std::to_string(f) +
                            " leaves a single class for training; use stratified folds");
            }
        }
        auto fitted = design.fit(detail::take_rows(X, train), y_train, task);
        PathResult path = fit_path(fitted.problem, spec, shrink, fit_opt);
        n_secondary = std::max<Index>(n_secondary, static_cast<Index>(path.secondary_values.size()));
        fold_paths.push_back(std::move(path));
        fitted_designs.push_back(std::move(fitted));
    }

    // Full-data fit defines the reported path and the selectable points.
    auto full_design = design.fit(X, y, task);
    out.full_path = fit_path(full_design.problem, spec, shrink, fit_opt);
    n_secondary = std::max<Index>(n_secondary, static_cast<Index>(out.full_path.secondary_values.size()));
    max_position.assign(static_cast<std::size_t>(n_secondary), 0);
    auto note_positions = [&](const PathResult& p) {
        for (const auto& pt : p.points) {
            auto& m = max_position[static_cast<std::size_t>(pt.secondary_index)];
            m = std::max(m, pt.position + 1);
        }
    };
    for (const auto& p : fold_paths) note_positions(p);
    note_positions(out.full_path);

    // losses[s][t][f]
    std::vector<std::vector<std::vector<double>>> losses(static_cast<std::size_t>(n_secondary));
    for (Index s = 0; s < n_secondary; ++s) {
        losses[static_cast<std::size_t>(s)].assign(
            static_cast<std::size_t>(max_position[static_cast<std::size_t>(s)]), {});
    }
    for (Index f = 0; f < out.folds; ++f) {
        const auto& test = held_out[static_cast<std::size_t>(f)];
        const Matrix X_test = fitted_designs[static_cast<std::size_t>(f)].transform(detail::take_rows(X, test));
        const Vector y_test = detail::take_rows(y, test);
        const auto& path = fold_paths[static_cast<std::size_t>(f)];
        for (Index s = 0; s < n_secondary; ++s) {
            for (Index t = 0; t < max_position[static_cast<std::size_t>(s)]; ++t) {
                const PathPoint* pt = detail::point_at(path, s, t);
                if (!pt) continue;
                const Vector eta = predict_linear(*pt, X_test);
                losses[static_cast<std::size_t>(s)][static_cast<std::size_t>(t)].push_back(
                    validation_loss(out.metric, y_test, eta));
            }
        }
    }

    double best = std::numeric_limits<double>::infinity();
    for (Index s = 0; s < n_secondary; ++s) {
        for (Index t = 0; t < max_position[static_cast<std::size_t>(s)]; ++t) {
            const auto& v = losses[static_cast<std::size_t>(s)][static_cast<std::size_t>(t)];
            if (v.empty()) continue;
            CvCell cell;
            cell.secondary_index = s;
            cell.position = t;
            const double k = static_cast<double>(v.size());
            cell.mean = std::accumulate(v.begin(), v.end(), 0.0) / k;
            double ss = 0.0;
            for (double x : v) ss += (x - cell.mean) * (x - cell.mean);
            cell.std_error = v.size() > 1 ? std::sqrt(ss / (k - 1.0) / k) : 0.0;
            if (cell.mean < best) {
                best = cell.mean;
                out.selected_cell = static_cast<Index>(out.cells.size());
            }
            out.cells.push_back(cell);
        }
    }
    if (out.selected_cell < 0) throw Error("cross-validation produced no losses");
    const auto& chosen = out.cells[static_cast<std::size_t>(out.selected_cell)];
    const PathPoint* pick = detail::point_at(out.full_path, chosen.secondary_index, chosen.position);
    if (!pick) throw Error("selected configuration missing from the full-data path");
    out.selected_point = static_cast<Index>(pick - out.full_path.points.data());
    return out;
}

inline CvResult cross_validate(const GroupedProblem& problem, const PathSpec& spec, ShrinkKind shrink,
                               const FitOptions& fit_opt, const CvOptions& cv_opt)
{
    IdentityDesign design{problem.groups, problem.group_weights};
    return cross_validate(problem.X, problem.y, problem.task, design, spec, shrink, fit_opt, cv_opt);
}

} // namespace grpsel
