#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "cv.hpp"
#include "stats.hpp"

namespace grpsel {

/// Cubic spline basis of one raw predictor: the scaled predictor itself
/// followed by |x - t|³ terms with the constant and linear parts projected out.
struct PredictorBasis
{
    double lo = 0.0;
    double hi = 1.0;
    std::vector<double> knots;
    std::vector<double> proj_const;   // per cubic column
    std::vector<double> proj_slope;

    double scale(double x) const { return 2.0 * (x - lo) / (hi - lo) - 1.0; }
};

struct SplineExpansion
{
    Index basis_size = 4;
    std::vector<PredictorBasis> predictors;

    Index n_predictors() const { return static_cast<Index>(predictors.size()); }

    /// Basis matrix for new rows using the stored scaling and projections.
    Matrix apply(const Matrix& raw) const
    {
        if (raw.cols() != n_predictors()) {
            throw Error("spline basis expects " + std::to_string(n_predictors()) +
                        " predictors, got " + std::to_string(raw.cols()));
        }
        const Index d = basis_size;
        Matrix out(raw.rows(), raw.cols() * d);
        for (Index j = 0; j < raw.cols(); ++j) {
            const auto& b = predictors[static_cast<std::size_t>(j)];
            for (Index i = 0; i < raw.rows(); ++i) {
                const double x = b.scale(raw(i, j));
                out(i, j * d) = x;
                for (std::size_t c = 0; c < b.knots.size(); ++c) {
                    const double t = std::abs(x - b.knots[c]);
                    out(i, j * d + 1 + static_cast<Index>(c)) =
                        t * t * t - b.proj_const[c] - b.proj_slope[c] * x;
                }
            }
        }
        return out;
    }
};

struct SemiparamGroups
{
    double alpha = 0.5;
    std::vector<std::vector<Index>> groups;   // 2j linear, 2j + 1 nonlinear
    std::vector<double> weights;
};

/// Fits the basis on training rows. Knots sit at the equispaced interior
/// quantiles of the scaled predictor; `basis_size` must be knots + 1.
inline SplineExpansion fit_spline_expansion(const Matrix& raw, Index basis_size = 4, Index knots = 3)
{
    if (knots < 1) throw Error("spline needs at least one knot");
    if (basis_size != knots + 1) {
        throw Error("basis size " + std::to_string(basis_size) + " does not match " +
                    std::to_string(knots) + " knots (expected knots + 1)");
    }
    SplineExpansion out;
    out.basis_size = basis_size;
    for (Index j = 0; j < raw.cols(); ++j) {
        std::vector<double> col(raw.col(j).data(), raw.col(j).data() + raw.rows());
        std::set<double> distinct(col.begin(), col.end());
        if (static_cast<Index>(distinct.size()) < knots + 2) {
            throw Error("predictor " + std::to_string(j) + " has " + std::to_string(distinct.size()) +
                        " distinct values, spline needs at least " + std::to_string(knots + 2));
        }
        PredictorBasis b;
        b.lo = *distinct.begin();
        b.hi = *distinct.rbegin();
        for (double& v : col) v = b.scale(v);
        for (Index c = 1; c <= knots; ++c) {
            b.knots.push_back(quantile(col, static_cast<double>(c) / static_cast<double>(knots + 1)));
        }
        // Least-squares fit of each cubic column on [1, x].
        const double n = static_cast<double>(col.size());
        const double mx = std::accumulate(col.begin(), col.end(), 0.0) / n;
        double sxx = 0.0;
        for (double x : col) sxx += (x - mx) * (x - mx);
        for (double t : b.knots) {
            double mc = 0.0;
            double sxc = 0.0;
            for (double x : col) mc += std::pow(std::abs(x - t), 3);
            mc /= n;
            for (double x : col) sxc += (x - mx) * (std::pow(std::abs(x - t), 3) - mc);
            const double slope = sxc / sxx;
            b.proj_slope.push_back(slope);
            b.proj_const.push_back(mc - slope * mx);
        }
        out.predictors.push_back(std::move(b));
    }
    return out;
}

/// Overlapping linear / nonlinear groups per predictor with α weighting.
inline SemiparamGroups make_semiparam_groups(Index n_predictors, Index basis_size, double alpha)
{
    if (!(alpha > 0.0 && alpha <= 0.5)) throw Error("alpha must lie in (0, 0.5]");
    SemiparamGroups out;
    out.alpha = alpha;
    for (Index j = 0; j < n_predictors; ++j) {
        out.groups.push_back({j * basis_size});
        std::vector<Index> nonlinear(static_cast<std::size_t>(basis_size));
        std::iota(nonlinear.begin(), nonlinear.end(), j * basis_size);
        out.groups.push_back(std::move(nonlinear));
        out.weights.push_back(alpha);
        out.weights.push_back(1.0 - alpha);
    }
    return out;
}

struct SplineProblem
{
    Matrix X;
    SplineExpansion expansion;
    SemiparamGroups groups;
};

inline SplineProblem build_spline_groups(const Matrix& raw, Index basis_size = 4, Index knots = 3,
                                         double alpha = 0.5)
{
    SplineProblem out;
    out.expansion = fit_spline_expansion(raw, basis_size, knots);
    out.X = out.expansion.apply(raw);
    out.groups = make_semiparam_groups(raw.cols(), basis_size, alpha);
    return out;
}

/// Design factory for cross-validation: the basis is refit on each training
/// split and reused on its validation rows.
struct SplineDesign
{
    Index basis_size = 4;
    Index knots = 3;
    double alpha = 0.5;

    struct Fitted
    {
        GroupedProblem problem;
        SplineExpansion expansion;
        Matrix transform(const Matrix& raw) const { return expansion.apply(raw); }
    };

    Fitted fit(const Matrix& raw, const Vector& y, LossKind task) const
    {
        SplineProblem sp = build_spline_groups(raw, basis_size, knots, alpha);
        Fitted f;
        f.problem.X = std::move(sp.X);
        f.problem.y = y;
        f.problem.task = task;
        f.problem.groups = std::move(sp.groups.groups);
        f.problem.group_weights = std::move(sp.groups.weights);
        f.expansion = std::move(sp.expansion);
        return f;
    }
};

/// Function type per predictor from latent group activity: nonlinear when the
/// nonlinear group is active, else linear when the linear group is.
inline std::vector<FunctionType> classify_functions(const std::vector<Index>& active_groups,
                                                    Index n_predictors)
{
    std::vector<FunctionType> out(static_cast<std::size_t>(n_predictors), FunctionType::zero);
    std::vector<char> linear(out.size(), 0), nonlinear(out.size(), 0);
    for (Index k : active_groups) {
        const Index j = k / 2;
        if (j < 0 || j >= n_predictors) throw Error("active group " + std::to_string(k) + " out of range");
        (k % 2 == 0 ? linear : nonlinear)[static_cast<std::size_t>(j)] = 1;
    }
    for (std::size_t j = 0; j < out.size(); ++j) {
        if (nonlinear[j]) out[j] = FunctionType::nonlinear;
        else if (linear[j]) out[j] = FunctionType::linear;
    }
    return out;
}

inline std::vector<FunctionType> classify_functions(const PathPoint& pt, Index n_predictors)
{
    return classify_functions(pt.active, n_predictors);
}

inline std::vector<double> default_alpha_grid() { return {0.25, 0.30, 0.35, 0.40, 0.45, 0.50}; }

struct AlphaCvResult
{
    std::vector<double> alphas;
    std::vector<CvResult> per_alpha;
    Index selected = -1;

    double alpha() const { return alphas[static_cast<std::size_t>(selected)]; }
    const CvResult& cv() const { return per_alpha[static_cast<std::size_t>(selected)]; }
};

/// Cross-validation over α crossed with the path grids; all α share folds.
inline AlphaCvResult alpha_grid_cv(const Matrix& raw, const Vector& y, LossKind task,
                                   std::vector<double> alphas, const PathSpec& spec, ShrinkKind shrink,
                                   const FitOptions& fit_opt, CvOptions cv_opt,
                                   Index basis_size = 4, Index knots = 3)
{
    if (alphas.empty()) throw Error("empty alpha grid");
    if (cv_opt.fold_of.empty()) cv_opt.fold_of = make_folds(y, task, cv_opt.folds, cv_opt.seed);
    AlphaCvResult out;
    out.alphas = std::move(alphas);
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < out.alphas.size(); ++a) {
        SplineDesign design{basis_size, knots, out.alphas[a]};
        CvResult cv = cross_validate(raw, y, task, design, spec, shrink, fit_opt, cv_opt);
        const double m = cv.cells[static_cast<std::size_t>(cv.selected_cell)].mean;
        if (m < best) {
            best = m;
            out.selected = static_cast<Index>(a);
        }
        out.per_alpha.push_back(std::move(cv));
    }
    return out;
}

// Synthetic data -------------------------------------------------------------

enum class CorrelationKind { constant, toeplitz };

inline std::string to_string(CorrelationKind k) { return k == CorrelationKind::constant ? "constant" : "toeplitz"; }

inline CorrelationKind parse_correlation_kind(const std::string& s)
{
    if (s == "constant") return CorrelationKind::constant;
    if (s == "toeplitz") return CorrelationKind::toeplitz;
    throw Error("unknown correlation '" + s + "' (expected constant|toeplitz)");
}

/// Two recipes. `grouped_linear`: constant correlation design with disjoint
/// groups and unit coefficients on the first `true_groups` groups.
/// Otherwise semiparametric: Toeplitz Gaussian mapped through the normal cdf
/// to [-1, 1] with a few linear, cosine and sine component functions.
struct SyntheticSpec
{
    bool grouped_linear = false;
    LossKind task = LossKind::square;
    CorrelationKind correlation = CorrelationKind::toeplitz;
    Index n = 500;
    Index predictors = 100;
    double rho = 0.5;
    double snr = 1.0;
    Index group_size = 5;
    Index true_groups = 2;
    Index n_linear = 6;
    Index n_cos = 2;
    Index n_sin = 2;
    std::uint64_t seed = 1;
};

struct SyntheticData
{
    Matrix X;
    Vector y;
    Vector f0;
    double sigma = 0.0;     // zero for logistic responses
    std::vector<std::vector<Index>> groups;     // grouped_linear only
    std::vector<Index> true_groups;
    std::vector<FunctionType> labels;           // per predictor
};

namespace detail {

inline void validate_spec(const SyntheticSpec& s)
{
    if (s.n < 2) throw Error("synthetic spec: n must be at least 2");
    if (s.predictors < 1) throw Error("synthetic spec: need at least one predictor");
    if (s.task == LossKind::square && !(s.snr > 0.0)) throw Error("synthetic spec: snr must be positive");
    if (s.correlation == CorrelationKind::constant && !(s.rho >= 0.0 && s.rho < 1.0)) {
        throw Error("synthetic spec: constant correlation needs rho in [0, 1)");
    }
    if (s.correlation == CorrelationKind::toeplitz && !(std::abs(s.rho) < 1.0)) {
        throw Error("synthetic spec: Toeplitz correlation needs |rho| < 1");
    }
    if (s.grouped_linear) {
        if (s.group_size < 1 || s.predictors % s.group_size != 0) {
            throw Error("synthetic spec: predictors must be a multiple of group_size");
        }
        if (s.true_groups < 0 || s.true_groups > s.predictors / s.group_size) {
            throw Error("synthetic spec: too many true groups");
        }
    } else if (s.n_linear < 0 || s.n_cos < 0 || s.n_sin < 0 ||
               s.n_linear + s.n_cos + s.n_sin > s.predictors) {
        throw Error("synthetic spec: more component functions than predictors");
    }
}

inline Matrix gaussian_design(const SyntheticSpec& s, std::mt19937_64& rng)
{
    std::normal_distribution<double> normal;
    Matrix X(s.n, s.predictors);
    for (Index i = 0; i < s.n; ++i) {
        if (s.correlation == CorrelationKind::constant) {
            const double shared = normal(rng);
            for (Index j = 0; j < s.predictors; ++j) {
                X(i, j) = std::sqrt(s.rho) * shared + std::sqrt(1.0 - s.rho) * normal(rng);
            }
        } else {
            X(i, 0) = normal(rng);
            const double innov = std::sqrt(1.0 - s.rho * s.rho);
            for (Index j = 1; j < s.predictors; ++j) X(i, j) = s.rho * X(i, j - 1) + innov * normal(rng);
        }
    }
    return X;
}

/// Centers and rescales to mean zero, variance one (divisor n).
inline Vector unit_moments(Vector v)
{
    v.array() -= v.mean();
    const double sd = std::sqrt(v.squaredNorm() / static_cast<double>(v.size()));
    if (!(sd > 0.0)) throw Error("synthetic component function is constant");
    return v / sd;
}

inline double population_variance(const Vector& v)
{
    return (v.array() - v.mean()).square().sum() / static_cast<double>(v.size());
}

} // namespace detail

inline SyntheticData generate_synthetic(const SyntheticSpec& spec)
{
    detail::validate_spec(spec);
    std::mt19937_64 rng(spec.seed);
    SyntheticData out;
    out.X = detail::gaussian_design(spec, rng);
    out.labels.assign(static_cast<std::size_t>(spec.predictors), FunctionType::zero);

    if (spec.grouped_linear) {
        for (Index j = 0; j < spec.predictors; ++j) {
            Vector c = out.X.col(j);
            c.array() -= c.mean();
            out.X.col(j) = c / c.norm();
        }
        const Index g = spec.predictors / spec.group_size;
        Vector beta = Vector::Zero(spec.predictors);
        for (Index k = 0; k < g; ++k) {
            std::vector<Index> grp(static_cast<std::size_t>(spec.group_size));
            std::iota(grp.begin(), grp.end(), k * spec.group_size);
            out.groups.push_back(std::move(grp));
        }
        for (Index k = 0; k < spec.true_groups; ++k) {
            out.true_groups.push_back(k);
            beta.segment(k * spec.group_size, spec.group_size).setOnes();
            for (Index j = 0; j < spec.group_size; ++j) {
                out.labels[static_cast<std::size_t>(k * spec.group_size + j)] = FunctionType::linear;
            }
        }
        out.f0 = out.X * beta;
    } else {
        for (Index j = 0; j < spec.predictors; ++j) {
            double lo = std::numeric_limits<double>::infinity();
            double hi = -lo;
            for (Index i = 0; i < spec.n; ++i) {
                const double u = 0.5 * std::erfc(-out.X(i, j) / std::sqrt(2.0));
                out.X(i, j) = u;
                lo = std::min(lo, u);
                hi = std::max(hi, u);
            }
            if (!(hi > lo)) throw Error("synthetic predictor is constant; increase n");
            out.X.col(j) = (2.0 * (out.X.col(j).array() - lo) / (hi - lo) - 1.0).matrix();
        }
        std::vector<Index> order(static_cast<std::size_t>(spec.predictors));
        std::iota(order.begin(), order.end(), Index{0});
        std::shuffle(order.begin(), order.end(), rng);
        out.f0 = Vector::Zero(spec.n);
        const double pi = std::acos(-1.0);
        std::size_t at = 0;
        auto add = [&](Index count, int kind) {
            for (Index c = 0; c < count; ++c, ++at) {
                const Index j = order[at];
                Vector f = out.X.col(j);
                if (kind == 1) f = (pi * f.array()).cos().matrix();
                if (kind == 2) f = (pi * f.array()).sin().matrix();
                out.f0 += detail::unit_moments(f);
                out.labels[static_cast<std::size_t>(j)] = kind == 0 ? FunctionType::linear : FunctionType::nonlinear;
                out.true_groups.push_back(kind == 0 ? 2 * j : 2 * j + 1);
            }
        };
        add(spec.n_linear, 0);
        add(spec.n_cos, 1);
        add(spec.n_sin, 2);
        std::sort(out.true_groups.begin(), out.true_groups.end());
    }

    out.y.resize(spec.n);
    if (spec.task == LossKind::square) {
        out.sigma = std::sqrt(detail::population_variance(out.f0) / spec.snr);
        std::normal_distribution<double> noise(0.0, out.sigma);
        for (Index i = 0; i < spec.n; ++i) out.y[i] = out.f0[i] + noise(rng);
    } else {
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        for (Index i = 0; i < spec.n; ++i) out.y[i] = unif(rng) < sigmoid(out.f0[i]) ? 1.0 : 0.0;
    }
    return out;
}

} // namespace grpsel
