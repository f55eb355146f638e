#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cv.hpp"
#include "semiparam.hpp"

namespace grpsel {

using Json = nlohmann::json;

inline constexpr const char* kPathSchema = "grpsel.path/1";
inline constexpr const char* kCvSchema = "grpsel.cv/1";

namespace detail {

inline Json vector_json(const Vector& v)
{
    return Json(std::vector<double>(v.data(), v.data() + v.size()));
}

/// Latent blocks of the active groups keyed by group index, each listing the
/// group's raw columns in group order.
inline Json latent_json(const PathPoint& pt, const std::vector<std::vector<Index>>& groups)
{
    Json out = Json::object();
    std::vector<Index> starts;
    Index at = 0;
    for (const auto& g : groups) {
        starts.push_back(at);
        at += static_cast<Index>(g.size());
    }
    for (Index k : pt.active) {
        const auto size = static_cast<Index>(groups[static_cast<std::size_t>(k)].size());
        out[std::to_string(k)] = vector_json(pt.latent.segment(starts[static_cast<std::size_t>(k)], size));
    }
    return out;
}

inline Json beta_json(const Vector& beta)
{
    Json out = Json::object();
    for (Index j = 0; j < beta.size(); ++j) {
        if (beta[j] != 0.0) out[std::to_string(j)] = beta[j];
    }
    return out;
}

} // namespace detail

inline Json point_json(const PathPoint& pt, const std::vector<std::vector<Index>>& groups)
{
    Json j;
    j["lambda0"] = pt.lambda0;
    j["lambda1"] = pt.lambda1;
    j["lambda2"] = pt.lambda2;
    j["secondary_index"] = pt.secondary_index;
    j["position"] = pt.position;
    j["intercept"] = pt.intercept;
    j["objective"] = pt.objective;
    j["active_groups"] = pt.active;
    j["coefficients"] = detail::latent_json(pt, groups);
    j["beta"] = detail::beta_json(pt.beta);
    j["converged"] = pt.report.converged;
    j["sweeps"] = pt.report.sweeps;
    j["max_fixedpoint_violation"] = pt.report.max_fixedpoint_violation;
    j["swaps"] = pt.swaps;
    return j;
}

inline Json spline_json(const SplineExpansion& e)
{
    Json j;
    j["basis_size"] = e.basis_size;
    Json preds = Json::array();
    for (const auto& b : e.predictors) {
        preds.push_back({{"lo", b.lo}, {"hi", b.hi}, {"knots", b.knots},
                         {"proj_const", b.proj_const}, {"proj_slope", b.proj_slope}});
    }
    j["predictors"] = std::move(preds);
    return j;
}

inline SplineExpansion spline_from_json(const Json& j)
{
    SplineExpansion e;
    e.basis_size = j.at("basis_size").get<Index>();
    for (const auto& p : j.at("predictors")) {
        PredictorBasis b;
        b.lo = p.at("lo").get<double>();
        b.hi = p.at("hi").get<double>();
        b.knots = p.at("knots").get<std::vector<double>>();
        b.proj_const = p.at("proj_const").get<std::vector<double>>();
        b.proj_slope = p.at("proj_slope").get<std::vector<double>>();
        e.predictors.push_back(std::move(b));
    }
    return e;
}

inline Json path_json(const PathResult& path, const std::optional<SplineExpansion>& spline = std::nullopt)
{
    Json j;
    j["schema"] = kPathSchema;
    j["task"] = to_string(path.task);
    j["shrink"] = to_string(path.shrink);
    j["group_lasso"] = path.group_lasso;
    j["groups"] = path.groups;
    j["secondary_values"] = path.secondary_values;
    j["n_columns"] = path.points.empty() ? 0 : path.points.front().beta.size();
    j["provenance"] = {{"seed", path.seed}, {"data_hash", path.data_hash}};
    Json pts = Json::array();
    for (const auto& pt : path.points) pts.push_back(point_json(pt, path.groups));
    j["points"] = std::move(pts);
    if (spline) j["spline"] = spline_json(*spline);
    return j;
}

inline Json cv_json(const CvResult& cv, const std::optional<SplineExpansion>& spline = std::nullopt)
{
    Json j;
    j["schema"] = kCvSchema;
    j["metric"] = to_string(cv.metric);
    j["folds"] = cv.folds;
    j["fold_of"] = cv.fold_of;
    Json cells = Json::array();
    for (const auto& c : cv.cells) {
        cells.push_back({{"secondary_index", c.secondary_index}, {"position", c.position},
                         {"mean", c.mean}, {"std_error", c.std_error}});
    }
    j["cells"] = std::move(cells);
    j["selected_cell"] = cv.selected_cell;
    j["selected_point"] = cv.selected_point;
    j["path"] = path_json(cv.full_path, spline);
    return j;
}

/// Coefficients of one fitted point, enough to predict on new rows.
struct LinearModel
{
    LossKind task = LossKind::square;
    Vector beta;
    double intercept = 0.0;
    std::optional<SplineExpansion> spline;

    Vector linear_predictor(const Matrix& X) const
    {
        const Matrix design = spline ? spline->apply(X) : X;
        if (design.cols() != beta.size()) {
            throw Error("model expects " + std::to_string(spline ? spline->n_predictors() : beta.size()) +
                        " columns, got " + std::to_string(X.cols()));
        }
        Vector eta = design * beta;
        eta.array() += intercept;
        return eta;
    }

    Vector predict(const Matrix& X) const
    {
        Vector eta = linear_predictor(X);
        if (task == LossKind::logistic) {
            for (Index i = 0; i < eta.size(); ++i) eta[i] = sigmoid(eta[i]);
        }
        return eta;
    }
};

/// Reads a fit or cv output. Picks `point` from a path (default: the last
/// point) or the selected point of a cv result.
inline LinearModel model_from_json(const Json& j, std::optional<Index> point = std::nullopt)
{
    const std::string schema = j.value("schema", "");
    const Json* path = nullptr;
    Index idx = -1;
    if (schema == kCvSchema) {
        path = &j.at("path");
        idx = point.value_or(j.at("selected_point").get<Index>());
    } else if (schema == kPathSchema) {
        path = &j;
        idx = point.value_or(static_cast<Index>(j.at("points").size()) - 1);
    } else {
        throw Error("unrecognized model schema '" + schema + "'");
    }
    const auto& pts = path->at("points");
    if (idx < 0 || idx >= static_cast<Index>(pts.size())) {
        throw Error("point " + std::to_string(idx) + " outside 0.." + std::to_string(pts.size()) + " of the path");
    }
    const Json& pt = pts.at(static_cast<std::size_t>(idx));
    LinearModel m;
    m.task = parse_loss_kind(path->at("task").get<std::string>());
    m.beta = Vector::Zero(path->at("n_columns").get<Index>());
    for (const auto& [key, value] : pt.at("beta").items()) {
        const Index col = std::stoll(key);
        if (col < 0 || col >= m.beta.size()) throw Error("coefficient index " + key + " out of range");
        m.beta[col] = value.get<double>();
    }
    m.intercept = pt.at("intercept").get<double>();
    if (path->contains("spline")) m.spline = spline_from_json(path->at("spline"));
    return m;
}

} // namespace grpsel
