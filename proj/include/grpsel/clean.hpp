#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "stats.hpp"

namespace grpsel {

struct CleanedCell
{
    Index row = 0;
    Index col = 0;
    double original = 0.0;
    double imputed = 0.0;
};

struct CleanReport
{
    std::vector<CleanedCell> cells;
    std::vector<std::string> warnings;
};

/// Indices of entries with |x - Q2| / (Q3 - Q1) > threshold. Missing (NaN)
/// entries are ignored. Returns false when the interquartile range is zero,
/// in which case the rule cannot be applied.
inline bool flag_outliers(const std::vector<double>& series, double threshold, std::vector<std::size_t>& flagged)
{
    flagged.clear();
    std::vector<double> present;
    for (double v : series) {
        if (!std::isnan(v)) present.push_back(v);
    }
    if (present.empty()) return true;
    const double q1 = quantile(present, 0.25);
    const double q2 = quantile(present, 0.5);
    const double q3 = quantile(present, 0.75);
    const double iqr = q3 - q1;
    if (!(iqr > 0.0)) return false;
    for (std::size_t i = 0; i < series.size(); ++i) {
        if (!std::isnan(series[i]) && std::abs(series[i] - q2) / iqr > threshold) flagged.push_back(i);
    }
    return true;
}

/// Fills NaN entries by linear interpolation between the nearest observed
/// neighbours; leading and trailing gaps copy the nearest observed value.
inline void interpolate_missing(std::vector<double>& series)
{
    const std::size_t n = series.size();
    std::size_t prev = n;
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::isnan(series[i])) {
            prev = i;
            continue;
        }
        std::size_t next = i + 1;
        while (next < n && std::isnan(series[next])) ++next;
        if (prev == n && next == n) throw Error("series has no observed values");
        if (prev == n) {
            series[i] = series[next];
        } else if (next == n) {
            series[i] = series[prev];
        } else {
            const double w = static_cast<double>(i - prev) / static_cast<double>(next - prev);
            series[i] = (1.0 - w) * series[prev] + w * series[next];
        }
    }
}

/// Column-wise outlier removal and imputation. Every column is a series in
/// row order.
inline CleanReport clean_columns(Matrix& X, double threshold = 6.0)
{
    CleanReport report;
    for (Index j = 0; j < X.cols(); ++j) {
        std::vector<double> series(X.col(j).data(), X.col(j).data() + X.rows());
        const std::vector<double> before = series;
        std::vector<std::size_t> flagged;
        if (!flag_outliers(series, threshold, flagged)) {
            report.warnings.push_back("column " + std::to_string(j) +
                                      ": interquartile range is zero, outlier rule skipped");
        }
        for (std::size_t i : flagged) series[i] = std::numeric_limits<double>::quiet_NaN();
        bool any_missing = false;
        for (double v : series) any_missing = any_missing || std::isnan(v);
        if (!any_missing) continue;
        bool any_observed = false;
        for (double v : series) any_observed = any_observed || !std::isnan(v);
        if (!any_observed) {
            report.warnings.push_back("column " + std::to_string(j) + ": no observed values, left missing");
            continue;
        }
        interpolate_missing(series);
        for (std::size_t i = 0; i < series.size(); ++i) {
            const bool was_missing = std::isnan(before[i]);
            const bool was_flagged = std::find(flagged.begin(), flagged.end(), i) != flagged.end();
            if (was_missing || was_flagged) {
                report.cells.push_back({static_cast<Index>(i), j, before[i], series[i]});
            }
            X(static_cast<Index>(i), j) = series[i];
        }
    }
    return report;
}

} // namespace grpsel
