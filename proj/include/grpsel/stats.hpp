#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "types.hpp"

namespace grpsel {

/// Sample quantile with linear interpolation between order statistics
/// (h = (n - 1) q, the usual "type 7" definition).
inline double quantile(std::vector<double> values, double q)
{
    if (values.empty()) throw Error("quantile of an empty sample");
    if (!(q >= 0.0 && q <= 1.0)) throw Error("quantile level must lie in [0, 1]");
    std::sort(values.begin(), values.end());
    const double h = (static_cast<double>(values.size()) - 1.0) * q;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

} // namespace grpsel
