#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace grpsel {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Thrown for every recoverable failure: bad input, violated preconditions,
/// exhausted budgets.
class Error : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

enum class LossKind { square, logistic };

/// Which convex shrinkage term accompanies the group subset penalty.
enum class ShrinkKind { none, lasso, ridge };

/// Contiguous block of columns in a disjoint-group design.
struct GroupRange
{
    Index start = 0;
    Index size = 0;

    Index end() const { return start + size; }
};

inline std::string to_string(LossKind kind)
{
    return kind == LossKind::square ? "square" : "logistic";
}

inline std::string to_string(ShrinkKind kind)
{
    switch (kind) {
    case ShrinkKind::none: return "none";
    case ShrinkKind::lasso: return "lasso";
    case ShrinkKind::ridge: return "ridge";
    }
    return "none";
}

inline LossKind parse_loss_kind(const std::string& s)
{
    if (s == "square") return LossKind::square;
    if (s == "logistic") return LossKind::logistic;
    throw Error("unknown task '" + s + "' (expected square|logistic)");
}

inline ShrinkKind parse_shrink_kind(const std::string& s)
{
    if (s == "none") return ShrinkKind::none;
    if (s == "lasso") return ShrinkKind::lasso;
    if (s == "ridge") return ShrinkKind::ridge;
    throw Error("unknown shrinkage '" + s + "' (expected none|lasso|ridge)");
}

} // namespace grpsel
