#pragma once

#include <cmath>

#include "defectflow/core.hpp"
#include "defectflow/learn/forest.hpp"
#include "defectflow/learn/lasso.hpp"
#include "defectflow/learn/svc.hpp"

namespace defectflow::learn {

enum class Norm { l1, l2 };

// Distance between one predicted output and its target.
inline double pair_error(const Vector& y_pred, const Vector& y_true, Norm norm = Norm::l2) {
    if (y_pred.size() != y_true.size())
        throw DimensionMismatch(static_cast<std::size_t>(y_true.size()), static_cast<std::size_t>(y_pred.size()));
    const Vector d = y_pred - y_true;
    return norm == Norm::l1 ? d.lpNorm<1>() : d.norm();
}

inline double pair_error(double y_pred, double y_true) { return std::abs(y_pred - y_true); }

}  // namespace defectflow::learn
