#pragma once

#include <Eigen/Core>

namespace rxsentinel::nn {

/// Row-major dense matrix of doubles; one example per row.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
/// Per-feature parameter row (biases, batch-norm scale/shift).
using Row = Eigen::RowVectorXd;

inline bool all_finite(const Matrix& m) { return m.allFinite(); }

}  // namespace rxsentinel::nn
