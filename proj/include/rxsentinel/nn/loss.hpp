#pragma once

#include "rxsentinel/nn/matrix.hpp"

namespace rxsentinel::nn {

inline constexpr double kProbabilityClamp = 1e-7;

struct Loss {
  double value = 0.0;
  Matrix grad;  // d value / d first argument
};

/// Mean binary cross-entropy over all elements; p is clamped to
/// [1e-7, 1 - 1e-7]. The gradient is taken at the clamped value.
Loss loss_bce(const Matrix& p, const Matrix& y);

/// Mean absolute difference; subgradient 0 where a == b.
/// The gradient with respect to b is the negation of `grad`.
Loss loss_l1(const Matrix& a, const Matrix& b);

/// Mean squared difference.
Loss loss_l2(const Matrix& a, const Matrix& b);

}  // namespace rxsentinel::nn
