#include "rxsentinel/nn/loss.hpp"

#include <algorithm>
#include <cmath>

#include "rxsentinel/errors.hpp"

namespace rxsentinel::nn {

namespace {

void require_same_shape(const Matrix& a, const Matrix& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError(std::string(what) + ": shape mismatch");
  }
  if (a.size() == 0) throw DimensionError(std::string(what) + ": empty input");
}

}  // namespace

Loss loss_bce(const Matrix& p, const Matrix& y) {
  require_same_shape(p, y, "loss_bce");
  const double n = static_cast<double>(p.size());
  Loss out;
  out.grad.resize(p.rows(), p.cols());
  double total = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    const double q = std::clamp(p.data()[i], kProbabilityClamp, 1.0 - kProbabilityClamp);
    const double t = y.data()[i];
    total -= t * std::log(q) + (1.0 - t) * std::log1p(-q);
    out.grad.data()[i] = (-t / q + (1.0 - t) / (1.0 - q)) / n;
  }
  out.value = total / n;
  return out;
}

Loss loss_l1(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "loss_l1");
  const double n = static_cast<double>(a.size());
  const Matrix diff = a - b;
  Loss out;
  out.value = diff.cwiseAbs().sum() / n;
  out.grad = diff.unaryExpr([n](double d) { return d > 0.0 ? 1.0 / n : (d < 0.0 ? -1.0 / n : 0.0); });
  return out;
}

Loss loss_l2(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "loss_l2");
  const double n = static_cast<double>(a.size());
  const Matrix diff = a - b;
  Loss out;
  out.value = diff.squaredNorm() / n;
  out.grad = diff * (2.0 / n);
  return out;
}

}  // namespace rxsentinel::nn
