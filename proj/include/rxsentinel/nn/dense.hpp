#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>

#include "rxsentinel/nn/matrix.hpp"
#include "rxsentinel/random.hpp"

namespace rxsentinel::nn {

enum class Activation : std::uint8_t { identity, relu, selu, sigmoid };
enum class Mode : std::uint8_t { train, infer };

std::string_view to_string(Activation a);

inline constexpr double kSeluLambda = 1.0507009873554805;
inline constexpr double kSeluAlpha = 1.6732632423543772;

double activate(Activation a, double u);
/// Derivative with respect to the pre-activation `u`.
double activate_derivative(Activation a, double u);

/// y = dropout(act(batchnorm?(x W + b))). Dropout is inverted (kept units
/// scaled by 1/(1-p)) and only active in train mode. Batch norm normalizes
/// with batch statistics in train mode and running statistics in infer mode.
struct DenseLayer {
  Matrix weight;  // in x out
  Row bias;
  Activation activation = Activation::identity;
  double dropout_rate = 0.0;
  bool batch_norm = false;
  Row gamma;
  Row beta;
  Row running_mean;
  Row running_var;
  double bn_momentum = 0.9;
  double bn_epsilon = 1e-5;

  std::size_t in() const { return static_cast<std::size_t>(weight.rows()); }
  std::size_t out() const { return static_cast<std::size_t>(weight.cols()); }

  /// Glorot-uniform weights, zero bias, unit scale, zero shift.
  static DenseLayer create(std::size_t in, std::size_t out, Activation act,
                           double dropout_rate, bool batch_norm, Rng& rng);
};

struct LayerCache {
  Mode mode = Mode::infer;
  Matrix input;
  Matrix normalized;  // zhat, only with batch norm
  Matrix pre_activation;
  Matrix activated;
  Matrix mask;  // dropout multipliers, only in train mode with dropout
  Row batch_mean;
  Row batch_var;
  Row inv_std;
};

struct LayerOutput {
  Matrix y;
  LayerCache cache;
};

struct LayerGrads {
  Matrix weight;
  Row bias;
  Row gamma;
  Row beta;
};

struct LayerBackward {
  Matrix dx;
  LayerGrads grads;
};

/// Throws DimensionError when x.cols() != layer.in(). `rng` drives the
/// dropout mask in train mode and is untouched otherwise.
LayerOutput forward(const DenseLayer& layer, const Matrix& x, Mode mode, Rng& rng);

LayerBackward backward(const DenseLayer& layer, const LayerCache& cache,
                       const Matrix& dy);

/// Blends the batch statistics of a train-mode forward into the running ones.
void update_running_stats(DenseLayer& layer, const LayerCache& cache);

}  // namespace rxsentinel::nn
