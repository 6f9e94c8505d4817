#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "rxsentinel/nn/mlp.hpp"

namespace rxsentinel::nn {

struct AdamState {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t t = 0;
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
};

/// One bias-corrected Adam update of every block. Moment buffers are sized
/// on the first call. All gradients are checked before any parameter changes;
/// a non-finite value raises NumericError naming its block.
void adam_step(AdamState& state, std::span<const ParamBlock> params,
               std::span<const GradBlock> grads);

}  // namespace rxsentinel::nn
