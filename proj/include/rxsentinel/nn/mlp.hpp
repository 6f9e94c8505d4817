#pragma once

#include <span>
#include <string>
#include <vector>

#include "rxsentinel/nn/dense.hpp"

namespace rxsentinel::nn {

/// A named, contiguous slice of trainable values.
struct ParamBlock {
  std::string name;
  std::span<double> values;
};

struct GradBlock {
  std::string name;
  std::span<const double> values;
};

struct LayerSpec {
  std::size_t out = 0;
  Activation activation = Activation::identity;
  double dropout_rate = 0.0;
  bool batch_norm = false;
};

/// Feed-forward stack of dense layers.
struct Mlp {
  std::vector<DenseLayer> layers;

  static Mlp create(std::size_t in, std::span<const LayerSpec> specs, Rng& rng);

  std::size_t in() const { return layers.front().in(); }
  std::size_t out() const { return layers.back().out(); }
};

struct MlpOutput {
  Matrix y;
  std::vector<LayerCache> caches;
  // Output of every layer; activations.back() == y.
  std::vector<Matrix> activations;
};

struct MlpBackward {
  Matrix dx;
  std::vector<LayerGrads> grads;
};

MlpOutput forward(const Mlp& net, const Matrix& x, Mode mode, Rng& rng);
/// Inference-mode forward without caches.
Matrix predict(const Mlp& net, const Matrix& x);
MlpBackward backward(const Mlp& net, const MlpOutput& fwd, const Matrix& dy);
void update_running_stats(Mlp& net, const MlpOutput& fwd);

/// Weight, bias, and (with batch norm) scale and shift of each layer, in
/// layer order. `prefix` names the blocks, e.g. "encoder1".
std::vector<ParamBlock> parameters(Mlp& net, const std::string& prefix);
std::vector<GradBlock> gradients(const std::vector<LayerGrads>& grads,
                                 const Mlp& net, const std::string& prefix);

/// Elementwise sum of two gradient sets of the same network.
void accumulate(std::vector<LayerGrads>& into, const std::vector<LayerGrads>& add);

}  // namespace rxsentinel::nn
