#include "rxsentinel/nn/mlp.hpp"

#include "rxsentinel/errors.hpp"

namespace rxsentinel::nn {

Mlp Mlp::create(std::size_t in, std::span<const LayerSpec> specs, Rng& rng) {
  if (specs.empty()) throw ConfigError("network needs at least one layer");
  Mlp net;
  std::size_t width = in;
  for (const auto& s : specs) {
    net.layers.push_back(
        DenseLayer::create(width, s.out, s.activation, s.dropout_rate, s.batch_norm, rng));
    width = s.out;
  }
  return net;
}

MlpOutput forward(const Mlp& net, const Matrix& x, Mode mode, Rng& rng) {
  MlpOutput out;
  out.caches.reserve(net.layers.size());
  out.activations.reserve(net.layers.size());
  const Matrix* current = &x;
  for (const auto& layer : net.layers) {
    LayerOutput lo = forward(layer, *current, mode, rng);
    out.caches.push_back(std::move(lo.cache));
    out.activations.push_back(std::move(lo.y));
    current = &out.activations.back();
  }
  out.y = out.activations.back();
  return out;
}

Matrix predict(const Mlp& net, const Matrix& x) {
  Matrix current = x;
  for (const auto& layer : net.layers) {
    if (static_cast<std::size_t>(current.cols()) != layer.in()) {
      throw DimensionError("predict: input width mismatch");
    }
    Matrix z = current * layer.weight;
    z.rowwise() += layer.bias;
    if (layer.batch_norm) {
      const Row inv_std = (layer.running_var.array() + layer.bn_epsilon).rsqrt();
      z = (((z.rowwise() - layer.running_mean).array().rowwise() * inv_std.array()).rowwise() *
           layer.gamma.array())
              .rowwise() +
          layer.beta.array();
    }
    double* v = z.data();
    for (Eigen::Index i = 0; i < z.size(); ++i) v[i] = activate(layer.activation, v[i]);
    current = std::move(z);
  }
  return current;
}

MlpBackward backward(const Mlp& net, const MlpOutput& fwd, const Matrix& dy) {
  if (fwd.caches.size() != net.layers.size()) {
    throw DimensionError("backward: cache does not belong to this network");
  }
  MlpBackward out;
  out.grads.resize(net.layers.size());
  Matrix grad = dy;
  for (std::size_t i = net.layers.size(); i-- > 0;) {
    LayerBackward lb = backward(net.layers[i], fwd.caches[i], grad);
    out.grads[i] = std::move(lb.grads);
    grad = std::move(lb.dx);
  }
  out.dx = std::move(grad);
  return out;
}

void update_running_stats(Mlp& net, const MlpOutput& fwd) {
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    update_running_stats(net.layers[i], fwd.caches.at(i));
  }
}

namespace {

template <typename T>
std::span<double> span_of(T& m) {
  return {m.data(), static_cast<std::size_t>(m.size())};
}

template <typename T>
std::span<const double> cspan_of(const T& m) {
  return {m.data(), static_cast<std::size_t>(m.size())};
}

}  // namespace

std::vector<ParamBlock> parameters(Mlp& net, const std::string& prefix) {
  std::vector<ParamBlock> blocks;
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    auto& l = net.layers[i];
    const std::string base = prefix + ".layer" + std::to_string(i);
    blocks.push_back({base + ".weight", span_of(l.weight)});
    blocks.push_back({base + ".bias", span_of(l.bias)});
    if (l.batch_norm) {
      blocks.push_back({base + ".gamma", span_of(l.gamma)});
      blocks.push_back({base + ".beta", span_of(l.beta)});
    }
  }
  return blocks;
}

std::vector<GradBlock> gradients(const std::vector<LayerGrads>& grads, const Mlp& net,
                                 const std::string& prefix) {
  if (grads.size() != net.layers.size()) throw DimensionError("gradient/layer count mismatch");
  std::vector<GradBlock> blocks;
  for (std::size_t i = 0; i < grads.size(); ++i) {
    const auto& g = grads[i];
    const std::string base = prefix + ".layer" + std::to_string(i);
    blocks.push_back({base + ".weight", cspan_of(g.weight)});
    blocks.push_back({base + ".bias", cspan_of(g.bias)});
    if (net.layers[i].batch_norm) {
      blocks.push_back({base + ".gamma", cspan_of(g.gamma)});
      blocks.push_back({base + ".beta", cspan_of(g.beta)});
    }
  }
  return blocks;
}

void accumulate(std::vector<LayerGrads>& into, const std::vector<LayerGrads>& add) {
  if (into.size() != add.size()) throw DimensionError("gradient set size mismatch");
  for (std::size_t i = 0; i < into.size(); ++i) {
    into[i].weight += add[i].weight;
    into[i].bias += add[i].bias;
    if (into[i].gamma.size() > 0) {
      into[i].gamma += add[i].gamma;
      into[i].beta += add[i].beta;
    }
  }
}

}  // namespace rxsentinel::nn
