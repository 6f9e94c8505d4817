#include "rxsentinel/nn/dense.hpp"

#include <cmath>
#include <string>

#include "rxsentinel/errors.hpp"

namespace rxsentinel::nn {

std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::identity: return "identity";
    case Activation::relu: return "relu";
    case Activation::selu: return "selu";
    case Activation::sigmoid: return "sigmoid";
  }
  return "?";
}

double activate(Activation a, double u) {
  switch (a) {
    case Activation::identity: return u;
    case Activation::relu: return u > 0.0 ? u : 0.0;
    case Activation::selu: return u > 0.0 ? kSeluLambda * u : kSeluLambda * kSeluAlpha * std::expm1(u);
    case Activation::sigmoid:
      if (u >= 0.0) return 1.0 / (1.0 + std::exp(-u));
      {
        const double e = std::exp(u);
        return e / (1.0 + e);
      }
  }
  return u;
}

double activate_derivative(Activation a, double u) {
  switch (a) {
    case Activation::identity: return 1.0;
    case Activation::relu: return u > 0.0 ? 1.0 : 0.0;
    case Activation::selu: return u > 0.0 ? kSeluLambda : kSeluLambda * kSeluAlpha * std::exp(u);
    case Activation::sigmoid: {
      const double s = activate(Activation::sigmoid, u);
      return s * (1.0 - s);
    }
  }
  return 1.0;
}

DenseLayer DenseLayer::create(std::size_t in, std::size_t out, Activation act,
                              double dropout_rate, bool batch_norm, Rng& rng) {
  if (in == 0 || out == 0) throw DimensionError("layer widths must be positive");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
    throw ConfigError("dropout rate must lie in [0, 1)");
  }
  DenseLayer layer;
  const auto rows = static_cast<Eigen::Index>(in);
  const auto cols = static_cast<Eigen::Index>(out);
  const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
  layer.weight.resize(rows, cols);
  for (Eigen::Index i = 0; i < layer.weight.size(); ++i) {
    layer.weight.data()[i] = rng.uniform(-limit, limit);
  }
  layer.bias = Row::Zero(cols);
  layer.activation = act;
  layer.dropout_rate = dropout_rate;
  layer.batch_norm = batch_norm;
  if (batch_norm) {
    layer.gamma = Row::Ones(cols);
    layer.beta = Row::Zero(cols);
    layer.running_mean = Row::Zero(cols);
    layer.running_var = Row::Ones(cols);
  }
  return layer;
}

LayerOutput forward(const DenseLayer& layer, const Matrix& x, Mode mode, Rng& rng) {
  if (static_cast<std::size_t>(x.cols()) != layer.in()) {
    throw DimensionError("dense forward: input has " + std::to_string(x.cols()) +
                         " columns, layer expects " + std::to_string(layer.in()));
  }
  LayerOutput out;
  LayerCache& c = out.cache;
  c.mode = mode;
  c.input = x;
  Matrix z = x * layer.weight;
  z.rowwise() += layer.bias;

  if (layer.batch_norm) {
    if (mode == Mode::train) {
      const double n = static_cast<double>(z.rows());
      c.batch_mean = z.colwise().sum() / n;
      c.batch_var = (z.rowwise() - c.batch_mean).array().square().colwise().sum() / n;
      c.inv_std = (c.batch_var.array() + layer.bn_epsilon).rsqrt();
      c.normalized = (z.rowwise() - c.batch_mean).array().rowwise() * c.inv_std.array();
    } else {
      c.inv_std = (layer.running_var.array() + layer.bn_epsilon).rsqrt();
      c.normalized =
          (z.rowwise() - layer.running_mean).array().rowwise() * c.inv_std.array();
    }
    c.pre_activation =
        (c.normalized.array().rowwise() * layer.gamma.array()).rowwise() + layer.beta.array();
  } else {
    c.pre_activation = std::move(z);
  }

  c.activated.resize(c.pre_activation.rows(), c.pre_activation.cols());
  const double* u = c.pre_activation.data();
  double* a = c.activated.data();
  for (Eigen::Index i = 0; i < c.activated.size(); ++i) a[i] = activate(layer.activation, u[i]);

  if (mode == Mode::train && layer.dropout_rate > 0.0) {
    const double keep = 1.0 - layer.dropout_rate;
    const double scale = 1.0 / keep;
    c.mask.resize(c.activated.rows(), c.activated.cols());
    for (Eigen::Index i = 0; i < c.mask.size(); ++i) {
      c.mask.data()[i] = rng.uniform() < keep ? scale : 0.0;
    }
    out.y = c.activated.cwiseProduct(c.mask);
  } else {
    out.y = c.activated;
  }
  return out;
}

LayerBackward backward(const DenseLayer& layer, const LayerCache& cache, const Matrix& dy) {
  if (dy.rows() != cache.activated.rows() || dy.cols() != cache.activated.cols() ||
      static_cast<std::size_t>(cache.input.cols()) != layer.in() ||
      static_cast<std::size_t>(dy.cols()) != layer.out()) {
    throw DimensionError("dense backward: gradient shape does not match cache");
  }
  Matrix du = cache.mask.size() > 0 ? Matrix(dy.cwiseProduct(cache.mask)) : dy;
  {
    const double* u = cache.pre_activation.data();
    double* g = du.data();
    if (layer.activation == Activation::sigmoid) {
      const double* a = cache.activated.data();
      for (Eigen::Index i = 0; i < du.size(); ++i) g[i] *= a[i] * (1.0 - a[i]);
    } else if (layer.activation != Activation::identity) {
      for (Eigen::Index i = 0; i < du.size(); ++i) {
        g[i] *= activate_derivative(layer.activation, u[i]);
      }
    }
  }

  LayerBackward out;
  Matrix dz;
  if (layer.batch_norm) {
    out.grads.gamma = du.cwiseProduct(cache.normalized).colwise().sum();
    out.grads.beta = du.colwise().sum();
    const Matrix dzhat = du.array().rowwise() * layer.gamma.array();
    if (cache.mode == Mode::train) {
      const double n = static_cast<double>(du.rows());
      const Row sum_dzhat = dzhat.colwise().sum();
      const Row sum_dzhat_zhat = dzhat.cwiseProduct(cache.normalized).colwise().sum();
      Matrix centered = (dzhat * n).rowwise() - sum_dzhat;
      centered -= Matrix(cache.normalized.array().rowwise() * sum_dzhat_zhat.array());
      dz = (centered.array().rowwise() * (cache.inv_std.array() / n)).matrix();
    } else {
      dz = dzhat.array().rowwise() * cache.inv_std.array();
    }
  } else {
    dz = std::move(du);
  }
  out.grads.weight = cache.input.transpose() * dz;
  out.grads.bias = dz.colwise().sum();
  out.dx = dz * layer.weight.transpose();
  return out;
}

void update_running_stats(DenseLayer& layer, const LayerCache& cache) {
  if (!layer.batch_norm || cache.mode != Mode::train) return;
  const double m = layer.bn_momentum;
  layer.running_mean = m * layer.running_mean + (1.0 - m) * cache.batch_mean;
  layer.running_var = m * layer.running_var + (1.0 - m) * cache.batch_var;
}

}  // namespace rxsentinel::nn
