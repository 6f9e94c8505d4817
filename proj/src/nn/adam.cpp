#include "rxsentinel/nn/adam.hpp"

#include <cmath>

#include "rxsentinel/errors.hpp"

namespace rxsentinel::nn {

void adam_step(AdamState& state, std::span<const ParamBlock> params,
               std::span<const GradBlock> grads) {
  if (params.size() != grads.size()) throw DimensionError("adam: block count mismatch");
  for (std::size_t b = 0; b < params.size(); ++b) {
    if (params[b].values.size() != grads[b].values.size()) {
      throw DimensionError("adam: size mismatch in block " + params[b].name);
    }
    for (double g : grads[b].values) {
      if (!std::isfinite(g)) throw NumericError("adam: non-finite gradient in " + grads[b].name);
    }
  }
  if (state.m.empty()) {
    for (const auto& p : params) {
      state.m.emplace_back(p.values.size(), 0.0);
      state.v.emplace_back(p.values.size(), 0.0);
    }
  } else if (state.m.size() != params.size()) {
    throw DimensionError("adam: state was created for a different parameter set");
  }

  ++state.t;
  const double corr1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
  const double corr2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
  for (std::size_t b = 0; b < params.size(); ++b) {
    auto& m = state.m[b];
    auto& v = state.v[b];
    if (m.size() != params[b].values.size()) {
      throw DimensionError("adam: moment shape mismatch in block " + params[b].name);
    }
    double* p = params[b].values.data();
    const double* g = grads[b].values.data();
    for (std::size_t i = 0; i < m.size(); ++i) {
      m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g[i];
      v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g[i] * g[i];
      const double m_hat = m[i] / corr1;
      const double v_hat = v[i] / corr2;
      p[i] -= state.learning_rate * m_hat / (std::sqrt(v_hat) + state.epsilon);
    }
  }
}

}  // namespace rxsentinel::nn
