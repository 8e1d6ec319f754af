#include "presup/optim.hpp"

#include <algorithm>
#include <cmath>

#include "presup/error.hpp"

namespace presup {

void adam_step(ParamStore& params, const Gradients& grads, AdamState& state) {
  const AdamConfig& c = state.config;
  for (const std::string& name : params.trainable_names()) {
    if (!grads.count(name)) throw UsageError("adam_step: missing gradient for " + name);
    if (grads.at(name).shape() != params.get(name).shape()) {
      throw ShapeError("adam_step: gradient shape " + to_string(grads.at(name).shape()) +
                       " does not match parameter " + name);
    }
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double bias1 = 1.0 - std::pow(c.beta1, t);
  const double bias2 = 1.0 - std::pow(c.beta2, t);
  for (const std::string& name : params.trainable_names()) {
    Tensor& p = params.get(name);
    const Tensor& g = grads.at(name);
    auto [mit, m_new] = state.m.try_emplace(name, p.shape());
    auto [vit, v_new] = state.v.try_emplace(name, p.shape());
    Tensor& m = mit->second;
    Tensor& v = vit->second;
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * g[i];
      v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * g[i] * g[i];
      const double m_hat = m[i] / bias1;
      const double v_hat = v[i] / bias2;
      p[i] -= c.learning_rate * m_hat / (std::sqrt(v_hat) + c.epsilon);
    }
  }
}

void clip_gradients(Tensor& grad, double lo, double hi) {
  if (lo > hi) throw UsageError("clip_gradients: lo > hi");
  for (double& x : grad.data()) x = std::clamp(x, lo, hi);
}

void clip_gradients(Gradients& grads, double lo, double hi) {
  if (lo > hi) throw UsageError("clip_gradients: lo > hi");
  for (auto& [name, g] : grads) clip_gradients(g, lo, hi);
}

Tensor dropout_mask(const Shape& shape, double p, Rng& rng) {
  if (!(p >= 0.0 && p < 1.0)) {
    throw UsageError("dropout probability must be in [0, 1), got " + std::to_string(p));
  }
  Tensor mask(shape, 1.0);
  if (p == 0.0) return mask;
  const double keep = 1.0 / (1.0 - p);
  for (double& x : mask.data()) x = rng.uniform() < p ? 0.0 : keep;
  return mask;
}

}  // namespace presup
