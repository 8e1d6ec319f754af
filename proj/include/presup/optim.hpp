#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "presup/param_store.hpp"
#include "presup/rng.hpp"
#include "presup/tensor.hpp"

namespace presup {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  AdamConfig config;
  std::map<std::string, Tensor> m;
  std::map<std::string, Tensor> v;
  std::uint64_t step = 0;
};

// One bias-corrected Adam update of every trainable parameter:
//   p -= lr * m_hat / (sqrt(v_hat) + eps)
// Throws UsageError if a trainable parameter has no gradient entry.
void adam_step(ParamStore& params, const Gradients& grads, AdamState& state);

// Elementwise clamp into [lo, hi].
void clip_gradients(Tensor& grad, double lo = -1.0, double hi = 1.0);
void clip_gradients(Gradients& grads, double lo = -1.0, double hi = 1.0);

// Inverted dropout: each entry is 0 with probability p, else 1/(1-p).
Tensor dropout_mask(const Shape& shape, double p, Rng& rng);

}  // namespace presup
