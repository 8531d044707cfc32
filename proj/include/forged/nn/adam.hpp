#pragma once

#include <cstdint>

#include "forged/nn/model.hpp"

namespace forged::nn {

struct AdamHyper {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

template <typename T>
struct AdamState {
  AdamHyper hyper;
  Params<T> m;
  Params<T> v;
  std::int64_t step = 0;

  AdamState() = default;
  AdamState(const Params<T>& like, AdamHyper h) : hyper(h), m(zeros_like(like)), v(zeros_like(like)) {}
};

// One bias-corrected Adam update. The L2 term l2_coeff * w is added to the
// gradient of weight tensors only; biases are not regularized.
template <typename T>
void adam_step(Params<T>& params, const Params<T>& grads, AdamState<T>& state, double l2_coeff);

}  // namespace forged::nn
