#include "forged/nn/adam.hpp"

#include <cmath>

namespace forged::nn {

namespace {

template <typename T>
void update(std::vector<T>& p, const std::vector<T>& g, std::vector<T>& m, std::vector<T>& v, const AdamHyper& h,
            double l2, double c1, double c2) {
  if (g.size() != p.size() || m.size() != p.size() || v.size() != p.size()) {
    throw Error(ErrorCode::ShapeMismatch, "adam: gradient or moment size differs from parameter size");
  }
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double grad = static_cast<double>(g[i]) + l2 * static_cast<double>(p[i]);
    const double mi = h.beta1 * static_cast<double>(m[i]) + (1.0 - h.beta1) * grad;
    const double vi = h.beta2 * static_cast<double>(v[i]) + (1.0 - h.beta2) * grad * grad;
    m[i] = static_cast<T>(mi);
    v[i] = static_cast<T>(vi);
    const double m_hat = mi / c1;
    const double v_hat = vi / c2;
    p[i] = static_cast<T>(static_cast<double>(p[i]) - h.lr * m_hat / (std::sqrt(v_hat) + h.eps));
  }
}

}  // namespace

template <typename T>
void adam_step(Params<T>& params, const Params<T>& grads, AdamState<T>& state, double l2_coeff) {
  if (grads.size() != params.size() || state.m.size() != params.size() || state.v.size() != params.size()) {
    throw Error(ErrorCode::ShapeMismatch, "adam: layer count mismatch");
  }
  ++state.step;
  const double c1 = 1.0 - std::pow(state.hyper.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(state.hyper.beta2, static_cast<double>(state.step));
  for (std::size_t l = 0; l < params.size(); ++l) {
    update(params[l].weight, grads[l].weight, state.m[l].weight, state.v[l].weight, state.hyper, l2_coeff, c1, c2);
    update(params[l].bias, grads[l].bias, state.m[l].bias, state.v[l].bias, state.hyper, 0.0, c1, c2);
  }
}

template void adam_step(Params<float>&, const Params<float>&, AdamState<float>&, double);
template void adam_step(Params<double>&, const Params<double>&, AdamState<double>&, double);

}  // namespace forged::nn
