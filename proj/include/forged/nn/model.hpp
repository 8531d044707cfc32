#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "forged/nn/layers.hpp"
#include "forged/nn/tensor.hpp"

namespace forged::nn {

namespace layer {
struct Conv2d {
  std::size_t in_ch = 0, out_ch = 0, stride = 1;
};
struct ReLU {};
struct MaxPool2d {};
struct Flatten {};
struct FullyConnected {
  std::size_t in = 0, out = 0;
};
struct Softmax {};
}  // namespace layer

using LayerSpec =
    std::variant<layer::Conv2d, layer::ReLU, layer::MaxPool2d, layer::Flatten, layer::FullyConnected, layer::Softmax>;

std::string layer_name(const LayerSpec& spec);

template <typename T>
struct ParamSet {
  std::vector<T> weight;
  std::vector<T> bias;

  std::size_t size() const { return weight.size() + bias.size(); }
  bool empty() const { return weight.empty() && bias.empty(); }
};

template <typename T>
using Params = std::vector<ParamSet<T>>;  // one entry per layer, empty for parameter-free layers

// Per-layer inputs retained by forward for the backward pass.
template <typename T>
struct ForwardCache {
  std::vector<Tensor4<T>> inputs;
  std::vector<std::vector<std::size_t>> argmax;
};

template <typename T>
class BasicCnn {
 public:
  BasicCnn() = default;

  // Validates the shape chain and zero-initializes parameters.
  BasicCnn(std::vector<LayerSpec> layers, Shape3 input);

  // He-normal weights (std = sqrt(2 / fan_in)), zero biases.
  void init_he_normal(std::uint64_t seed);

  const std::vector<LayerSpec>& layers() const { return layers_; }
  Shape3 input_shape() const { return input_; }
  // Output shape of every layer, in order.
  const std::vector<Shape3>& shape_chain() const { return shapes_; }
  std::size_t n_classes() const { return shapes_.back().size(); }

  Params<T>& params() { return params_; }
  const Params<T>& params() const { return params_; }
  std::vector<std::size_t> layer_param_counts() const;
  std::size_t param_count() const;

  // Runs every layer except a trailing Softmax. cache may be null.
  Tensor4<T> forward_logits(const Tensor4<T>& x, ForwardCache<T>* cache = nullptr) const;
  // Full chain including Softmax: class probabilities.
  Tensor4<T> forward(const Tensor4<T>& x) const;
  // Gradients of the loss w.r.t. every parameter, given d(loss)/d(logits).
  Params<T> backward(const ForwardCache<T>& cache, const Tensor4<T>& grad_logits) const;

  template <typename U>
  BasicCnn<U> cast() const {
    BasicCnn<U> out(layers_, input_);
    for (std::size_t l = 0; l < params_.size(); ++l) {
      out.params()[l].weight.assign(params_[l].weight.begin(), params_[l].weight.end());
      out.params()[l].bias.assign(params_[l].bias.begin(), params_[l].bias.end());
    }
    return out;
  }

 private:
  std::vector<LayerSpec> layers_;
  Shape3 input_;
  std::vector<Shape3> shapes_;
  Params<T> params_;
};

using CnnModel = BasicCnn<float>;

// Zero-filled accumulator shaped like the model's parameters.
template <typename T>
Params<T> zeros_like(const Params<T>& p) {
  Params<T> z(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    z[i].weight.assign(p[i].weight.size(), T{});
    z[i].bias.assign(p[i].bias.size(), T{});
  }
  return z;
}

template <typename T>
void accumulate(Params<T>& into, const Params<T>& from) {
  for (std::size_t i = 0; i < into.size(); ++i) {
    for (std::size_t k = 0; k < into[i].weight.size(); ++k) into[i].weight[k] += from[i].weight[k];
    for (std::size_t k = 0; k < into[i].bias.size(); ++k) into[i].bias[k] += from[i].bias[k];
  }
}

// Conv(3->8,s1) ReLU MaxPool Conv(8->16,s1) ReLU Conv(16->32,s2) ReLU MaxPool
// Conv(32->96,s2) ReLU Flatten FC(->50) ReLU FC(50->32) ReLU FC(32->2) Softmax.
// The first FC layer's width follows from the input size: 96*15*15 = 21600 at
// 256x256.
std::vector<LayerSpec> paper_cnn_layers(std::size_t input_height = 256, std::size_t input_width = 256);
CnnModel build_paper_cnn(std::uint64_t seed, std::size_t input_height = 256, std::size_t input_width = 256);

}  // namespace forged::nn
