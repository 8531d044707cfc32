#pragma once

#include <span>
#include <vector>

#include "forged/nn/tensor.hpp"

namespace forged::nn {

inline constexpr std::size_t kKernel = 3;

// Valid 3x3 cross-correlation. weight is out_ch x in_ch x 3 x 3.
template <typename T>
Tensor4<T> conv2d_forward(const Tensor4<T>& x, std::span<const T> weight, std::span<const T> bias,
                          std::size_t out_ch, std::size_t stride);

template <typename T>
struct ConvGrads {
  Tensor4<T> grad_x;  // empty when not requested
  std::vector<T> grad_w;
  std::vector<T> grad_b;
};

template <typename T>
ConvGrads<T> conv2d_backward(const Tensor4<T>& x, std::span<const T> weight, const Tensor4<T>& grad_out,
                             std::size_t stride, bool need_grad_x = true);

template <typename T>
struct PoolResult {
  Tensor4<T> y;
  std::vector<std::size_t> argmax;  // flat index into x per output element
};

// 2x2, stride 2, floor semantics; ties resolve to the first element in
// row-major window order.
template <typename T>
PoolResult<T> maxpool_forward(const Tensor4<T>& x);

template <typename T>
Tensor4<T> maxpool_backward(const Tensor4<T>& grad_out, std::span<const std::size_t> argmax, const Tensor4<T>& x);

template <typename T>
Tensor4<T> relu_forward(const Tensor4<T>& x);

// Derivative at exactly 0 is 0.
template <typename T>
Tensor4<T> relu_backward(const Tensor4<T>& x, const Tensor4<T>& grad_out);

// x is read as n x (c*h*w); weight is out x in, row-major. Output n x out x 1 x 1.
template <typename T>
Tensor4<T> fc_forward(const Tensor4<T>& x, std::span<const T> weight, std::span<const T> bias, std::size_t out);

template <typename T>
struct FcGrads {
  Tensor4<T> grad_x;
  std::vector<T> grad_w;
  std::vector<T> grad_b;
};

template <typename T>
FcGrads<T> fc_backward(const Tensor4<T>& x, std::span<const T> weight, const Tensor4<T>& grad_out,
                       bool need_grad_x = true);

template <typename T>
struct LossResult {
  double loss = 0.0;     // mean over the batch
  Tensor4<T> grad;       // d(loss)/d(logits)
};

// Row-wise softmax of an n x k logit tensor.
template <typename T>
Tensor4<T> softmax(const Tensor4<T>& logits);

// Cross-entropy on softmax(logits) using log-sum-exp. Labels are class
// indices. The gradient is (softmax - onehot) / batch.
template <typename T>
LossResult<T> softmax_ce(const Tensor4<T>& logits, std::span<const int> labels);

// Same, but both loss sum and gradient are divided by `normalizer` instead of
// the batch size; used to accumulate one minibatch in fixed-size chunks.
template <typename T>
LossResult<T> softmax_ce_scaled(const Tensor4<T>& logits, std::span<const int> labels, double normalizer);

}  // namespace forged::nn
