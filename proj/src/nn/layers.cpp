#include "forged/nn/layers.hpp"

#include <algorithm>
#include <cmath>

namespace forged::nn {

namespace {

std::size_t conv_out(std::size_t in, std::size_t stride) { return (in - kKernel) / stride + 1; }

[[noreturn]] void shape_error(const std::string& what) { throw Error(ErrorCode::ShapeMismatch, what); }

// Dot product with eight interleaved accumulators; vectorizes without
// reassociation flags and keeps a fixed summation order.
template <typename T>
T dot(const T* a, const T* b, std::size_t n) {
  T acc[8] = {};
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8)
    for (std::size_t l = 0; l < 8; ++l) acc[l] += a[i + l] * b[i + l];
  T tail{};
  for (; i < n; ++i) tail += a[i] * b[i];
  return ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7])) + tail;
}

}  // namespace

template <typename T>
Tensor4<T> conv2d_forward(const Tensor4<T>& x, std::span<const T> weight, std::span<const T> bias,
                          std::size_t out_ch, std::size_t stride) {
  if (stride == 0) shape_error("conv stride must be positive");
  if (x.h < kKernel || x.w < kKernel) shape_error(fmt::format("conv input {}x{} smaller than kernel", x.h, x.w));
  if (weight.size() != out_ch * x.c * kKernel * kKernel || bias.size() != out_ch) {
    shape_error(fmt::format("conv weights sized {} / bias {} for {} -> {} channels", weight.size(), bias.size(),
                            x.c, out_ch));
  }
  const std::size_t oh = conv_out(x.h, stride), ow = conv_out(x.w, stride);
  Tensor4<T> y(x.n, out_ch, oh, ow);
  for (std::size_t n = 0; n < x.n; ++n) {
    for (std::size_t oc = 0; oc < out_ch; ++oc) {
      T* out = y.data.data() + ((n * out_ch + oc) * oh) * ow;
      std::fill(out, out + oh * ow, bias[oc]);
      for (std::size_t ic = 0; ic < x.c; ++ic) {
        const T* in = x.data.data() + ((n * x.c + ic) * x.h) * x.w;
        const T* wk = weight.data() + (oc * x.c + ic) * kKernel * kKernel;
        for (std::size_t kh = 0; kh < kKernel; ++kh) {
          for (std::size_t kw = 0; kw < kKernel; ++kw) {
            const T wv = wk[kh * kKernel + kw];
            for (std::size_t oy = 0; oy < oh; ++oy) {
              const T* src = in + (oy * stride + kh) * x.w + kw;
              T* dst = out + oy * ow;
              if (stride == 1) {
                for (std::size_t ox = 0; ox < ow; ++ox) dst[ox] += wv * src[ox];
              } else {
                for (std::size_t ox = 0; ox < ow; ++ox) dst[ox] += wv * src[ox * stride];
              }
            }
          }
        }
      }
    }
  }
  return y;
}

template <typename T>
ConvGrads<T> conv2d_backward(const Tensor4<T>& x, std::span<const T> weight, const Tensor4<T>& grad_out,
                             std::size_t stride, bool need_grad_x) {
  const std::size_t out_ch = grad_out.c;
  if (stride == 0 || x.h < kKernel || x.w < kKernel) shape_error("conv backward: bad input geometry");
  const std::size_t oh = conv_out(x.h, stride), ow = conv_out(x.w, stride);
  if (grad_out.n != x.n || grad_out.h != oh || grad_out.w != ow || weight.size() != out_ch * x.c * kKernel * kKernel) {
    shape_error("conv backward: grad_out does not match the forward shapes");
  }
  ConvGrads<T> g;
  std::vector<T> partial(ow);
  g.grad_w.assign(weight.size(), T{});
  g.grad_b.assign(out_ch, T{});
  if (need_grad_x) g.grad_x = Tensor4<T>(x.n, x.c, x.h, x.w);

  for (std::size_t n = 0; n < x.n; ++n) {
    for (std::size_t oc = 0; oc < out_ch; ++oc) {
      const T* go = grad_out.data.data() + ((n * out_ch + oc) * oh) * ow;
      T bsum{};
      for (std::size_t i = 0; i < oh * ow; ++i) bsum += go[i];
      g.grad_b[oc] += bsum;
      for (std::size_t ic = 0; ic < x.c; ++ic) {
        const T* in = x.data.data() + ((n * x.c + ic) * x.h) * x.w;
        T* gin = need_grad_x ? g.grad_x.data.data() + ((n * x.c + ic) * x.h) * x.w : nullptr;
        const std::size_t wbase = (oc * x.c + ic) * kKernel * kKernel;
        for (std::size_t kh = 0; kh < kKernel; ++kh) {
          for (std::size_t kw = 0; kw < kKernel; ++kw) {
            const T wv = weight[wbase + kh * kKernel + kw];
            std::fill(partial.begin(), partial.end(), T{});
            for (std::size_t oy = 0; oy < oh; ++oy) {
              const T* src = in + (oy * stride + kh) * x.w + kw;
              const T* gorow = go + oy * ow;
              if (stride == 1) {
                for (std::size_t ox = 0; ox < ow; ++ox) partial[ox] += gorow[ox] * src[ox];
              } else {
                for (std::size_t ox = 0; ox < ow; ++ox) partial[ox] += gorow[ox] * src[ox * stride];
              }
              if (gin) {
                T* dst = gin + (oy * stride + kh) * x.w + kw;
                if (stride == 1) {
                  for (std::size_t ox = 0; ox < ow; ++ox) dst[ox] += wv * gorow[ox];
                } else {
                  for (std::size_t ox = 0; ox < ow; ++ox) dst[ox * stride] += wv * gorow[ox];
                }
              }
            }
            T acc{};
            for (std::size_t ox = 0; ox < ow; ++ox) acc += partial[ox];
            g.grad_w[wbase + kh * kKernel + kw] += acc;
          }
        }
      }
    }
  }
  return g;
}

template <typename T>
PoolResult<T> maxpool_forward(const Tensor4<T>& x) {
  if (x.h < 2 || x.w < 2) shape_error(fmt::format("maxpool input {}x{} smaller than 2x2", x.h, x.w));
  const std::size_t oh = x.h / 2, ow = x.w / 2;
  PoolResult<T> r;
  r.y = Tensor4<T>(x.n, x.c, oh, ow);
  r.argmax.resize(r.y.data.size());
  std::size_t o = 0;
  for (std::size_t plane = 0; plane < x.n * x.c; ++plane) {
    const std::size_t base = plane * x.h * x.w;
    for (std::size_t oy = 0; oy < oh; ++oy) {
      for (std::size_t ox = 0; ox < ow; ++ox, ++o) {
        std::size_t best = base + (2 * oy) * x.w + 2 * ox;
        for (std::size_t dy = 0; dy < 2; ++dy) {
          for (std::size_t dx = 0; dx < 2; ++dx) {
            const std::size_t idx = base + (2 * oy + dy) * x.w + 2 * ox + dx;
            if (x.data[idx] > x.data[best]) best = idx;
          }
        }
        r.y.data[o] = x.data[best];
        r.argmax[o] = best;
      }
    }
  }
  return r;
}

template <typename T>
Tensor4<T> maxpool_backward(const Tensor4<T>& grad_out, std::span<const std::size_t> argmax, const Tensor4<T>& x) {
  if (argmax.size() != grad_out.data.size() || grad_out.n != x.n || grad_out.c != x.c || grad_out.h != x.h / 2 ||
      grad_out.w != x.w / 2) {
    shape_error("maxpool backward: shapes do not match the forward pass");
  }
  Tensor4<T> gx(x.n, x.c, x.h, x.w);
  for (std::size_t i = 0; i < argmax.size(); ++i) gx.data[argmax[i]] += grad_out.data[i];
  return gx;
}

template <typename T>
Tensor4<T> relu_forward(const Tensor4<T>& x) {
  Tensor4<T> y = x;
  for (auto& v : y.data) v = v > T{} ? v : T{};
  return y;
}

template <typename T>
Tensor4<T> relu_backward(const Tensor4<T>& x, const Tensor4<T>& grad_out) {
  if (!x.same_shape(grad_out)) shape_error("relu backward: shape mismatch");
  Tensor4<T> g = grad_out;
  for (std::size_t i = 0; i < g.data.size(); ++i)
    if (!(x.data[i] > T{})) g.data[i] = T{};
  return g;
}

template <typename T>
Tensor4<T> fc_forward(const Tensor4<T>& x, std::span<const T> weight, std::span<const T> bias, std::size_t out) {
  const std::size_t in = x.item_size();
  if (weight.size() != out * in || bias.size() != out) {
    shape_error(fmt::format("fc weights sized {} / bias {} for {} -> {}", weight.size(), bias.size(), in, out));
  }
  Tensor4<T> y(x.n, out, 1, 1);
  for (std::size_t n = 0; n < x.n; ++n) {
    const T* xi = x.item(n);
    for (std::size_t o = 0; o < out; ++o) {
      y.data[n * out + o] = dot(weight.data() + o * in, xi, in) + bias[o];
    }
  }
  return y;
}

template <typename T>
FcGrads<T> fc_backward(const Tensor4<T>& x, std::span<const T> weight, const Tensor4<T>& grad_out,
                       bool need_grad_x) {
  const std::size_t in = x.item_size();
  const std::size_t out = grad_out.item_size();
  if (grad_out.n != x.n || weight.size() != out * in) shape_error("fc backward: shape mismatch");
  FcGrads<T> g;
  g.grad_w.assign(out * in, T{});
  g.grad_b.assign(out, T{});
  if (need_grad_x) g.grad_x = Tensor4<T>(x.n, x.c, x.h, x.w);
  for (std::size_t n = 0; n < x.n; ++n) {
    const T* xi = x.item(n);
    const T* go = grad_out.item(n);
    T* gx = need_grad_x ? g.grad_x.item(n) : nullptr;
    for (std::size_t o = 0; o < out; ++o) {
      const T gv = go[o];
      g.grad_b[o] += gv;
      T* gw = g.grad_w.data() + o * in;
      const T* wr = weight.data() + o * in;
      for (std::size_t i = 0; i < in; ++i) gw[i] += gv * xi[i];
      if (gx)
        for (std::size_t i = 0; i < in; ++i) gx[i] += wr[i] * gv;
    }
  }
  return g;
}

template <typename T>
Tensor4<T> softmax(const Tensor4<T>& logits) {
  Tensor4<T> p = logits;
  const std::size_t k = logits.item_size();
  for (std::size_t n = 0; n < logits.n; ++n) {
    T* row = p.item(n);
    const T mx = *std::max_element(row, row + k);
    double sum = 0.0;
    for (std::size_t j = 0; j < k; ++j) sum += std::exp(static_cast<double>(row[j] - mx));
    for (std::size_t j = 0; j < k; ++j) row[j] = static_cast<T>(std::exp(static_cast<double>(row[j] - mx)) / sum);
  }
  return p;
}

template <typename T>
LossResult<T> softmax_ce_scaled(const Tensor4<T>& logits, std::span<const int> labels, double normalizer) {
  const std::size_t k = logits.item_size();
  if (labels.size() != logits.n) shape_error("softmax_ce: one label per row required");
  LossResult<T> r;
  r.grad = Tensor4<T>(logits.n, logits.c, logits.h, logits.w);
  double total = 0.0;
  for (std::size_t n = 0; n < logits.n; ++n) {
    const int label = labels[n];
    if (label < 0 || static_cast<std::size_t>(label) >= k) {
      throw Error(ErrorCode::BadLabel, fmt::format("label {} outside [0, {})", label, k));
    }
    const T* row = logits.item(n);
    double mx = row[0];
    for (std::size_t j = 1; j < k; ++j) mx = std::max(mx, static_cast<double>(row[j]));
    double sum = 0.0;
    for (std::size_t j = 0; j < k; ++j) sum += std::exp(static_cast<double>(row[j]) - mx);
    const double lse = mx + std::log(sum);
    total += lse - static_cast<double>(row[label]);
    T* g = r.grad.item(n);
    for (std::size_t j = 0; j < k; ++j) {
      const double p = std::exp(static_cast<double>(row[j]) - lse);
      g[j] = static_cast<T>((p - (static_cast<std::size_t>(label) == j ? 1.0 : 0.0)) / normalizer);
    }
  }
  r.loss = total / normalizer;
  return r;
}

template <typename T>
LossResult<T> softmax_ce(const Tensor4<T>& logits, std::span<const int> labels) {
  if (logits.n == 0) throw Error(ErrorCode::Empty, "softmax_ce on an empty batch");
  return softmax_ce_scaled(logits, labels, static_cast<double>(logits.n));
}

#define FORGED_INSTANTIATE(T)                                                                                  \
  template Tensor4<T> conv2d_forward(const Tensor4<T>&, std::span<const T>, std::span<const T>, std::size_t,    \
                                     std::size_t);                                                             \
  template ConvGrads<T> conv2d_backward(const Tensor4<T>&, std::span<const T>, const Tensor4<T>&, std::size_t, \
                                        bool);                                                                 \
  template PoolResult<T> maxpool_forward(const Tensor4<T>&);                                                   \
  template Tensor4<T> maxpool_backward(const Tensor4<T>&, std::span<const std::size_t>, const Tensor4<T>&);    \
  template Tensor4<T> relu_forward(const Tensor4<T>&);                                                         \
  template Tensor4<T> relu_backward(const Tensor4<T>&, const Tensor4<T>&);                                     \
  template Tensor4<T> fc_forward(const Tensor4<T>&, std::span<const T>, std::span<const T>, std::size_t);      \
  template FcGrads<T> fc_backward(const Tensor4<T>&, std::span<const T>, const Tensor4<T>&, bool);              \
  template Tensor4<T> softmax(const Tensor4<T>&);                                                              \
  template LossResult<T> softmax_ce_scaled(const Tensor4<T>&, std::span<const int>, double);                   \
  template LossResult<T> softmax_ce(const Tensor4<T>&, std::span<const int>);

FORGED_INSTANTIATE(float)
FORGED_INSTANTIATE(double)

#undef FORGED_INSTANTIATE

}  // namespace forged::nn
