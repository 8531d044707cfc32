#pragma once

#include <cstddef>
#include <fmt/format.h>
#include <vector>

#include "forged/error.hpp"

namespace forged::nn {

struct Shape3 {
  std::size_t channels = 0;
  std::size_t height = 0;
  std::size_t width = 0;

  std::size_t size() const { return channels * height * width; }
  bool operator==(const Shape3&) const = default;
};

// NCHW, width innermost.
template <typename T>
struct Tensor4 {
  std::size_t n = 0, c = 0, h = 0, w = 0;
  std::vector<T> data;

  Tensor4() = default;
  Tensor4(std::size_t n_, std::size_t c_, std::size_t h_, std::size_t w_, T fill = T{})
      : n(n_), c(c_), h(h_), w(w_), data(n_ * c_ * h_ * w_, fill) {}

  std::size_t item_size() const { return c * h * w; }
  Shape3 item_shape() const { return {c, h, w}; }
  T* item(std::size_t i) { return data.data() + i * item_size(); }
  const T* item(std::size_t i) const { return data.data() + i * item_size(); }
  T& at(std::size_t i, std::size_t ch, std::size_t y, std::size_t x) { return data[((i * c + ch) * h + y) * w + x]; }
  T at(std::size_t i, std::size_t ch, std::size_t y, std::size_t x) const {
    return data[((i * c + ch) * h + y) * w + x];
  }
  bool same_shape(const Tensor4& o) const { return n == o.n && c == o.c && h == o.h && w == o.w; }
};

template <typename To, typename From>
Tensor4<To> tensor_cast(const Tensor4<From>& t) {
  Tensor4<To> out(t.n, t.c, t.h, t.w);
  for (std::size_t i = 0; i < t.data.size(); ++i) out.data[i] = static_cast<To>(t.data[i]);
  return out;
}

}  // namespace forged::nn
