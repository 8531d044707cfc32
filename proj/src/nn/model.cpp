#include "forged/nn/model.hpp"

#include <cmath>
#include <random>

namespace forged::nn {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

Shape3 output_shape(const LayerSpec& spec, Shape3 in, std::size_t index) {
  auto fail = [&](const std::string& why) -> Shape3 {
    throw Error(ErrorCode::ShapeMismatch, fmt::format("layer {} ({}): {}", index + 1, layer_name(spec), why));
  };
  return std::visit(
      overloaded{
          [&](const layer::Conv2d& c) -> Shape3 {
            if (c.in_ch != in.channels) return fail(fmt::format("expects {} channels, got {}", c.in_ch, in.channels));
            if (in.height < kKernel || in.width < kKernel || c.stride == 0) return fail("input smaller than kernel");
            return {c.out_ch, (in.height - kKernel) / c.stride + 1, (in.width - kKernel) / c.stride + 1};
          },
          [&](const layer::ReLU&) { return in; },
          [&](const layer::MaxPool2d&) -> Shape3 {
            if (in.height < 2 || in.width < 2) return fail("input smaller than 2x2");
            return {in.channels, in.height / 2, in.width / 2};
          },
          [&](const layer::Flatten&) { return Shape3{in.size(), 1, 1}; },
          [&](const layer::FullyConnected& f) -> Shape3 {
            if (f.in != in.size()) return fail(fmt::format("expects {} inputs, got {}", f.in, in.size()));
            return {f.out, 1, 1};
          },
          [&](const layer::Softmax&) { return in; },
      },
      spec);
}

}  // namespace

std::string layer_name(const LayerSpec& spec) {
  return std::visit(overloaded{
                        [](const layer::Conv2d&) { return std::string("Conv2d"); },
                        [](const layer::ReLU&) { return std::string("ReLU"); },
                        [](const layer::MaxPool2d&) { return std::string("MaxPool2d"); },
                        [](const layer::Flatten&) { return std::string("Flatten"); },
                        [](const layer::FullyConnected&) { return std::string("FC"); },
                        [](const layer::Softmax&) { return std::string("Softmax"); },
                    },
                    spec);
}

template <typename T>
BasicCnn<T>::BasicCnn(std::vector<LayerSpec> layers, Shape3 input) : layers_(std::move(layers)), input_(input) {
  if (layers_.empty()) throw Error(ErrorCode::ShapeMismatch, "model has no layers");
  Shape3 s = input_;
  params_.resize(layers_.size());
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    s = output_shape(layers_[i], s, i);
    shapes_.push_back(s);
    if (const auto* c = std::get_if<layer::Conv2d>(&layers_[i])) {
      params_[i].weight.assign(c->out_ch * c->in_ch * kKernel * kKernel, T{});
      params_[i].bias.assign(c->out_ch, T{});
    } else if (const auto* f = std::get_if<layer::FullyConnected>(&layers_[i])) {
      params_[i].weight.assign(f->out * f->in, T{});
      params_[i].bias.assign(f->out, T{});
    } else if (std::holds_alternative<layer::Softmax>(layers_[i]) && i + 1 != layers_.size()) {
      throw Error(ErrorCode::ShapeMismatch, "Softmax is only supported as the last layer");
    }
  }
}

template <typename T>
void BasicCnn<T>::init_he_normal(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    std::size_t fan_in = 0;
    if (const auto* c = std::get_if<layer::Conv2d>(&layers_[i])) fan_in = c->in_ch * kKernel * kKernel;
    if (const auto* f = std::get_if<layer::FullyConnected>(&layers_[i])) fan_in = f->in;
    if (fan_in == 0) continue;
    const double sd = std::sqrt(2.0 / static_cast<double>(fan_in));
    for (auto& w : params_[i].weight) w = static_cast<T>(sd * gauss(rng));
    std::fill(params_[i].bias.begin(), params_[i].bias.end(), T{});
  }
}

template <typename T>
std::vector<std::size_t> BasicCnn<T>::layer_param_counts() const {
  std::vector<std::size_t> counts;
  for (const auto& p : params_) counts.push_back(p.size());
  return counts;
}

template <typename T>
std::size_t BasicCnn<T>::param_count() const {
  std::size_t total = 0;
  for (const auto& p : params_) total += p.size();
  return total;
}

template <typename T>
Tensor4<T> BasicCnn<T>::forward_logits(const Tensor4<T>& x, ForwardCache<T>* cache) const {
  if (x.item_shape() != input_) {
    throw Error(ErrorCode::ShapeMismatch, fmt::format("input {}x{}x{} does not match model input {}x{}x{}", x.c, x.h,
                                                      x.w, input_.channels, input_.height, input_.width));
  }
  if (cache) {
    cache->inputs.assign(layers_.size(), {});
    cache->argmax.assign(layers_.size(), {});
  }
  Tensor4<T> cur = x;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    if (std::holds_alternative<layer::Softmax>(layers_[i])) break;
    const auto& p = params_[i];
    Tensor4<T> next;
    std::vector<std::size_t> argmax;
    std::visit(overloaded{
                   [&](const layer::Conv2d& c) {
                     next = conv2d_forward<T>(cur, p.weight, p.bias, c.out_ch, c.stride);
                   },
                   [&](const layer::ReLU&) { next = relu_forward(cur); },
                   [&](const layer::MaxPool2d&) {
                     auto r = maxpool_forward(cur);
                     next = std::move(r.y);
                     argmax = std::move(r.argmax);
                   },
                   [&](const layer::Flatten&) {
                     next = cur;
                     next.c = cur.item_size();
                     next.h = next.w = 1;
                   },
                   [&](const layer::FullyConnected& f) { next = fc_forward<T>(cur, p.weight, p.bias, f.out); },
                   [&](const layer::Softmax&) {},
               },
               layers_[i]);
    if (cache) {
      cache->inputs[i] = std::move(cur);
      cache->argmax[i] = std::move(argmax);
    }
    cur = std::move(next);
  }
  return cur;
}

template <typename T>
Tensor4<T> BasicCnn<T>::forward(const Tensor4<T>& x) const {
  auto logits = forward_logits(x);
  if (std::holds_alternative<layer::Softmax>(layers_.back())) return softmax(logits);
  return logits;
}

template <typename T>
Params<T> BasicCnn<T>::backward(const ForwardCache<T>& cache, const Tensor4<T>& grad_logits) const {
  if (cache.inputs.size() != layers_.size()) throw Error(ErrorCode::ShapeMismatch, "cache from a different model");
  Params<T> grads = zeros_like(params_);
  Tensor4<T> grad = grad_logits;
  std::size_t last = layers_.size();
  if (std::holds_alternative<layer::Softmax>(layers_.back())) --last;
  for (std::size_t i = last; i-- > 0;) {
    const auto& x = cache.inputs[i];
    const bool need_x = i > 0;
    std::visit(overloaded{
                   [&](const layer::Conv2d& c) {
                     auto g = conv2d_backward<T>(x, params_[i].weight, grad, c.stride, need_x);
                     grads[i].weight = std::move(g.grad_w);
                     grads[i].bias = std::move(g.grad_b);
                     grad = std::move(g.grad_x);
                   },
                   [&](const layer::ReLU&) { grad = relu_backward(x, grad); },
                   [&](const layer::MaxPool2d&) { grad = maxpool_backward<T>(grad, cache.argmax[i], x); },
                   [&](const layer::Flatten&) {
                     grad.c = x.c;
                     grad.h = x.h;
                     grad.w = x.w;
                   },
                   [&](const layer::FullyConnected&) {
                     auto g = fc_backward<T>(x, params_[i].weight, grad, need_x);
                     grads[i].weight = std::move(g.grad_w);
                     grads[i].bias = std::move(g.grad_b);
                     grad = std::move(g.grad_x);
                   },
                   [&](const layer::Softmax&) {},
               },
               layers_[i]);
  }
  return grads;
}

template class BasicCnn<float>;
template class BasicCnn<double>;

std::vector<LayerSpec> paper_cnn_layers(std::size_t input_height, std::size_t input_width) {
  auto conv = [](std::size_t v, std::size_t stride) {
    if (v < kKernel) throw Error(ErrorCode::ShapeMismatch, "input too small for this CNN");
    return (v - kKernel) / stride + 1;
  };
  auto pool = [](std::size_t v) {
    if (v < 2) throw Error(ErrorCode::ShapeMismatch, "input too small for this CNN");
    return v / 2;
  };
  auto side = [&](std::size_t v) { return conv(pool(conv(conv(pool(conv(v, 1)), 1), 2)), 2); };
  const std::size_t flat = 96 * side(input_height) * side(input_width);
  return {
      layer::Conv2d{3, 8, 1},   layer::ReLU{}, layer::MaxPool2d{},
      layer::Conv2d{8, 16, 1},  layer::ReLU{},
      layer::Conv2d{16, 32, 2}, layer::ReLU{}, layer::MaxPool2d{},
      layer::Conv2d{32, 96, 2}, layer::ReLU{},
      layer::Flatten{},
      layer::FullyConnected{flat, 50}, layer::ReLU{},
      layer::FullyConnected{50, 32},   layer::ReLU{},
      layer::FullyConnected{32, 2},    layer::Softmax{},
  };
}

CnnModel build_paper_cnn(std::uint64_t seed, std::size_t input_height, std::size_t input_width) {
  CnnModel m(paper_cnn_layers(input_height, input_width), Shape3{3, input_height, input_width});
  m.init_he_normal(seed);
  return m;
}

}  // namespace forged::nn
