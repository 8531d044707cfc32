#include <doctest.h>

#include <cmath>
#include <fstream>
#include <random>

#include "forged/nn/adam.hpp"
#include "forged/nn/checkpoint.hpp"
#include "forged/nn/train.hpp"
#include "forged/parallel.hpp"
#include "test_util.hpp"

using namespace forged;
using namespace forged::nn;

namespace {

// Class HC lights up the top rows, PD the bottom rows, plus noise.
std::vector<ForgedImage> toy_images(std::size_t per_class, std::size_t size, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<float> u(0.0f, 0.4f);
  std::vector<ForgedImage> out;
  for (std::size_t i = 0; i < 2 * per_class; ++i) {
    ForgedImage img;
    img.height = img.width = size;
    img.label = i % 2 ? ClassLabel::PD : ClassLabel::HC;
    img.subject_id = "T";
    img.epoch_index = i;
    img.planes.resize(3 * size * size);
    for (std::size_t p = 0; p < 3; ++p)
      for (std::size_t r = 0; r < size; ++r)
        for (std::size_t c = 0; c < size; ++c) {
          const bool lit = img.label == ClassLabel::HC ? r < size / 3 : r >= 2 * size / 3;
          img.planes[(p * size + r) * size + c] = u(rng) + (lit ? 0.6f : 0.0f);
        }
    out.push_back(std::move(img));
  }
  return out;
}

ImageRefs refs(const std::vector<ForgedImage>& v) {
  ImageRefs r;
  for (const auto& i : v) r.push_back(&i);
  return r;
}

}  // namespace

TEST_CASE("Adam matches a scalar reference including bias correction and L2") {
  Params<double> p(1);
  p[0].weight = {0.5, -1.0};
  p[0].bias = {0.25};
  AdamHyper h{0.01, 0.9, 0.999, 1e-8};
  AdamState<double> st(p, h);
  const double l2 = 0.1;
  const std::vector<std::vector<double>> gs{{0.2, -0.3, 1.0}, {0.1, 0.4, -2.0}, {-0.5, 0.0, 0.5}};

  double w[3] = {0.5, -1.0, 0.25}, m[3] = {}, v[3] = {};
  for (int step = 1; step <= 3; ++step) {
    const auto& g = gs[step - 1];
    Params<double> grads(1);
    grads[0].weight = {g[0], g[1]};
    grads[0].bias = {g[2]};
    adam_step(p, grads, st, l2);
    for (int i = 0; i < 3; ++i) {
      const double gi = g[i] + (i < 2 ? l2 * w[i] : 0.0);
      m[i] = 0.9 * m[i] + 0.1 * gi;
      v[i] = 0.999 * v[i] + 0.001 * gi * gi;
      const double mh = m[i] / (1 - std::pow(0.9, step)), vh = v[i] / (1 - std::pow(0.999, step));
      w[i] -= 0.01 * mh / (std::sqrt(vh) + 1e-8);
    }
    CHECK(p[0].weight[0] == doctest::Approx(w[0]).epsilon(1e-14));
    CHECK(p[0].weight[1] == doctest::Approx(w[1]).epsilon(1e-14));
    CHECK(p[0].bias[0] == doctest::Approx(w[2]).epsilon(1e-14));
  }
  CHECK(st.step == 3);
  // First step moves every parameter by about lr regardless of gradient scale.
  Params<double> q(1);
  q[0].weight = {0.0};
  AdamState<double> s2(q, h);
  Params<double> g(1);
  g[0].weight = {1e-6};
  adam_step(q, g, s2, 0.0);
  CHECK(q[0].weight[0] == doctest::Approx(-0.01).epsilon(1e-3));
}

TEST_CASE("a minibatch gradient equals the sum of its chunk gradients") {
  const auto model = build_paper_cnn(3, 32, 32).cast<double>();
  const auto imgs = toy_images(6, 32, 1);
  const auto all = refs(imgs);
  auto as_double = [](const Tensor4<float>& t) { return tensor_cast<double>(t); };
  std::vector<int> labels;
  for (const auto* i : all) labels.push_back(to_index(i->label));

  ForwardCache<double> cache;
  const auto logits = model.forward_logits(as_double(to_tensor(all)), &cache);
  const auto full = model.backward(cache, softmax_ce<double>(logits, labels).grad);

  auto sum = zeros_like(model.params());
  for (std::size_t lo = 0; lo < all.size(); lo += 5) {
    const std::size_t hi = std::min(all.size(), lo + 5);
    std::span<const ForgedImage* const> part(all.data() + lo, hi - lo);
    ForwardCache<double> c;
    const auto lg = model.forward_logits(as_double(to_tensor(part)), &c);
    const std::span<const int> lb(labels.data() + lo, hi - lo);
    accumulate(sum, model.backward(c, softmax_ce_scaled<double>(lg, lb, double(all.size())).grad));
  }
  for (std::size_t l = 0; l < full.size(); ++l) {
    for (std::size_t k = 0; k < full[l].weight.size(); ++k) {
      REQUIRE(sum[l].weight[k] == doctest::Approx(full[l].weight[k]).epsilon(1e-10).scale(1e-12));
    }
  }
}

TEST_CASE("training learns a separable toy problem") {
  const auto imgs = toy_images(24, 32, 2);
  const auto all = refs(imgs);
  auto model = build_paper_cnn(7, 32, 32);
  TrainConfig cfg;
  cfg.lr = 1e-3;
  cfg.epochs = 12;
  cfg.batch_size = 8;
  cfg.l2_coeff = 1e-4;
  cfg.seed = 3;
  const auto hist = train(model, all, cfg);
  REQUIRE(hist.size() == 12);
  CHECK(hist.back().loss < hist.front().loss);
  const auto test_imgs = toy_images(10, 32, 99);
  const auto ev = evaluate(model, refs(test_imgs));
  CHECK(ev.accuracy >= 0.9);
  const auto pred = predict(model, refs(test_imgs));
  REQUIRE(pred.size() == ev.predictions.size());
  for (std::size_t i = 0; i < pred.size(); ++i) {
    CHECK(pred[i].label == ev.predictions[i].label);
    CHECK(pred[i].probabilities[0] + pred[i].probabilities[1] == doctest::Approx(1.0));
  }
}

TEST_CASE("training is reproducible and independent of the worker count") {
  const auto imgs = toy_images(10, 32, 4);
  const auto all = refs(imgs);
  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.batch_size = 12;
  cfg.seed = 9;
  auto run = [&](std::size_t threads) {
    auto m = build_paper_cnn(1, 32, 32);
    auto c = cfg;
    c.threads = threads;
    const auto h = train(m, all, c);
    return std::pair{m.params(), h.back().loss};
  };
  const auto a = run(1), b = run(1), c = run(3);
  for (std::size_t l = 0; l < a.first.size(); ++l) {
    CHECK(a.first[l].weight == b.first[l].weight);
    CHECK(a.first[l].weight == c.first[l].weight);
    CHECK(a.first[l].bias == c.first[l].bias);
  }
  CHECK(a.second == c.second);
  cfg.seed = 10;
  auto m = build_paper_cnn(1, 32, 32);
  train(m, all, cfg);
  CHECK(m.params()[0].weight != a.first[0].weight);
}

TEST_CASE("training configuration is validated") {
  const auto imgs = toy_images(2, 32, 5);
  auto m = build_paper_cnn(1, 32, 32);
  TrainConfig cfg;
  cfg.batch_size = 0;
  CHECK_THROWS_AS(train(m, refs(imgs), cfg), Error);
  CHECK_THROWS_AS(train(m, ImageRefs{}, TrainConfig{}), Error);
  auto odd = imgs;
  odd[1].height = 16;
  CHECK_THROWS_AS(to_tensor(refs(odd)), Error);
}

TEST_CASE("checkpoints round trip bit for bit") {
  testutil::TempDir dir("ckpt");
  const auto m = build_paper_cnn(12, 64, 64);
  save_checkpoint(m, dir / "m.frgcnn");
  const auto back = load_checkpoint(dir / "m.frgcnn");
  CHECK(back.input_shape() == m.input_shape());
  CHECK(back.shape_chain() == m.shape_chain());
  REQUIRE(back.params().size() == m.params().size());
  for (std::size_t l = 0; l < m.params().size(); ++l) {
    CHECK(back.params()[l].weight == m.params()[l].weight);
    CHECK(back.params()[l].bias == m.params()[l].bias);
  }
  CHECK(std::filesystem::file_size(dir / "m.frgcnn") == 8 + 16 + 17 * 16 + 4 * m.param_count());

  std::ofstream(dir / "m.frgcnn", std::ios::app | std::ios::binary) << 'x';
  CHECK_THROWS_AS(load_checkpoint(dir / "m.frgcnn"), Error);
  std::ofstream(dir / "bad.frgcnn", std::ios::binary) << "NOPE0000";
  CHECK_THROWS_AS(load_checkpoint(dir / "bad.frgcnn"), Error);
}
