#include "forged/nn/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "forged/parallel.hpp"

namespace forged::nn {

namespace {

constexpr std::size_t kChunk = 8;

struct ChunkResult {
  Params<float> grads;
  double loss_sum = 0.0;  // sum over the chunk's items of per-item cross entropy
  std::size_t correct = 0;
};

std::vector<int> labels_of(std::span<const ForgedImage* const> images) {
  std::vector<int> labels;
  labels.reserve(images.size());
  for (const auto* img : images) labels.push_back(to_index(img->label));
  return labels;
}

std::size_t count_correct(const Tensor4<float>& logits, std::span<const int> labels) {
  std::size_t correct = 0;
  for (std::size_t n = 0; n < logits.n; ++n) {
    const float* row = logits.item(n);
    const int guess = row[1] > row[0] ? 1 : 0;
    correct += guess == labels[n];
  }
  return correct;
}

}  // namespace

void TrainConfig::validate() const {
  if (!(lr >= 0) || epochs == 0 || batch_size == 0 || !(l2_coeff >= 0)) {
    throw Error(ErrorCode::BadConfig, "train config needs lr >= 0, epochs > 0, batch_size > 0, l2 >= 0");
  }
}

Tensor4<float> to_tensor(std::span<const ForgedImage* const> images) {
  if (images.empty()) throw Error(ErrorCode::EmptyDataset, "no images");
  const std::size_t h = images.front()->height, w = images.front()->width;
  Tensor4<float> t(images.size(), 3, h, w);
  for (std::size_t i = 0; i < images.size(); ++i) {
    const auto* img = images[i];
    if (img->height != h || img->width != w || img->planes.size() != 3 * h * w) {
      throw Error(ErrorCode::ShapeMismatch, fmt::format("image {} ({}) has a different size", i, img->subject_id));
    }
    std::copy(img->planes.begin(), img->planes.end(), t.item(i));
  }
  return t;
}

std::vector<EpochStats> train(CnnModel& model, std::span<const ForgedImage* const> images, const TrainConfig& cfg) {
  cfg.validate();
  if (images.empty()) throw Error(ErrorCode::EmptyDataset, "training set is empty");

  AdamHyper hyper;
  hyper.lr = cfg.lr;
  AdamState<float> state(model.params(), hyper);
  std::mt19937_64 rng(cfg.seed);
  std::vector<std::size_t> order(images.size());
  std::vector<EpochStats> history;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t i = order.size(); i-- > 1;) std::swap(order[i], order[rng() % (i + 1)]);

    double loss_total = 0.0;
    std::size_t correct_total = 0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t batch = std::min(cfg.batch_size, order.size() - start);
      const std::size_t n_chunks = (batch + kChunk - 1) / kChunk;
      std::vector<ChunkResult> chunks(n_chunks);
      parallel_for(
          n_chunks,
          [&](std::size_t c) {
            const std::size_t lo = start + c * kChunk;
            const std::size_t hi = std::min(start + batch, lo + kChunk);
            std::vector<const ForgedImage*> items;
            for (std::size_t k = lo; k < hi; ++k) items.push_back(images[order[k]]);
            const auto x = to_tensor(items);
            const auto labels = labels_of(items);
            ForwardCache<float> cache;
            const auto logits = model.forward_logits(x, &cache);
            auto loss = softmax_ce_scaled(logits, labels, static_cast<double>(batch));
            chunks[c].grads = model.backward(cache, loss.grad);
            chunks[c].loss_sum = loss.loss * static_cast<double>(batch);
            chunks[c].correct = count_correct(logits, labels);
          },
          cfg.threads);

      Params<float> grads = std::move(chunks[0].grads);
      double loss_sum = chunks[0].loss_sum;
      std::size_t correct = chunks[0].correct;
      for (std::size_t c = 1; c < n_chunks; ++c) {
        accumulate(grads, chunks[c].grads);
        loss_sum += chunks[c].loss_sum;
        correct += chunks[c].correct;
      }
      adam_step(model.params(), grads, state, cfg.l2_coeff);
      loss_total += loss_sum / static_cast<double>(batch);
      correct_total += correct;
      ++batches;
    }
    history.push_back({loss_total / static_cast<double>(batches),
                       static_cast<double>(correct_total) / static_cast<double>(images.size())});
  }
  return history;
}

Evaluation evaluate(const CnnModel& model, std::span<const ForgedImage* const> images, std::size_t threads) {
  if (images.empty()) throw Error(ErrorCode::EmptyDataset, "evaluation set is empty");
  const std::size_t n_chunks = (images.size() + kChunk - 1) / kChunk;
  std::vector<double> loss_sums(n_chunks);
  Evaluation ev;
  ev.predictions.resize(images.size());
  parallel_for(
      n_chunks,
      [&](std::size_t c) {
        const std::size_t lo = c * kChunk;
        const std::size_t hi = std::min(images.size(), lo + kChunk);
        const auto items = images.subspan(lo, hi - lo);
        const auto logits = model.forward_logits(to_tensor(items));
        const auto labels = labels_of(items);
        loss_sums[c] = softmax_ce_scaled(logits, labels, 1.0).loss;
        const auto probs = softmax(logits);
        for (std::size_t k = 0; k < items.size(); ++k) {
          auto& p = ev.predictions[lo + k];
          p.probabilities = {probs.item(k)[0], probs.item(k)[1]};
          p.label = p.probabilities[1] > p.probabilities[0] ? ClassLabel::PD : ClassLabel::HC;
        }
      },
      threads);
  double loss = 0.0;
  for (double v : loss_sums) loss += v;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < images.size(); ++i) correct += ev.predictions[i].label == images[i]->label;
  ev.loss = loss / static_cast<double>(images.size());
  ev.accuracy = static_cast<double>(correct) / static_cast<double>(images.size());
  return ev;
}

std::vector<Prediction> predict(const CnnModel& model, std::span<const ForgedImage* const> images,
                                std::size_t threads) {
  if (images.empty()) return {};
  const std::size_t n_chunks = (images.size() + kChunk - 1) / kChunk;
  std::vector<Prediction> out(images.size());
  parallel_for(
      n_chunks,
      [&](std::size_t c) {
        const std::size_t lo = c * kChunk;
        const std::size_t hi = std::min(images.size(), lo + kChunk);
        const auto probs = model.forward(to_tensor(images.subspan(lo, hi - lo)));
        for (std::size_t k = 0; k < hi - lo; ++k) {
          auto& p = out[lo + k];
          p.probabilities = {probs.item(k)[0], probs.item(k)[1]};
          p.label = p.probabilities[1] > p.probabilities[0] ? ClassLabel::PD : ClassLabel::HC;
        }
      },
      threads);
  return out;
}

}  // namespace forged::nn
