#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "forged/forge.hpp"
#include "forged/nn/adam.hpp"
#include "forged/nn/model.hpp"

namespace forged::nn {

struct TrainConfig {
  double lr = 1e-4;
  std::size_t epochs = 30;
  std::size_t batch_size = 150;
  double l2_coeff = 0.01;
  std::uint64_t seed = 0;
  std::size_t threads = 0;  // 0 = forged::thread_count(); results do not depend on it

  void validate() const;
};

struct EpochStats {
  double loss = 0.0;      // mean data loss over the epoch's minibatches (L2 term excluded)
  double accuracy = 0.0;  // running accuracy of the predictions made during the epoch
};

using ImageRefs = std::vector<const ForgedImage*>;

Tensor4<float> to_tensor(std::span<const ForgedImage* const> images);

// Minibatch Adam over seeded per-epoch shuffles. Gradients are accumulated in
// fixed chunks of 8 images and summed in chunk order, so the result does not
// depend on the worker count.
std::vector<EpochStats> train(CnnModel& model, std::span<const ForgedImage* const> images, const TrainConfig& cfg);

struct Prediction {
  ClassLabel label = ClassLabel::HC;
  std::array<double, 2> probabilities{};
};

std::vector<Prediction> predict(const CnnModel& model, std::span<const ForgedImage* const> images,
                                std::size_t threads = 0);

struct Evaluation {
  double loss = 0.0;
  double accuracy = 0.0;
  std::vector<Prediction> predictions;
};

Evaluation evaluate(const CnnModel& model, std::span<const ForgedImage* const> images, std::size_t threads = 0);

}  // namespace forged::nn
