#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "forged/core.hpp"
#include "forged/forge.hpp"
#include "forged/nn/train.hpp"

namespace forged {

struct Fold {
  std::string test_subject_id;
  ClassLabel test_label = ClassLabel::HC;
  std::vector<std::string> train_subject_ids;
};

// One fold per manifest entry, in manifest order. Throws TooFewSubjects or
// SingleClass.
std::vector<Fold> make_folds(const DatasetManifest& m);

struct SubjectPrediction {
  ClassLabel predicted = ClassLabel::HC;
  double epoch_accuracy = 0.0;
  bool correct = false;
};

// A subject counts as correct only when strictly more than half of its epochs
// are; exactly 50% is scored as the other class.
SubjectPrediction subject_prediction(std::span<const ClassLabel> epoch_predictions, ClassLabel true_label);
SubjectPrediction subject_prediction_from_accuracy(double epoch_accuracy, ClassLabel true_label);

struct FoldResult {
  std::string subject_id;
  ClassLabel label = ClassLabel::HC;
  double train_loss = 0.0;  // full pass over the training images after training
  double train_acc = 0.0;
  double test_loss = 0.0;
  double test_acc = 0.0;
  ClassLabel predicted = ClassLabel::HC;
  bool correct = false;
  double final_epoch_loss = 0.0;  // running values of the last training epoch
  double final_epoch_acc = 0.0;
  std::size_t n_train_images = 0;
  std::size_t n_test_images = 0;
};

struct LosocvReport {
  std::vector<FoldResult> folds;
  double mean_train_loss = 0.0;
  double mean_train_acc = 0.0;
  double mean_test_loss = 0.0;
  double mean_test_acc = 0.0;
  double subject_accuracy = 0.0;
  std::uint64_t base_seed = 0;
};

// Arithmetic means over the folds; subject_accuracy = correct folds / folds.
LosocvReport aggregate(std::vector<FoldResult> folds, std::uint64_t base_seed = 0);

// Seed for a fold, keyed by subject id so results do not depend on the
// manifest order.
std::uint64_t fold_seed(std::uint64_t base_seed, std::string_view subject_id);

struct FoldSplit {
  nn::ImageRefs train;
  nn::ImageRefs test;
};

// Partitions images by provenance. Throws if a test-subject image would land
// in the training set or if either side is empty.
FoldSplit split_for_fold(std::span<const ForgedImage> images, const Fold& fold);

struct LosocvOptions {
  std::uint64_t base_seed = 0;
  std::size_t threads = 0;  // folds run concurrently; 0 = forged::thread_count()
  // Optional per-recording cleaning applied before epoching.
  std::function<Recording(const Recording&)> preprocess;
  // Called after each fold finishes (from the worker thread).
  std::function<void(const FoldResult&)> on_fold;
};

// Loads, cleans, epochs and forges every recording in the manifest. Images
// are returned grouped by subject in manifest order, then by epoch.
std::vector<ForgedImage> forge_dataset(const DatasetManifest& m, const ForgeConfig& cfg,
                                       const std::function<Recording(const Recording&)>& preprocess = {},
                                       std::size_t threads = 0);

// Leave-one-subject-out over an already forged dataset. Each fold trains a
// fresh model (build_paper_cnn sized to the images) seeded from fold_seed.
LosocvReport run_losocv(std::span<const ForgedImage> images, const std::vector<Fold>& folds,
                        const nn::TrainConfig& train_cfg, const LosocvOptions& options = {});

LosocvReport run_losocv(const DatasetManifest& m, const ForgeConfig& forge_cfg, const nn::TrainConfig& train_cfg,
                        const LosocvOptions& options = {});

// Fixed-width text table: one row per subject plus an Average row.
std::string render_report(const LosocvReport& r);

// Header: subject_id,label,train_loss,train_acc,test_loss,test_acc,pred,correct
// One row per fold, then an "Average" row whose pred column holds the subject
// accuracy. Accuracies are fractions; values use shortest round-trip text.
std::string report_csv(const LosocvReport& r);
LosocvReport parse_report_csv(std::string_view csv);

}  // namespace forged
