#include "forged/losocv.hpp"

#include <fmt/format.h>
#include <set>

#include "forged/ingest.hpp"
#include "forged/parallel.hpp"

namespace forged {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

}  // namespace

std::vector<Fold> make_folds(const DatasetManifest& m) {
  m.check_unique();
  if (m.entries.size() < 2) {
    throw Error(ErrorCode::TooFewSubjects, fmt::format("{} subject(s); LOSOCV needs at least 2", m.entries.size()));
  }
  bool has_hc = false, has_pd = false;
  for (const auto& e : m.entries) (e.label == ClassLabel::HC ? has_hc : has_pd) = true;
  if (!has_hc || !has_pd) throw Error(ErrorCode::SingleClass, "manifest contains only one class");

  std::vector<Fold> folds;
  for (const auto& test : m.entries) {
    Fold f;
    f.test_subject_id = test.subject_id;
    f.test_label = test.label;
    for (const auto& e : m.entries)
      if (e.subject_id != test.subject_id) f.train_subject_ids.push_back(e.subject_id);
    folds.push_back(std::move(f));
  }
  return folds;
}

SubjectPrediction subject_prediction_from_accuracy(double epoch_accuracy, ClassLabel true_label) {
  SubjectPrediction p;
  p.epoch_accuracy = epoch_accuracy;
  p.correct = epoch_accuracy > 0.5;
  p.predicted = p.correct ? true_label : other(true_label);
  return p;
}

SubjectPrediction subject_prediction(std::span<const ClassLabel> epoch_predictions, ClassLabel true_label) {
  if (epoch_predictions.empty()) throw Error(ErrorCode::Empty, "subject has no epoch predictions");
  std::size_t hits = 0;
  for (auto p : epoch_predictions) hits += p == true_label;
  return subject_prediction_from_accuracy(static_cast<double>(hits) / static_cast<double>(epoch_predictions.size()),
                                          true_label);
}

LosocvReport aggregate(std::vector<FoldResult> folds, std::uint64_t base_seed) {
  LosocvReport r;
  r.base_seed = base_seed;
  r.folds = std::move(folds);
  if (r.folds.empty()) return r;
  std::size_t correct = 0;
  for (const auto& f : r.folds) {
    r.mean_train_loss += f.train_loss;
    r.mean_train_acc += f.train_acc;
    r.mean_test_loss += f.test_loss;
    r.mean_test_acc += f.test_acc;
    correct += f.correct;
  }
  const auto n = static_cast<double>(r.folds.size());
  r.mean_train_loss /= n;
  r.mean_train_acc /= n;
  r.mean_test_loss /= n;
  r.mean_test_acc /= n;
  r.subject_accuracy = static_cast<double>(correct) / n;
  return r;
}

std::uint64_t fold_seed(std::uint64_t base_seed, std::string_view subject_id) {
  std::uint64_t h = 0xCBF29CE484222325ull;  // FNV-1a
  for (unsigned char c : subject_id) {
    h ^= c;
    h *= 0x100000001B3ull;
  }
  return splitmix64(base_seed ^ splitmix64(h));
}

FoldSplit split_for_fold(std::span<const ForgedImage> images, const Fold& fold) {
  const std::set<std::string> train_ids(fold.train_subject_ids.begin(), fold.train_subject_ids.end());
  if (train_ids.count(fold.test_subject_id)) {
    throw Error(ErrorCode::BadSpec, fmt::format("fold lists test subject '{}' among its training subjects",
                                                fold.test_subject_id));
  }
  FoldSplit s;
  for (const auto& img : images) {
    if (img.subject_id == fold.test_subject_id) {
      s.test.push_back(&img);
    } else if (train_ids.count(img.subject_id)) {
      s.train.push_back(&img);
    }
  }
  for (const auto* img : s.train) {
    if (img->subject_id == fold.test_subject_id) {
      throw Error(ErrorCode::BadSpec, fmt::format("test subject '{}' leaked into training", fold.test_subject_id));
    }
  }
  if (s.test.empty()) {
    throw Error(ErrorCode::EmptyDataset, fmt::format("no images for test subject '{}'", fold.test_subject_id));
  }
  if (s.train.empty()) {
    throw Error(ErrorCode::EmptyDataset, fmt::format("no training images for fold '{}'", fold.test_subject_id));
  }
  return s;
}

std::vector<ForgedImage> forge_dataset(const DatasetManifest& m, const ForgeConfig& cfg,
                                       const std::function<Recording(const Recording&)>& preprocess,
                                       std::size_t threads) {
  std::vector<ForgedImage> images;
  for (const auto& entry : m.entries) {
    try {
      Recording r = load_recording(entry);
      if (preprocess) r = preprocess(r);
      const auto epochs = epoch_recording(r, m.epoch_seconds);
      std::vector<ForgedImage> forged(epochs.size());
      // The transform parallelizes internally; epochs run one at a time when a
      // single worker is requested.
      parallel_for(
          epochs.size(), [&](std::size_t k) { forged[k] = forge_epoch(epochs[k], cfg, r.sample_rate_hz); }, threads);
      for (auto& img : forged) images.push_back(std::move(img));
    } catch (const Error& e) {
      throw Error(e.code(), fmt::format("subject '{}' ({}): {}", entry.subject_id, entry.path.string(), e.what()));
    }
  }
  return images;
}

LosocvReport run_losocv(std::span<const ForgedImage> images, const std::vector<Fold>& folds,
                        const nn::TrainConfig& train_cfg, const LosocvOptions& options) {
  if (images.empty()) throw Error(ErrorCode::EmptyDataset, "no forged images");
  train_cfg.validate();
  const std::size_t height = images.front().height, width = images.front().width;
  const std::size_t workers = options.threads == 0 ? thread_count() : options.threads;
  const std::size_t fold_workers = std::min(workers, folds.size());

  std::vector<FoldResult> results(folds.size());
  parallel_for(
      folds.size(),
      [&](std::size_t i) {
        const auto& fold = folds[i];
        try {
          const auto split = split_for_fold(images, fold);
          const std::uint64_t seed = fold_seed(options.base_seed, fold.test_subject_id);
          auto model = nn::build_paper_cnn(seed, height, width);
          nn::TrainConfig cfg = train_cfg;
          cfg.seed = splitmix64(seed);
          cfg.threads = fold_workers > 1 ? 1 : workers;
          const auto history = nn::train(model, split.train, cfg);
          const auto train_eval = nn::evaluate(model, split.train, cfg.threads);
          const auto test_eval = nn::evaluate(model, split.test, cfg.threads);

          std::vector<ClassLabel> labels;
          for (const auto& p : test_eval.predictions) labels.push_back(p.label);
          const auto pred = subject_prediction(labels, fold.test_label);

          FoldResult& r = results[i];
          r.subject_id = fold.test_subject_id;
          r.label = fold.test_label;
          r.train_loss = train_eval.loss;
          r.train_acc = train_eval.accuracy;
          r.test_loss = test_eval.loss;
          r.test_acc = pred.epoch_accuracy;
          r.predicted = pred.predicted;
          r.correct = pred.correct;
          r.final_epoch_loss = history.back().loss;
          r.final_epoch_acc = history.back().accuracy;
          r.n_train_images = split.train.size();
          r.n_test_images = split.test.size();
          if (options.on_fold) options.on_fold(r);
        } catch (const Error& e) {
          throw Error(e.code(), fmt::format("fold '{}': {}", fold.test_subject_id, e.what()));
        }
      },
      fold_workers);
  return aggregate(std::move(results), options.base_seed);
}

LosocvReport run_losocv(const DatasetManifest& m, const ForgeConfig& forge_cfg, const nn::TrainConfig& train_cfg,
                        const LosocvOptions& options) {
  const auto folds = make_folds(m);
  const auto images = forge_dataset(m, forge_cfg, options.preprocess, options.threads);
  return run_losocv(images, folds, train_cfg, options);
}

}  // namespace forged
