#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "forged/losocv.hpp"
#include "reference_results.hpp"
#include "test_util.hpp"

using namespace forged;

namespace {

DatasetManifest manifest_of(std::size_t hc, std::size_t pd) {
  DatasetManifest m;
  for (std::size_t i = 0; i < hc; ++i) m.entries.push_back({"H" + std::to_string(i), ClassLabel::HC, {}});
  for (std::size_t i = 0; i < pd; ++i) m.entries.push_back({"P" + std::to_string(i), ClassLabel::PD, {}});
  return m;
}

ForgedImage tagged(const std::string& id, ClassLabel label, std::size_t epoch, std::size_t size = 2) {
  ForgedImage img;
  img.height = img.width = size;
  img.planes.assign(3 * size * size, 0.0f);
  img.subject_id = id;
  img.label = label;
  img.epoch_index = epoch;
  return img;
}

// Bright top rows for HC, bright bottom rows for PD; subject-specific noise.
std::vector<ForgedImage> toy_dataset(const DatasetManifest& m, std::size_t per_subject, std::size_t size) {
  std::vector<ForgedImage> out;
  for (const auto& e : m.entries) {
    std::mt19937 rng(static_cast<unsigned>(std::hash<std::string>{}(e.subject_id) & 0xffff));
    std::uniform_real_distribution<float> u(0.0f, 0.4f);
    for (std::size_t k = 0; k < per_subject; ++k) {
      auto img = tagged(e.subject_id, e.label, k, size);
      for (std::size_t p = 0; p < 3; ++p)
        for (std::size_t r = 0; r < size; ++r)
          for (std::size_t c = 0; c < size; ++c) {
            const bool lit = e.label == ClassLabel::HC ? r < size / 3 : r >= 2 * size / 3;
            img.planes[(p * size + r) * size + c] = u(rng) + (lit ? 0.6f : 0.0f);
          }
      out.push_back(std::move(img));
    }
  }
  return out;
}

}  // namespace

TEST_CASE("one fold per subject, never training on the test subject") {
  const auto m = manifest_of(3, 2);
  const auto folds = make_folds(m);
  REQUIRE(folds.size() == 5);
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(folds[i].test_subject_id == m.entries[i].subject_id);
    CHECK(folds[i].test_label == m.entries[i].label);
    CHECK(folds[i].train_subject_ids.size() == 4);
    CHECK(std::count(folds[i].train_subject_ids.begin(), folds[i].train_subject_ids.end(), folds[i].test_subject_id) == 0);
  }
  CHECK_THROWS_AS(make_folds(manifest_of(1, 0)), Error);
  try {
    make_folds(manifest_of(3, 0));
    FAIL("expected SingleClass");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::SingleClass);
  }
}

TEST_CASE("subject prediction by strict majority") {
  using L = ClassLabel;
  const std::vector<L> mostly_pd{L::PD, L::PD, L::HC};
  auto p = subject_prediction(mostly_pd, L::PD);
  CHECK(p.correct);
  CHECK(p.predicted == L::PD);
  CHECK(p.epoch_accuracy == doctest::Approx(2.0 / 3.0));
  const std::vector<L> tie{L::PD, L::HC};
  p = subject_prediction(tie, L::HC);
  CHECK_FALSE(p.correct);
  CHECK(p.predicted == L::PD);
  CHECK(p.epoch_accuracy == 0.5);
  CHECK_THROWS_AS(subject_prediction(std::vector<L>{}, L::HC), Error);
  CHECK(subject_prediction_from_accuracy(0.0625, L::HC).predicted == L::PD);
  CHECK(subject_prediction_from_accuracy(1.0, L::PD).correct);
}

TEST_CASE("reference per-subject results aggregate to the reference averages") {
  std::vector<FoldResult> folds;
  for (const auto& row : reference_results::kRows) {
    FoldResult f;
    f.subject_id = row.id;
    f.label = row.label;
    f.train_loss = row.train_loss;
    f.train_acc = row.train_acc / 100.0;
    f.test_loss = row.test_loss;
    f.test_acc = row.test_acc / 100.0;
    const auto sp = subject_prediction_from_accuracy(f.test_acc, row.label);
    f.predicted = sp.predicted;
    f.correct = sp.correct;
    const bool listed_wrong = std::find_if(reference_results::kMisclassified.begin(), reference_results::kMisclassified.end(), [&](auto id) {
                                   return std::string(id) == row.id;
                                 }) != reference_results::kMisclassified.end();
    CHECK(f.correct == !listed_wrong);
    folds.push_back(f);
  }
  const auto r = aggregate(folds);
  CHECK(std::count_if(r.folds.begin(), r.folds.end(), [](const auto& f) { return f.correct; }) == 28);
  CHECK(std::round(r.subject_accuracy * 10000.0) / 100.0 == reference_results::kSubjectAccuracy);
  CHECK(std::round(r.mean_test_acc * 10000.0) / 100.0 == reference_results::kMeanTestAcc);
  CHECK(std::round(r.mean_train_acc * 10000.0) / 100.0 == reference_results::kMeanTrainAcc);
  CHECK(std::round(r.mean_test_loss * 1000.0) / 1000.0 == reference_results::kMeanTestLoss);
  CHECK(std::round(r.mean_train_loss * 1000.0) / 1000.0 == reference_results::kMeanTrainLoss);
  CHECK(render_report(r).find("90.32") != std::string::npos);
}

TEST_CASE("splits never leak test-subject images into training") {
  std::mt19937 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const auto m = manifest_of(2 + rng() % 5, 2 + rng() % 5);
    std::vector<ForgedImage> images;
    for (const auto& e : m.entries) {
      for (std::size_t k = 0, n = 1 + rng() % 4; k < n; ++k) images.push_back(tagged(e.subject_id, e.label, k));
    }
    std::shuffle(images.begin(), images.end(), rng);
    for (const auto& fold : make_folds(m)) {
      const auto split = split_for_fold(images, fold);
      for (const auto* img : split.train) REQUIRE(img->subject_id != fold.test_subject_id);
      for (const auto* img : split.test) REQUIRE(img->subject_id == fold.test_subject_id);
      CHECK(split.train.size() + split.test.size() == images.size());
    }
  }
  const auto m = manifest_of(2, 2);
  std::vector<ForgedImage> only_h0{tagged("H0", ClassLabel::HC, 0)};
  CHECK_THROWS_AS(split_for_fold(only_h0, make_folds(m)[1]), Error);
}

TEST_CASE("fold seeds depend on the subject id, not its position") {
  CHECK(fold_seed(1, "A") == fold_seed(1, "A"));
  CHECK(fold_seed(1, "A") != fold_seed(1, "B"));
  CHECK(fold_seed(1, "A") != fold_seed(2, "A"));
}

TEST_CASE("end to end on a toy dataset: accurate, order-invariant and thread-invariant") {
  auto m = manifest_of(3, 3);
  const auto images = toy_dataset(m, 6, 32);
  nn::TrainConfig cfg;
  cfg.lr = 1e-3;
  cfg.epochs = 4;
  cfg.batch_size = 8;
  LosocvOptions opt;
  opt.base_seed = 17;
  opt.threads = 1;
  std::size_t callbacks = 0;
  opt.on_fold = [&](const FoldResult&) { ++callbacks; };
  const auto a = run_losocv(images, make_folds(m), cfg, opt);
  CHECK(callbacks == 6);
  CHECK(a.subject_accuracy == 1.0);
  REQUIRE(a.folds.size() == 6);
  CHECK(a.folds[0].n_test_images == 6);
  CHECK(a.folds[0].n_train_images == 30);

  std::reverse(m.entries.begin(), m.entries.end());
  opt.threads = 3;
  opt.on_fold = {};
  const auto b = run_losocv(images, make_folds(m), cfg, opt);
  for (const auto& fa : a.folds) {
    const auto fb = std::find_if(b.folds.begin(), b.folds.end(), [&](const auto& f) { return f.subject_id == fa.subject_id; });
    REQUIRE(fb != b.folds.end());
    CHECK(fb->test_loss == fa.test_loss);
    CHECK(fb->train_loss == fa.train_loss);
    CHECK(fb->test_acc == fa.test_acc);
  }
}

TEST_CASE("report CSV round trip") {
  std::vector<FoldResult> folds(2);
  folds[0] = {"A", ClassLabel::HC, 0.1, 0.9, 0.2, 1.0, ClassLabel::HC, true, 0.3, 0.8, 10, 3};
  folds[1] = {"B", ClassLabel::PD, 0.4, 0.1 + 0.2, 1.3, 0.0, ClassLabel::HC, false, 0.5, 0.6, 10, 3};
  const auto r = aggregate(folds, 5);
  const auto csv = report_csv(r);
  CHECK(csv.rfind("subject_id,label,train_loss,train_acc,test_loss,test_acc,pred,correct\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);
  CHECK(csv.find("Average,") != std::string::npos);
  const auto back = parse_report_csv(csv);
  REQUIRE(back.folds.size() == 2);
  CHECK(back.folds[1].train_acc == 0.1 + 0.2);
  CHECK(back.folds[1].predicted == ClassLabel::HC);
  CHECK_FALSE(back.folds[1].correct);
  CHECK(back.subject_accuracy == 0.5);
  CHECK(report_csv(back) == csv);
}
