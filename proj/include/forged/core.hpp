#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "forged/error.hpp"

namespace forged {

// HC encodes as 0, PD as 1.
enum class ClassLabel : std::uint8_t { HC = 0, PD = 1 };

inline int to_index(ClassLabel label) { return static_cast<int>(label); }
ClassLabel label_from_index(int index);
std::string_view to_string(ClassLabel label);
ClassLabel parse_label(std::string_view text);
inline ClassLabel other(ClassLabel label) {
  return label == ClassLabel::HC ? ClassLabel::PD : ClassLabel::HC;
}

// Dense row-major matrix of 32-bit samples; rows are channels.
class SignalMatrix {
 public:
  SignalMatrix() = default;
  SignalMatrix(std::size_t rows, std::size_t cols, float fill = 0.0f)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  SignalMatrix(std::size_t rows, std::size_t cols, std::vector<float> data);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  float& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  float operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<float> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const float> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::vector<float>& values() { return data_; }
  const std::vector<float>& values() const { return data_; }

  bool operator==(const SignalMatrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<float> data_;
};

struct Recording {
  std::string subject_id;
  ClassLabel label = ClassLabel::HC;
  double sample_rate_hz = 0.0;
  std::vector<std::string> channel_names;
  SignalMatrix data;  // n_channels x n_samples, microvolts

  std::size_t n_channels() const { return data.rows(); }
  std::size_t n_samples() const { return data.cols(); }
  double duration_s() const { return static_cast<double>(n_samples()) / sample_rate_hz; }
};

struct Epoch {
  std::string subject_id;
  ClassLabel label = ClassLabel::HC;
  std::size_t epoch_index = 0;
  SignalMatrix data;  // n_channels x n_epoch_samples
};

struct ManifestEntry {
  std::string subject_id;
  ClassLabel label = ClassLabel::HC;
  std::filesystem::path path;
};

struct DatasetManifest {
  std::vector<ManifestEntry> entries;
  double epoch_seconds = 2.0;

  // Throws BadSpec on duplicate subject ids.
  void check_unique() const;
  const ManifestEntry* find(std::string_view subject_id) const;
};

// Throws ShapeMismatch, NonFinite or BadRate.
void validate_recording(const Recording& r);

std::size_t epoch_length(double epoch_seconds, double sample_rate_hz);

// Non-overlapping consecutive epochs; the tail remainder is dropped.
std::vector<Epoch> epoch_recording(const Recording& r, double epoch_seconds);

std::vector<std::string> default_channel_names(std::size_t n_channels);

}  // namespace forged
