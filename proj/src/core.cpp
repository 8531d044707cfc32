#include "forged/core.hpp"

#include <cmath>
#include <fmt/format.h>
#include <unordered_set>

namespace forged {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::BadRate: return "BadRate";
    case ErrorCode::EpochTooLong: return "EpochTooLong";
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::TruncatedFile: return "TruncatedFile";
    case ErrorCode::MixedRates: return "MixedRates";
    case ErrorCode::RangeOverflow: return "RangeOverflow";
    case ErrorCode::BadSpec: return "BadSpec";
    case ErrorCode::BadBand: return "BadBand";
    case ErrorCode::TooShort: return "TooShort";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::BadIndex: return "BadIndex";
    case ErrorCode::EvenLength: return "EvenLength";
    case ErrorCode::TooFewChannels: return "TooFewChannels";
    case ErrorCode::DegenerateInput: return "DegenerateInput";
    case ErrorCode::BadLabel: return "BadLabel";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::TooFewSubjects: return "TooFewSubjects";
    case ErrorCode::SingleClass: return "SingleClass";
    case ErrorCode::Empty: return "Empty";
    case ErrorCode::UnknownCommand: return "UnknownCommand";
    case ErrorCode::BadFlag: return "BadFlag";
    case ErrorCode::BadConfig: return "BadConfig";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

ClassLabel label_from_index(int index) {
  if (index == 0) return ClassLabel::HC;
  if (index == 1) return ClassLabel::PD;
  throw Error(ErrorCode::BadLabel, fmt::format("label index {} is not 0 or 1", index));
}

std::string_view to_string(ClassLabel label) { return label == ClassLabel::HC ? "HC" : "PD"; }

ClassLabel parse_label(std::string_view text) {
  if (text == "HC") return ClassLabel::HC;
  if (text == "PD") return ClassLabel::PD;
  throw Error(ErrorCode::BadLabel, fmt::format("'{}' is not HC or PD", text));
}

SignalMatrix::SignalMatrix(std::size_t rows, std::size_t cols, std::vector<float> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw Error(ErrorCode::ShapeMismatch,
                fmt::format("{} values for a {}x{} matrix", data_.size(), rows_, cols_));
  }
}

void DatasetManifest::check_unique() const {
  std::unordered_set<std::string> seen;
  for (const auto& e : entries) {
    if (!seen.insert(e.subject_id).second) {
      throw Error(ErrorCode::BadSpec, fmt::format("duplicate subject id '{}'", e.subject_id));
    }
  }
}

const ManifestEntry* DatasetManifest::find(std::string_view subject_id) const {
  for (const auto& e : entries) {
    if (e.subject_id == subject_id) return &e;
  }
  return nullptr;
}

void validate_recording(const Recording& r) {
  if (!(r.sample_rate_hz > 0.0) || !std::isfinite(r.sample_rate_hz)) {
    throw Error(ErrorCode::BadRate, fmt::format("sample rate {} Hz", r.sample_rate_hz));
  }
  if (r.channel_names.size() != r.data.rows()) {
    throw Error(ErrorCode::ShapeMismatch, fmt::format("{} channel names but {} data rows",
                                                      r.channel_names.size(), r.data.rows()));
  }
  if (r.data.rows() < 3) {
    throw Error(ErrorCode::ShapeMismatch, fmt::format("{} channels, need at least 3", r.data.rows()));
  }
  if (r.data.cols() < 1) {
    throw Error(ErrorCode::ShapeMismatch, "recording has no samples");
  }
  for (std::size_t ch = 0; ch < r.data.rows(); ++ch) {
    auto row = r.data.row(ch);
    for (std::size_t t = 0; t < row.size(); ++t) {
      if (!std::isfinite(row[t])) {
        throw Error(ErrorCode::NonFinite,
                    fmt::format("sample at (channel {}, t {}) is {}", ch, t, row[t]));
      }
    }
  }
}

std::size_t epoch_length(double epoch_seconds, double sample_rate_hz) {
  const double n = std::round(epoch_seconds * sample_rate_hz);
  if (!(epoch_seconds > 0.0) || !(n >= 1.0)) {
    throw Error(ErrorCode::BadSpec,
                fmt::format("epoch of {} s at {} Hz is shorter than one sample", epoch_seconds,
                            sample_rate_hz));
  }
  return static_cast<std::size_t>(n);
}

std::vector<Epoch> epoch_recording(const Recording& r, double epoch_seconds) {
  const std::size_t len = epoch_length(epoch_seconds, r.sample_rate_hz);
  const std::size_t count = r.n_samples() / len;
  if (count == 0) {
    throw Error(ErrorCode::EpochTooLong,
                fmt::format("subject '{}': {} samples, epoch needs {}", r.subject_id,
                            r.n_samples(), len));
  }
  std::vector<Epoch> epochs;
  epochs.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    Epoch e;
    e.subject_id = r.subject_id;
    e.label = r.label;
    e.epoch_index = k;
    e.data = SignalMatrix(r.n_channels(), len);
    for (std::size_t ch = 0; ch < r.n_channels(); ++ch) {
      auto src = r.data.row(ch).subspan(k * len, len);
      std::copy(src.begin(), src.end(), e.data.row(ch).begin());
    }
    epochs.push_back(std::move(e));
  }
  return epochs;
}

std::vector<std::string> default_channel_names(std::size_t n_channels) {
  std::vector<std::string> names;
  names.reserve(n_channels);
  for (std::size_t i = 0; i < n_channels; ++i) names.push_back(fmt::format("EEG{:02}", i + 1));
  return names;
}

}  // namespace forged
