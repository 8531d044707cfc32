#pragma once

#include <atomic>
#include <filesystem>
#include <random>
#include <string>
#include <unistd.h>

#include "forged/core.hpp"

namespace testutil {

// Scratch directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "t") {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("forged_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline forged::Recording random_recording(std::size_t channels, std::size_t samples, double rate, unsigned seed,
                                          double sigma = 50.0) {
  std::mt19937 rng(seed);
  std::normal_distribution<float> n(0.0f, static_cast<float>(sigma));
  forged::Recording r;
  r.subject_id = "S" + std::to_string(seed);
  r.sample_rate_hz = rate;
  r.channel_names = forged::default_channel_names(channels);
  r.data = forged::SignalMatrix(channels, samples);
  for (auto& v : r.data.values()) v = n(rng);
  return r;
}

}  // namespace testutil
