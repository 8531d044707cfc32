#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "forged/forge.hpp"
#include "forged/nn/train.hpp"
#include "forged/preprocess.hpp"

namespace forged::app {

struct PreprocessSettings {
  bool bandpass = true;
  double low_hz = 0.5;
  double high_hz = 50.0;
  bool ica = false;
  int ica_max_iter = 500;
  double ica_tol = 1e-6;
  RejectionPolicy policy = rejection::KeepAll{};
  bool inline_stage = false;  // apply in memory inside forge/train/losocv
};

struct SynthSettings {
  std::size_t subjects_per_class = 8;
  double duration_s = 60.0;
  std::size_t channels = 32;
  double sample_rate_hz = 512.0;
  double noise_sigma = 5.0;
  double bandwidth_hz = 1.0;
  double amplitude = 10.0;
  double hc_peak_hz = 8.0;
  double pd_peak_hz = 20.0;
};

struct TfrPlotSettings {
  std::size_t channel = 0;
  double start_s = 0.0;
  double seconds = 2.0;
  std::size_t height = 256;
  std::size_t width = 256;
};

struct AppConfig {
  std::filesystem::path manifest;
  std::filesystem::path out;
  std::filesystem::path input;
  std::size_t threads = 0;
  std::uint64_t seed = 0;
  PreprocessSettings preprocess;
  std::optional<double> epoch_seconds;  // overrides the manifest value
  ForgeConfig forge;
  bool export_ppm = false;
  nn::TrainConfig train;
  std::vector<std::string> holdout;
  SynthSettings synth;
  TfrPlotSettings tfr;
};

// Sets one dotted key such as "forge.out_height". Unknown keys and malformed
// values throw BadConfig.
void apply_setting(AppConfig& cfg, std::string_view key, std::string_view value);

// "key = value" lines; '#' starts a comment.
void apply_config_text(AppConfig& cfg, std::string_view text, std::string_view origin = "<config>");
void load_config_file(AppConfig& cfg, const std::filesystem::path& path);

std::string dump_config(const AppConfig& cfg);

RejectionPolicy parse_rejection_policy(std::string_view text);
std::string to_string(const RejectionPolicy& policy);

}  // namespace forged::app
