#pragma once

#include <array>
#include <filesystem>
#include <span>
#include <vector>

#include "forged/core.hpp"
#include "forged/spwvd.hpp"

namespace forged {

enum class Normalization { JointMinMax, PerPlaneMinMax };

Normalization parse_normalization(std::string_view name);
std::string_view to_string(Normalization n);

struct ForgeConfig {
  SpwvdConfig spwvd;
  std::size_t out_height = 256;
  std::size_t out_width = 256;
  Normalization normalization = Normalization::JointMinMax;
};

// Row-major double image used between the transform and the final stack.
struct Plane {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> values;

  double operator()(std::size_t r, std::size_t c) const { return values[r * width + c]; }
  double& operator()(std::size_t r, std::size_t c) { return values[r * width + c]; }
};

struct ForgedImage {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<float> planes;  // 3 x height x width, values in [0, 1]
  std::string subject_id;
  ClassLabel label = ClassLabel::HC;
  std::size_t epoch_index = 0;

  std::span<const float> plane(std::size_t p) const { return {planes.data() + p * height * width, height * width}; }
  float at(std::size_t p, std::size_t r, std::size_t c) const { return planes[(p * height + r) * width + c]; }
};

using ChannelGroups = std::array<std::vector<std::size_t>, 3>;

// Contiguous split in channel order with sizes as even as possible and the
// earlier groups larger: 32 -> (11, 11, 10).
ChannelGroups split_channels(std::size_t n_channels);
inline ChannelGroups split_channels(const Epoch& e) { return split_channels(e.data.rows()); }

std::vector<double> average_group(const Epoch& e, std::span<const std::size_t> group);

// Corner-aligned bilinear interpolation: output (i, j) samples the source at
// (i (H0 - 1) / (H - 1), j (W0 - 1) / (W - 1)).
Plane resize_bilinear(const Plane& m, std::size_t height, std::size_t width);

Plane to_plane(const TfrMatrix& m);

ForgedImage normalize_stack(const Plane& p1, const Plane& p2, const Plane& p3,
                            Normalization mode = Normalization::JointMinMax);

ForgedImage forge_epoch(const Epoch& e, const ForgeConfig& cfg, double sample_rate_hz);

// Binary P6, maxval 255, value v -> round(v * 255); planes map to R, G, B.
void export_ppm(const ForgedImage& img, const std::filesystem::path& path);
// Reads a P6 file written by export_ppm back into [0, 1] planes.
ForgedImage import_ppm(const std::filesystem::path& path);

// Grayscale rendering of one TFR (min-max scaled) written as P6.
void export_tfr_ppm(const TfrMatrix& m, const std::filesystem::path& path, std::size_t height = 0,
                    std::size_t width = 0);

// ---------------------------------------------------------------------------
// Forged dataset on disk: one raw tensor file per epoch (n_channels = 3,
// n_samples = H * W) and an index file:
//
//   # forged-index height <H> width <W>
//   <file> <subject_id> <HC|PD> <epoch_index>
// ---------------------------------------------------------------------------

struct ForgedIndexEntry {
  std::filesystem::path file;
  std::string subject_id;
  ClassLabel label = ClassLabel::HC;
  std::size_t epoch_index = 0;
};

struct ForgedIndex {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<ForgedIndexEntry> entries;
};

void write_forged_image(const ForgedImage& img, const std::filesystem::path& path, double sample_rate_hz);
ForgedImage read_forged_image(const std::filesystem::path& path, const ForgedIndexEntry& entry, std::size_t height,
                              std::size_t width);
void write_forged_index(const ForgedIndex& index, const std::filesystem::path& path);
ForgedIndex read_forged_index(const std::filesystem::path& path);

}  // namespace forged
