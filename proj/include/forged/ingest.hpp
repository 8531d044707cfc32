#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "forged/core.hpp"

namespace forged {

// ---------------------------------------------------------------------------
// Raw tensor format (all fields little-endian):
//
//   offset  size  field
//   0       8     magic "FRGTENS1"
//   8       4     n_channels      uint32
//   12      8     n_samples       uint64
//   20      8     sample_rate_hz  float64
//   28      4*n   payload         float32, channel-major (row after row)
// ---------------------------------------------------------------------------

inline constexpr std::size_t kRawHeaderBytes = 28;

struct RawTensor {
  double sample_rate_hz = 0.0;
  SignalMatrix data;
};

void write_raw_tensor(const RawTensor& t, const std::filesystem::path& path);
RawTensor read_raw_tensor(const std::filesystem::path& path);

// Recording helpers over the raw format. Identity (subject, label) is not
// stored in the file; read_raw fills channel names with defaults.
void write_raw(const Recording& r, const std::filesystem::path& path);
Recording read_raw(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// BioSemi 24-bit BDF, single sampling rate only.
// ---------------------------------------------------------------------------

struct BdfChannelInfo {
  std::string label;
  double physical_min = 0.0;
  double physical_max = 0.0;
  std::int32_t digital_min = 0;
  std::int32_t digital_max = 0;
  std::int64_t samples_per_record = 0;
};

struct BdfHeader {
  std::string subject;
  std::int64_t n_records = 0;
  double record_duration_s = 0.0;
  std::vector<BdfChannelInfo> channels;
};

inline constexpr std::int32_t kBdfDigitalMin = -8388608;
inline constexpr std::int32_t kBdfDigitalMax = 8388607;

struct PhysicalRange {
  double min = -3276.8;
  double max = 3276.8;
};

struct BdfWriteOptions {
  // Applied to every channel; when absent each channel uses its own data
  // extent (widened to a nonzero span).
  std::optional<PhysicalRange> range;
  double record_duration_s = 1.0;
};

BdfHeader read_bdf_header(const std::filesystem::path& path);

// Decodes 24-bit samples to physical units. Channels labelled "Status" are
// dropped with a warning on stderr.
Recording read_bdf(const std::filesystem::path& path);

// Trailing samples that do not fill a whole data record are padded by
// repeating the last sample; read_bdf then returns n_records * record length
// samples. Throws RangeOverflow when a sample lies outside the range.
void write_bdf(const Recording& r, const std::filesystem::path& path,
               const BdfWriteOptions& options = {});

// Reads .bdf files with read_bdf and anything else as the raw tensor format.
Recording load_recording(const std::filesystem::path& path);
Recording load_recording(const ManifestEntry& entry);

// ---------------------------------------------------------------------------
// Synthetic EEG
// ---------------------------------------------------------------------------

struct SpectralPeak {
  double center_hz = 10.0;
  double bandwidth_hz = 1.0;
  double amplitude = 10.0;  // microvolts
};

struct SynthSpec {
  std::vector<SpectralPeak> class_profile;
  double noise_sigma = 1.0;
  double duration_s = 60.0;
  std::size_t n_channels = 32;
  double sample_rate_hz = 512.0;
  std::uint64_t seed = 0;
};

// Each channel is a sum of narrowband oscillations plus white Gaussian noise.
// A peak with bandwidth b is a carrier at center_hz modulated by a complex
// AR(1) envelope whose Lorentzian spectrum has full width b; b = 0 gives a
// pure sinusoid of the stated amplitude with a random phase per channel.
Recording synth_recording(const SynthSpec& spec, const std::string& subject_id, ClassLabel label);

// Profiles used by the end-to-end experiment: HC peaks at 8 Hz, PD at 20 Hz.
SynthSpec acceptance_synth_spec(ClassLabel label, std::uint64_t seed);

}  // namespace forged
