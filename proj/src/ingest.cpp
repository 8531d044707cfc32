#include "forged/ingest.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fmt/format.h>
#include <fstream>
#include <iostream>

namespace forged {

static_assert(std::endian::native == std::endian::little,
              "file formats are little-endian; add byte swapping for this target");

namespace {

constexpr char kRawMagic[8] = {'F', 'R', 'G', 'T', 'E', 'N', 'S', '1'};

std::vector<char> slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, fmt::format("cannot open {}", path.string()));
  return std::vector<char>(std::istreambuf_iterator<char>(in), {});
}

template <typename T>
T load(const char* p) {
  T v;
  std::memcpy(&v, p, sizeof(T));
  return v;
}

template <typename T>
void store(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

// Fixed-width ASCII header field, space padded.
std::string field(std::string_view text, std::size_t width) {
  std::string s(text.substr(0, width));
  s.resize(width, ' ');
  return s;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(' ');
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(' ');
  return std::string(s.substr(b, e - b + 1));
}

std::string number_field(double v, std::size_t width) {
  // Shortest representation that fits the field.
  for (int precision = 12; precision >= 0; --precision) {
    auto s = fmt::format("{:.{}g}", v, precision);
    if (s.size() <= width) return field(s, width);
  }
  throw Error(ErrorCode::RangeOverflow, fmt::format("{} does not fit in {} characters", v, width));
}

double parse_number(std::string_view s, std::string_view what) {
  const auto t = trim(s);
  try {
    std::size_t used = 0;
    double v = std::stod(t, &used);
    if (used != t.size()) throw std::invalid_argument(t);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorCode::BadMagic, fmt::format("header field {} is not numeric: '{}'", what, t));
  }
}

void check_file(const std::filesystem::path& path, std::ofstream& out) {
  if (!out) throw Error(ErrorCode::Io, fmt::format("failed writing {}", path.string()));
}

struct ParsedBdf {
  BdfHeader header;
  std::size_t header_bytes = 0;
};

ParsedBdf parse_bdf_header(const std::vector<char>& bytes, const std::filesystem::path& path) {
  if (bytes.size() < 256) {
    throw Error(ErrorCode::TruncatedFile,
                fmt::format("{}: expected at least 256 header bytes, found {}", path.string(), bytes.size()));
  }
  if (static_cast<unsigned char>(bytes[0]) != 0xFF || std::string_view(bytes.data() + 1, 7) != "BIOSEMI") {
    throw Error(ErrorCode::BadMagic, fmt::format("{} is not a BioSemi BDF file", path.string()));
  }
  auto text = [&](std::size_t off, std::size_t len) { return std::string_view(bytes.data() + off, len); };
  ParsedBdf parsed;
  auto& h = parsed.header;
  h.subject = trim(text(8, 80));
  parsed.header_bytes = static_cast<std::size_t>(parse_number(text(184, 8), "header bytes"));
  h.n_records = static_cast<std::int64_t>(parse_number(text(236, 8), "n_records"));
  h.record_duration_s = parse_number(text(244, 8), "record duration");
  const auto n_channels = static_cast<std::int64_t>(parse_number(text(252, 4), "n_channels"));
  if (n_channels < 1) throw Error(ErrorCode::BadMagic, fmt::format("{}: no channels", path.string()));
  if (h.n_records < 0) {
    throw Error(ErrorCode::TruncatedFile, fmt::format("{}: unknown record count", path.string()));
  }
  const auto nc = static_cast<std::size_t>(n_channels);
  if (bytes.size() < 256 + 256 * nc) {
    throw Error(ErrorCode::TruncatedFile,
                fmt::format("{}: expected {} header bytes, found {}", path.string(), 256 + 256 * nc, bytes.size()));
  }
  h.channels.resize(nc);
  // Channel header fields are stored field-major: all labels, then all
  // transducers, and so on.
  std::size_t off = 256;
  auto per_channel = [&](std::size_t width, auto&& fn) {
    for (std::size_t c = 0; c < nc; ++c) fn(h.channels[c], text(off + c * width, width));
    off += nc * width;
  };
  per_channel(16, [](BdfChannelInfo& ci, std::string_view s) { ci.label = trim(s); });
  per_channel(80, [](BdfChannelInfo&, std::string_view) {});
  per_channel(8, [](BdfChannelInfo&, std::string_view) {});
  per_channel(8, [](BdfChannelInfo& ci, std::string_view s) { ci.physical_min = parse_number(s, "physical min"); });
  per_channel(8, [](BdfChannelInfo& ci, std::string_view s) { ci.physical_max = parse_number(s, "physical max"); });
  per_channel(8, [](BdfChannelInfo& ci, std::string_view s) {
    ci.digital_min = static_cast<std::int32_t>(parse_number(s, "digital min"));
  });
  per_channel(8, [](BdfChannelInfo& ci, std::string_view s) {
    ci.digital_max = static_cast<std::int32_t>(parse_number(s, "digital max"));
  });
  per_channel(80, [](BdfChannelInfo&, std::string_view) {});
  per_channel(8, [](BdfChannelInfo& ci, std::string_view s) {
    ci.samples_per_record = static_cast<std::int64_t>(parse_number(s, "samples per record"));
  });
  per_channel(32, [](BdfChannelInfo&, std::string_view) {});

  for (std::size_t c = 0; c < nc; ++c) {
    const auto& ci = h.channels[c];
    if (ci.digital_max == ci.digital_min) {
      throw Error(ErrorCode::BadMagic, fmt::format("{}: channel {} has zero digital range", path.string(), c));
    }
    if (ci.samples_per_record != h.channels[0].samples_per_record) {
      throw Error(ErrorCode::MixedRates,
                  fmt::format("{}: channel {} has {} samples per record, channel 0 has {}", path.string(), c,
                              ci.samples_per_record, h.channels[0].samples_per_record));
    }
  }
  if (h.channels[0].samples_per_record < 1 || !(h.record_duration_s > 0)) {
    throw Error(ErrorCode::BadRate, fmt::format("{}: invalid record layout", path.string()));
  }
  return parsed;
}

}  // namespace

void write_raw_tensor(const RawTensor& t, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, fmt::format("cannot create {}", path.string()));
  out.write(kRawMagic, sizeof kRawMagic);
  store<std::uint32_t>(out, static_cast<std::uint32_t>(t.data.rows()));
  store<std::uint64_t>(out, static_cast<std::uint64_t>(t.data.cols()));
  store<double>(out, t.sample_rate_hz);
  out.write(reinterpret_cast<const char*>(t.data.values().data()),
            static_cast<std::streamsize>(t.data.values().size() * sizeof(float)));
  check_file(path, out);
}

RawTensor read_raw_tensor(const std::filesystem::path& path) {
  const auto bytes = slurp(path);
  if (bytes.size() < 8 || std::memcmp(bytes.data(), kRawMagic, 8) != 0) {
    throw Error(ErrorCode::BadMagic, fmt::format("{} is not a raw tensor file", path.string()));
  }
  if (bytes.size() < kRawHeaderBytes) {
    throw Error(ErrorCode::TruncatedFile,
                fmt::format("{}: expected {} header bytes, found {}", path.string(), kRawHeaderBytes, bytes.size()));
  }
  const auto rows = load<std::uint32_t>(bytes.data() + 8);
  const auto cols = load<std::uint64_t>(bytes.data() + 12);
  RawTensor t;
  t.sample_rate_hz = load<double>(bytes.data() + 20);
  const std::uint64_t expected = kRawHeaderBytes + 4ull * rows * cols;
  if (bytes.size() != expected) {
    throw Error(ErrorCode::TruncatedFile,
                fmt::format("{}: expected {} bytes, found {}", path.string(), expected, bytes.size()));
  }
  std::vector<float> values(static_cast<std::size_t>(rows) * cols);
  std::memcpy(values.data(), bytes.data() + kRawHeaderBytes, values.size() * sizeof(float));
  t.data = SignalMatrix(rows, cols, std::move(values));
  return t;
}

void write_raw(const Recording& r, const std::filesystem::path& path) {
  validate_recording(r);
  write_raw_tensor(RawTensor{r.sample_rate_hz, r.data}, path);
}

Recording read_raw(const std::filesystem::path& path) {
  auto t = read_raw_tensor(path);
  Recording r;
  r.subject_id = path.stem().string();
  r.sample_rate_hz = t.sample_rate_hz;
  r.channel_names = default_channel_names(t.data.rows());
  r.data = std::move(t.data);
  return r;
}

BdfHeader read_bdf_header(const std::filesystem::path& path) {
  return parse_bdf_header(slurp(path), path).header;
}

Recording read_bdf(const std::filesystem::path& path) {
  const auto bytes = slurp(path);
  const auto parsed = parse_bdf_header(bytes, path);
  const auto& h = parsed.header;
  const std::size_t nc = h.channels.size();
  const auto spr = static_cast<std::size_t>(h.channels[0].samples_per_record);
  const auto n_records = static_cast<std::size_t>(h.n_records);
  const std::size_t record_bytes = nc * spr * 3;
  const std::size_t expected = parsed.header_bytes + n_records * record_bytes;
  if (bytes.size() < expected) {
    throw Error(ErrorCode::TruncatedFile,
                fmt::format("{}: expected {} bytes, found {}", path.string(), expected, bytes.size()));
  }

  std::vector<std::size_t> keep;
  for (std::size_t c = 0; c < nc; ++c) {
    if (h.channels[c].label == "Status") {
      std::cerr << "warning: " << path.string() << ": dropping Status channel " << c << '\n';
    } else {
      keep.push_back(c);
    }
  }

  Recording r;
  r.subject_id = path.stem().string();
  r.sample_rate_hz = static_cast<double>(spr) / h.record_duration_s;
  r.data = SignalMatrix(keep.size(), n_records * spr);
  for (std::size_t k = 0; k < keep.size(); ++k) r.channel_names.push_back(h.channels[keep[k]].label);

  const auto* base = reinterpret_cast<const unsigned char*>(bytes.data() + parsed.header_bytes);
  for (std::size_t k = 0; k < keep.size(); ++k) {
    const auto& ci = h.channels[keep[k]];
    const double gain = (ci.physical_max - ci.physical_min) / (static_cast<double>(ci.digital_max) - ci.digital_min);
    const double offset = ci.physical_min - gain * ci.digital_min;
    auto out = r.data.row(k);
    for (std::size_t rec = 0; rec < n_records; ++rec) {
      const unsigned char* p = base + rec * record_bytes + keep[k] * spr * 3;
      for (std::size_t s = 0; s < spr; ++s, p += 3) {
        std::int32_t v = p[0] | (p[1] << 8) | (p[2] << 16);
        if (v & 0x800000) v -= 0x1000000;
        out[rec * spr + s] = static_cast<float>(offset + gain * v);
      }
    }
  }
  return r;
}

void write_bdf(const Recording& r, const std::filesystem::path& path, const BdfWriteOptions& options) {
  validate_recording(r);
  const double spr_exact = r.sample_rate_hz * options.record_duration_s;
  const auto spr = static_cast<std::size_t>(std::llround(spr_exact));
  if (spr < 1 || std::abs(spr_exact - static_cast<double>(spr)) > 1e-9) {
    throw Error(ErrorCode::BadRate, fmt::format("{} Hz x {} s is not a whole number of samples per record",
                                                r.sample_rate_hz, options.record_duration_s));
  }
  const std::size_t nc = r.n_channels();
  const std::size_t n_records = (r.n_samples() + spr - 1) / spr;

  std::vector<PhysicalRange> ranges(nc);
  for (std::size_t c = 0; c < nc; ++c) {
    auto row = r.data.row(c);
    if (options.range) {
      ranges[c] = *options.range;
      for (std::size_t t = 0; t < row.size(); ++t) {
        if (row[t] < ranges[c].min || row[t] > ranges[c].max) {
          throw Error(ErrorCode::RangeOverflow,
                      fmt::format("sample {} at (channel {}, t {}) outside [{}, {}]", row[t], c, t,
                                  ranges[c].min, ranges[c].max));
        }
      }
    } else {
      auto [lo, hi] = std::minmax_element(row.begin(), row.end());
      // Widen so that the 8-character header text still encloses the data.
      const double margin = std::max(0.01 * (*hi - *lo), 1.0);
      ranges[c] = {*lo - margin, *hi + margin};
    }
    if (!(ranges[c].max > ranges[c].min)) {
      throw Error(ErrorCode::RangeOverflow, fmt::format("channel {}: empty physical range", c));
    }
  }

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, fmt::format("cannot create {}", path.string()));
  const std::size_t header_bytes = 256 + 256 * nc;
  out.put(static_cast<char>(0xFF));
  out << "BIOSEMI" << field(r.subject_id, 80) << field("forged-eeg", 80) << "01.01.00" << "00.00.00"
      << field(std::to_string(header_bytes), 8) << field("24BIT", 44)
      << field(std::to_string(n_records), 8) << number_field(options.record_duration_s, 8)
      << field(std::to_string(nc), 4);
  for (std::size_t c = 0; c < nc; ++c) out << field(r.channel_names[c], 16);
  for (std::size_t c = 0; c < nc; ++c) out << field("", 80);
  for (std::size_t c = 0; c < nc; ++c) out << field("uV", 8);
  for (std::size_t c = 0; c < nc; ++c) out << number_field(ranges[c].min, 8);
  for (std::size_t c = 0; c < nc; ++c) out << number_field(ranges[c].max, 8);
  for (std::size_t c = 0; c < nc; ++c) out << field(std::to_string(kBdfDigitalMin), 8);
  for (std::size_t c = 0; c < nc; ++c) out << field(std::to_string(kBdfDigitalMax), 8);
  for (std::size_t c = 0; c < nc; ++c) out << field("", 80);
  for (std::size_t c = 0; c < nc; ++c) out << field(std::to_string(spr), 8);
  for (std::size_t c = 0; c < nc; ++c) out << field("", 32);

  // The header stores ranges as decimal text; encode with the values a reader
  // will parse back so the round trip uses one consistent scale.
  std::vector<double> gains(nc), offsets(nc);
  for (std::size_t c = 0; c < nc; ++c) {
    const double pmin = std::stod(number_field(ranges[c].min, 8));
    const double pmax = std::stod(number_field(ranges[c].max, 8));
    gains[c] = (pmax - pmin) / (static_cast<double>(kBdfDigitalMax) - kBdfDigitalMin);
    offsets[c] = pmin - gains[c] * kBdfDigitalMin;
  }

  std::vector<char> record(nc * spr * 3);
  for (std::size_t rec = 0; rec < n_records; ++rec) {
    for (std::size_t c = 0; c < nc; ++c) {
      auto row = r.data.row(c);
      for (std::size_t s = 0; s < spr; ++s) {
        const std::size_t t = std::min(rec * spr + s, row.size() - 1);
        const double d = std::floor((row[t] - offsets[c]) / gains[c] + 0.5);
        const auto v = static_cast<std::int32_t>(std::clamp<double>(d, kBdfDigitalMin, kBdfDigitalMax));
        char* p = record.data() + (c * spr + s) * 3;
        p[0] = static_cast<char>(v & 0xFF);
        p[1] = static_cast<char>((v >> 8) & 0xFF);
        p[2] = static_cast<char>((v >> 16) & 0xFF);
      }
    }
    out.write(record.data(), static_cast<std::streamsize>(record.size()));
  }
  check_file(path, out);
}

Recording load_recording(const std::filesystem::path& path) {
  auto ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char ch) { return std::tolower(ch); });
  Recording r = ext == ".bdf" ? read_bdf(path) : read_raw(path);
  validate_recording(r);
  return r;
}

Recording load_recording(const ManifestEntry& entry) {
  Recording r = load_recording(entry.path);
  r.subject_id = entry.subject_id;
  r.label = entry.label;
  return r;
}

}  // namespace forged
