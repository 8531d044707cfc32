#include "forged/forge.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <fstream>
#include <sstream>

#include "forged/ingest.hpp"

namespace forged {

Normalization parse_normalization(std::string_view name) {
  if (name == "joint") return Normalization::JointMinMax;
  if (name == "per-plane") return Normalization::PerPlaneMinMax;
  throw Error(ErrorCode::BadConfig, fmt::format("unknown normalization '{}' (joint|per-plane)", name));
}

std::string_view to_string(Normalization n) {
  return n == Normalization::JointMinMax ? "joint" : "per-plane";
}

ChannelGroups split_channels(std::size_t n_channels) {
  if (n_channels < 3) {
    throw Error(ErrorCode::TooFewChannels, fmt::format("{} channels cannot form three groups", n_channels));
  }
  ChannelGroups groups;
  const std::size_t base = n_channels / 3;
  const std::size_t extra = n_channels % 3;
  std::size_t next = 0;
  for (std::size_t g = 0; g < 3; ++g) {
    const std::size_t size = base + (g < extra ? 1 : 0);
    for (std::size_t i = 0; i < size; ++i) groups[g].push_back(next++);
  }
  return groups;
}

std::vector<double> average_group(const Epoch& e, std::span<const std::size_t> group) {
  if (group.empty()) throw Error(ErrorCode::Empty, "cannot average an empty channel group");
  std::vector<double> avg(e.data.cols(), 0.0);
  for (std::size_t ch : group) {
    if (ch >= e.data.rows()) throw Error(ErrorCode::BadIndex, fmt::format("channel {} of {}", ch, e.data.rows()));
    auto row = e.data.row(ch);
    for (std::size_t t = 0; t < avg.size(); ++t) avg[t] += row[t];
  }
  const double inv = 1.0 / static_cast<double>(group.size());
  for (auto& v : avg) v *= inv;
  return avg;
}

Plane to_plane(const TfrMatrix& m) { return Plane{m.n_freq, m.n_time, m.values}; }

Plane resize_bilinear(const Plane& m, std::size_t height, std::size_t width) {
  if (m.height < 2 || m.width < 2 || height < 2 || width < 2) {
    throw Error(ErrorCode::DegenerateInput,
                fmt::format("bilinear resize {}x{} -> {}x{} needs every side >= 2", m.height, m.width, height, width));
  }
  Plane out{height, width, std::vector<double>(height * width)};
  const double sy = static_cast<double>(m.height - 1) / static_cast<double>(height - 1);
  const double sx = static_cast<double>(m.width - 1) / static_cast<double>(width - 1);
  std::vector<std::size_t> x0(width);
  std::vector<double> fx(width);
  for (std::size_t j = 0; j < width; ++j) {
    const double x = std::min(static_cast<double>(j) * sx, static_cast<double>(m.width - 1));
    x0[j] = std::min(static_cast<std::size_t>(x), m.width - 2);
    fx[j] = x - static_cast<double>(x0[j]);
  }
  for (std::size_t i = 0; i < height; ++i) {
    const double y = std::min(static_cast<double>(i) * sy, static_cast<double>(m.height - 1));
    const std::size_t y0 = std::min(static_cast<std::size_t>(y), m.height - 2);
    const double fy = y - static_cast<double>(y0);
    const double* r0 = m.values.data() + y0 * m.width;
    const double* r1 = r0 + m.width;
    for (std::size_t j = 0; j < width; ++j) {
      const double top = r0[x0[j]] * (1.0 - fx[j]) + r0[x0[j] + 1] * fx[j];
      const double bottom = r1[x0[j]] * (1.0 - fx[j]) + r1[x0[j] + 1] * fx[j];
      out(i, j) = top * (1.0 - fy) + bottom * fy;
    }
  }
  return out;
}

ForgedImage normalize_stack(const Plane& p1, const Plane& p2, const Plane& p3, Normalization mode) {
  const std::array<const Plane*, 3> planes{&p1, &p2, &p3};
  for (const auto* p : planes) {
    if (p->height != p1.height || p->width != p1.width || p->values.size() != p1.height * p1.width) {
      throw Error(ErrorCode::ShapeMismatch, "planes to stack differ in shape");
    }
  }
  ForgedImage img;
  img.height = p1.height;
  img.width = p1.width;
  const std::size_t area = img.height * img.width;
  img.planes.assign(3 * area, 0.0f);

  auto range_of = [](const Plane& p) {
    auto [lo, hi] = std::minmax_element(p.values.begin(), p.values.end());
    return std::pair{*lo, *hi};
  };
  std::array<std::pair<double, double>, 3> ranges;
  for (std::size_t k = 0; k < 3; ++k) ranges[k] = range_of(*planes[k]);
  if (mode == Normalization::JointMinMax) {
    double lo = ranges[0].first, hi = ranges[0].second;
    for (const auto& r : ranges) {
      lo = std::min(lo, r.first);
      hi = std::max(hi, r.second);
    }
    ranges.fill({lo, hi});
  }
  for (std::size_t k = 0; k < 3; ++k) {
    const auto [lo, hi] = ranges[k];
    if (!(hi > lo)) continue;  // zero range: plane stays all zeros
    const double inv = 1.0 / (hi - lo);
    float* dst = img.planes.data() + k * area;
    for (std::size_t i = 0; i < area; ++i) {
      dst[i] = static_cast<float>(std::clamp((planes[k]->values[i] - lo) * inv, 0.0, 1.0));
    }
  }
  return img;
}

ForgedImage forge_epoch(const Epoch& e, const ForgeConfig& cfg, double sample_rate_hz) {
  const auto groups = split_channels(e);
  std::array<Plane, 3> planes;
  for (std::size_t g = 0; g < 3; ++g) {
    const auto avg = average_group(e, groups[g]);
    const auto tfr = spwvd(avg, cfg.spwvd, sample_rate_hz);
    planes[g] = resize_bilinear(to_plane(tfr), cfg.out_height, cfg.out_width);
  }
  auto img = normalize_stack(planes[0], planes[1], planes[2], cfg.normalization);
  img.subject_id = e.subject_id;
  img.label = e.label;
  img.epoch_index = e.epoch_index;
  return img;
}

void export_ppm(const ForgedImage& img, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, fmt::format("cannot create {}", path.string()));
  out << "P6\n" << img.width << ' ' << img.height << "\n255\n";
  const std::size_t area = img.height * img.width;
  std::vector<unsigned char> pixels(3 * area);
  for (std::size_t i = 0; i < area; ++i) {
    for (std::size_t p = 0; p < 3; ++p) {
      const double v = std::clamp(static_cast<double>(img.planes[p * area + i]), 0.0, 1.0);
      pixels[3 * i + p] = static_cast<unsigned char>(std::lround(v * 255.0));
    }
  }
  out.write(reinterpret_cast<const char*>(pixels.data()), static_cast<std::streamsize>(pixels.size()));
  if (!out) throw Error(ErrorCode::Io, fmt::format("failed writing {}", path.string()));
}

ForgedImage import_ppm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, fmt::format("cannot open {}", path.string()));
  std::string magic;
  std::size_t w = 0, h = 0, maxval = 0;
  in >> magic >> w >> h >> maxval;
  if (magic != "P6" || maxval != 255 || w == 0 || h == 0) {
    throw Error(ErrorCode::BadMagic, fmt::format("{} is not an 8-bit P6 file", path.string()));
  }
  in.get();  // single whitespace after maxval
  std::vector<unsigned char> pixels(3 * w * h);
  in.read(reinterpret_cast<char*>(pixels.data()), static_cast<std::streamsize>(pixels.size()));
  if (static_cast<std::size_t>(in.gcount()) != pixels.size()) {
    throw Error(ErrorCode::TruncatedFile,
                fmt::format("{}: expected {} pixel bytes, found {}", path.string(), pixels.size(), in.gcount()));
  }
  ForgedImage img;
  img.height = h;
  img.width = w;
  img.planes.resize(3 * w * h);
  const std::size_t area = w * h;
  for (std::size_t i = 0; i < area; ++i)
    for (std::size_t p = 0; p < 3; ++p) img.planes[p * area + i] = static_cast<float>(pixels[3 * i + p] / 255.0);
  return img;
}

void export_tfr_ppm(const TfrMatrix& m, const std::filesystem::path& path, std::size_t height, std::size_t width) {
  Plane p = to_plane(m);
  if (height >= 2 && width >= 2) p = resize_bilinear(p, height, width);
  auto img = normalize_stack(p, p, p, Normalization::JointMinMax);
  export_ppm(img, path);
}

void write_forged_image(const ForgedImage& img, const std::filesystem::path& path, double sample_rate_hz) {
  write_raw_tensor(RawTensor{sample_rate_hz, SignalMatrix(3, img.height * img.width, img.planes)}, path);
}

ForgedImage read_forged_image(const std::filesystem::path& path, const ForgedIndexEntry& entry, std::size_t height,
                              std::size_t width) {
  auto t = read_raw_tensor(path);
  if (t.data.rows() != 3 || t.data.cols() != height * width) {
    throw Error(ErrorCode::ShapeMismatch, fmt::format("{}: {}x{} tensor is not a 3x{}x{} image", path.string(),
                                                      t.data.rows(), t.data.cols(), height, width));
  }
  ForgedImage img;
  img.height = height;
  img.width = width;
  img.planes = std::move(t.data.values());
  img.subject_id = entry.subject_id;
  img.label = entry.label;
  img.epoch_index = entry.epoch_index;
  return img;
}

void write_forged_index(const ForgedIndex& index, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, fmt::format("cannot create {}", path.string()));
  out << fmt::format("# forged-index height {} width {}\n", index.height, index.width);
  const auto base = path.parent_path();
  for (const auto& e : index.entries) {
    auto file = e.file;
    if (!base.empty()) {
      auto rel = file.lexically_relative(base);
      if (!rel.empty() && *rel.begin() != "..") file = rel;
    }
    out << fmt::format("{} {} {} {}\n", file.generic_string(), e.subject_id, to_string(e.label), e.epoch_index);
  }
  if (!out) throw Error(ErrorCode::Io, fmt::format("failed writing {}", path.string()));
}

ForgedIndex read_forged_index(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, fmt::format("cannot open {}", path.string()));
  ForgedIndex index;
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::BadMagic, fmt::format("{} is empty", path.string()));
  {
    std::istringstream head(line);
    std::string hash, tag, hkey, wkey;
    if (!(head >> hash >> tag >> hkey >> index.height >> wkey >> index.width) || hash != "#" ||
        tag != "forged-index" || hkey != "height" || wkey != "width") {
      throw Error(ErrorCode::BadMagic, fmt::format("{}: missing forged-index header", path.string()));
    }
  }
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    std::istringstream fields(line);
    std::string file, id, label;
    ForgedIndexEntry e;
    if (!(fields >> file >> id >> label >> e.epoch_index)) {
      throw Error(ErrorCode::BadSpec, fmt::format("{}:{}: malformed index line", path.string(), line_no));
    }
    e.file = path.parent_path() / file;
    e.subject_id = id;
    e.label = parse_label(label);
    index.entries.push_back(std::move(e));
  }
  return index;
}

}  // namespace forged
