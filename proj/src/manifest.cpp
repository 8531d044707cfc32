#include "forged/manifest.hpp"

#include <fmt/format.h>
#include <fstream>
#include <sstream>

namespace forged {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

DatasetManifest parse_manifest(std::string_view text, const std::filesystem::path& base_dir) {
  DatasetManifest m;
  std::istringstream in{std::string(text)};
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    auto line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    if (auto eq = line.find('='); eq != std::string_view::npos) {
      auto key = trim(line.substr(0, eq));
      auto value = std::string(trim(line.substr(eq + 1)));
      if (key != "epoch_seconds") {
        throw Error(ErrorCode::BadSpec, fmt::format("manifest line {}: unknown key '{}'", line_no, key));
      }
      try {
        std::size_t used = 0;
        m.epoch_seconds = std::stod(value, &used);
        if (used != value.size() || !(m.epoch_seconds > 0)) throw std::invalid_argument(value);
      } catch (const std::exception&) {
        throw Error(ErrorCode::BadSpec,
                    fmt::format("manifest line {}: bad epoch_seconds '{}'", line_no, value));
      }
      continue;
    }
    std::istringstream fields{std::string(line)};
    std::string id, label, path, extra;
    if (!(fields >> id >> label >> path) || (fields >> extra)) {
      throw Error(ErrorCode::BadSpec,
                  fmt::format("manifest line {}: expected '<subject_id> <HC|PD> <path>'", line_no));
    }
    ManifestEntry e;
    e.subject_id = id;
    e.label = parse_label(label);
    std::filesystem::path p(path);
    e.path = p.is_absolute() ? p : base_dir / p;
    m.entries.push_back(std::move(e));
  }
  m.check_unique();
  return m;
}

DatasetManifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, fmt::format("cannot open manifest {}", path.string()));
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_manifest(buf.str(), path.parent_path());
}

void write_manifest(const DatasetManifest& m, const std::filesystem::path& path) {
  m.check_unique();
  const auto base = path.parent_path();
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, fmt::format("cannot write manifest {}", path.string()));
  out << fmt::format("epoch_seconds = {}\n", m.epoch_seconds);
  for (const auto& e : m.entries) {
    auto p = e.path;
    if (!base.empty()) {
      auto rel = p.lexically_relative(base);
      if (!rel.empty() && *rel.begin() != "..") p = rel;
    }
    out << fmt::format("{} {} {}\n", e.subject_id, to_string(e.label), p.generic_string());
  }
  if (!out) throw Error(ErrorCode::Io, fmt::format("failed writing {}", path.string()));
}

}  // namespace forged
