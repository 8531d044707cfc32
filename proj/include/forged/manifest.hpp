#pragma once

#include <filesystem>

#include "forged/core.hpp"

namespace forged {

// Manifest text format, one directive or entry per line:
//
//   # comment
//   epoch_seconds = 2.0
//   <subject_id> <HC|PD> <path>
//
// Relative paths are resolved against the manifest's directory. Paths may not
// contain whitespace.
DatasetManifest read_manifest(const std::filesystem::path& path);
DatasetManifest parse_manifest(std::string_view text, const std::filesystem::path& base_dir);
void write_manifest(const DatasetManifest& m, const std::filesystem::path& path);

}  // namespace forged
