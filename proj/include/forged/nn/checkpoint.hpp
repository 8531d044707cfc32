#pragma once

#include <filesystem>

#include "forged/nn/model.hpp"

namespace forged::nn {

// Layout documented in docs/checkpoint.md.
void save_checkpoint(const CnnModel& model, const std::filesystem::path& path);
CnnModel load_checkpoint(const std::filesystem::path& path);

}  // namespace forged::nn
