#pragma once

#include <iostream>
#include <string>
#include <vector>

#include "forged/app/config.hpp"

namespace forged::app {

inline constexpr const char* kCommands[] = {"synth", "ingest", "preprocess", "forge", "train", "losocv", "tfr-plot"};

struct ParsedArgs {
  std::string command;
  AppConfig config;
  bool help = false;  // --help was given; help_text holds the usage
  std::string help_text;
};

// args excludes the program name. Throws UnknownCommand or BadFlag; the
// message of the latter names the offending token.
ParsedArgs parse_args(const std::vector<std::string>& args);

// Runs one command and returns the process exit status. Failures are reported
// on `diagnostics` with file or subject context.
int run_command(const std::string& command, const AppConfig& cfg, std::ostream& diagnostics = std::cerr);

// Per-recording cleaning as configured (band-pass, then ICA rejection).
Recording preprocess_recording(const Recording& r, const PreprocessSettings& s, std::uint64_t base_seed);

}  // namespace forged::app
