#include <fmt/format.h>

#include "forged/app/commands.hpp"

int main(int argc, char** argv) {
  using namespace forged::app;
  ParsedArgs parsed;
  try {
    parsed = parse_args({argv + 1, argv + argc});
  } catch (const std::exception& e) {
    fmt::print(stderr, "forged_eeg: {}\n", e.what());
    return 2;
  }
  if (parsed.help) {
    fmt::print("{}", parsed.help_text);
    return 0;
  }
  return run_command(parsed.command, parsed.config);
}
