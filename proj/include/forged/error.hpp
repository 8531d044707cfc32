#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace forged {

enum class ErrorCode {
  ShapeMismatch,
  NonFinite,
  BadRate,
  EpochTooLong,
  BadMagic,
  TruncatedFile,
  MixedRates,
  RangeOverflow,
  BadSpec,
  BadBand,
  TooShort,
  NoConvergence,
  RankDeficient,
  BadIndex,
  EvenLength,
  TooFewChannels,
  DegenerateInput,
  BadLabel,
  EmptyDataset,
  TooFewSubjects,
  SingleClass,
  Empty,
  UnknownCommand,
  BadFlag,
  BadConfig,
  Io,
};

std::string_view to_string(ErrorCode code);

// All library failures are reported through this exception; `code()` names the
// contract that was violated and `what()` carries the context.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace forged
