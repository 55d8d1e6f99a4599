#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace robustkf {

enum class ErrorCode {
  DimensionMismatch,
  NonFiniteInput,
  NotSymmetric,
  NotPositiveDefinite,
  NotPSD,
  InvalidBandwidth,
  InvalidConfig,
  EmptyInput,
  Diverged,
  SingularDesign,
  BetaTooSmall,
  BracketNotFound,
  ConfigParseError,
};

std::string_view to_string(ErrorCode code) noexcept;

// Every failure raised by the library carries one of the codes above so
// callers (the Monte Carlo harness, the CLI) can classify it.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace robustkf
