#include "robustkf/error.hpp"

namespace robustkf {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NonFiniteInput: return "NonFiniteInput";
    case ErrorCode::NotSymmetric: return "NotSymmetric";
    case ErrorCode::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorCode::NotPSD: return "NotPSD";
    case ErrorCode::InvalidBandwidth: return "InvalidBandwidth";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::Diverged: return "Diverged";
    case ErrorCode::SingularDesign: return "SingularDesign";
    case ErrorCode::BetaTooSmall: return "BetaTooSmall";
    case ErrorCode::BracketNotFound: return "BracketNotFound";
    case ErrorCode::ConfigParseError: return "ConfigParseError";
  }
  return "Unknown";
}

}  // namespace robustkf
