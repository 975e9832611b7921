#include "tiox/error.hpp"

namespace tiox {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::Parse: return "ParseError";
    case ErrorKind::Config: return "ConfigError";
    case ErrorKind::Usage: return "UsageError";
    case ErrorKind::NoMatch: return "NoMatch";
    case ErrorKind::NonConvergence: return "NonConvergence";
    case ErrorKind::IllPosed: return "IllPosed";
    case ErrorKind::DegenerateBreadth: return "DegenerateBreadth";
    case ErrorKind::OutOfRange: return "OutOfRange";
    case ErrorKind::WindowTooShort: return "WindowTooShort";
    case ErrorKind::AllZeroChannel: return "AllZeroChannel";
    case ErrorKind::MonotonicityViolation: return "MonotonicityViolation";
    case ErrorKind::StabilityViolation: return "StabilityViolation";
    case ErrorKind::DegenerateGrid: return "DegenerateGrid";
    case ErrorKind::OutOfDomain: return "OutOfDomain";
    case ErrorKind::SchemaMismatch: return "SchemaMismatch";
  }
  return "Error";
}

ParseError::ParseError(const std::string& source, std::size_t line, const std::string& msg)
    : Error(ErrorKind::Parse,
            line > 0 ? source + ":" + std::to_string(line) + ": " + msg : source + ": " + msg),
      line_(line) {}

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Usage:
    case ErrorKind::Config:
    case ErrorKind::InvalidArgument:
      return 2;
    case ErrorKind::Parse:
    case ErrorKind::SchemaMismatch:
      return 3;
    default:
      return 4;
  }
}

}  // namespace tiox
