#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace tiox {

// Error kinds shared by all analysis modules. The CLI maps kinds onto exit
// codes; see exit_code().
enum class ErrorKind {
  InvalidArgument,
  Parse,
  Config,
  Usage,
  NoMatch,
  NonConvergence,
  IllPosed,
  DegenerateBreadth,
  OutOfRange,
  WindowTooShort,
  AllZeroChannel,
  MonotonicityViolation,
  StabilityViolation,
  DegenerateGrid,
  OutOfDomain,
  SchemaMismatch,
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

// Malformed text input. `line` is 1-based, 0 when not applicable.
class ParseError : public Error {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& msg);

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

inline void require(bool cond, ErrorKind kind, const std::string& what) {
  if (!cond) fail(kind, what);
}

// 0 ok, 2 usage/config, 3 parse, 4 numeric failure
int exit_code(ErrorKind kind);

}  // namespace tiox
