#pragma once

#include <stdexcept>
#include <string>

namespace campussim {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Degree sequences or capacities that cannot produce a valid network.
struct InfeasibleError : Error {
  using Error::Error;
};

/// Malformed input text. `line` is 1-based, 0 when not tied to a line.
struct ParseError : Error {
  ParseError(const std::string& what, int line_no)
      : Error(line_no > 0 ? "line " + std::to_string(line_no) + ": " + what : what),
        line(line_no) {}
  int line = 0;
};

/// Scenario configuration rejected by the validator.
struct ConfigError : ParseError {
  ConfigError(const std::string& what, int line_no, std::string offending_key = {})
      : ParseError(what, line_no), key(std::move(offending_key)) {}
  std::string key;
};

/// Caller broke a documented precondition.
struct ContractViolation : std::logic_error {
  using std::logic_error::logic_error;
};

}  // namespace campussim
