#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mcmot {

// Machine-parsable failure classes; the CLI maps each to its own exit code.
enum class ErrorCategory {
  domain,    // precondition on values violated (non-positive box, bad frame order)
  numeric,   // singular / non-PD matrix
  parse,     // malformed file content
  config,    // invalid configuration or impossible scenario
  mismatch,  // cross-file key or camera-set disagreement
  io,        // filesystem failures
};

inline constexpr std::string_view to_string(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::domain: return "domain";
    case ErrorCategory::numeric: return "numeric";
    case ErrorCategory::parse: return "parse";
    case ErrorCategory::config: return "config";
    case ErrorCategory::mismatch: return "mismatch";
    case ErrorCategory::io: return "io";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& what)
      : std::runtime_error(what), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

[[noreturn]] inline void fail(ErrorCategory c, const std::string& msg) { throw Error(c, msg); }

}  // namespace mcmot
