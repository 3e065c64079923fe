#pragma once

#include <stdexcept>
#include <string>

namespace cinerecon {

// Error categories map 1:1 onto CLI exit codes and the machine-readable
// error records emitted on stderr.
enum class ErrorCategory {
  validation,  // bad arguments, shape mismatches, domain violations
  io,          // missing/malformed files
  config,      // unparseable or inconsistent run configuration
  state        // wrong run order (e.g. missing stage-1 checkpoint), schema mismatch
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& message)
      : std::runtime_error(message), category_(category) {}

  ErrorCategory category() const { return category_; }

  int exit_code() const {
    switch (category_) {
      case ErrorCategory::validation: return 2;
      case ErrorCategory::io: return 3;
      case ErrorCategory::config: return 4;
      case ErrorCategory::state: return 5;
    }
    return 1;
  }

  const char* category_name() const {
    switch (category_) {
      case ErrorCategory::validation: return "validation";
      case ErrorCategory::io: return "io";
      case ErrorCategory::config: return "config";
      case ErrorCategory::state: return "state";
    }
    return "unknown";
  }

 private:
  ErrorCategory category_;
};

inline void require(bool cond, ErrorCategory category, const std::string& message) {
  if (!cond) throw Error(category, message);
}

inline void require_valid(bool cond, const std::string& message) {
  require(cond, ErrorCategory::validation, message);
}

}  // namespace cinerecon
