#pragma once

#include <stdexcept>
#include <string>

namespace rlatent {

/// Invariant or argument violation. The CLI maps this to exit code 1.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// File could not be opened, read, or written. The CLI maps this to exit code 2.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw ValidationError(message);
}

void log_warning(const std::string& message);

/// Silences log_warning output (tests use this to keep logs clean).
void set_warnings_enabled(bool enabled);

}  // namespace rlatent
