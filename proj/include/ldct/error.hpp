#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ldct {

/// Failure categories surfaced by the CLI as `error: <category>: <message>`.
enum class ErrorCategory {
  invalid_argument,
  shape_mismatch,
  config,
  io,
  format,
  state,
};

std::string_view to_string(ErrorCategory category);

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& message)
      : std::runtime_error(message), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

[[noreturn]] inline void fail(ErrorCategory category, const std::string& message) {
  throw Error(category, message);
}

inline void require(bool condition, ErrorCategory category, const std::string& message) {
  if (!condition) throw Error(category, message);
}

}  // namespace ldct
