// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The ProtoFuse Authors

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace protofuse {

enum class ErrorCategory {
  invalid_argument,
  invalid_state,
  numeric,
  determinism,
  format,
  io,
  capacity,
  config,
};

/// Stable machine-readable name for a category, used on the CLI error line.
std::string_view category_name(ErrorCategory category) noexcept;

/// Single exception type for the library; callers branch on category().
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
  if (!condition) fail(category, message);
}

}  // namespace protofuse
