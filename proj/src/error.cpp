// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The ProtoFuse Authors

#include "protofuse/error.hpp"

namespace protofuse {

std::string_view category_name(ErrorCategory category) noexcept {
  switch (category) {
    case ErrorCategory::invalid_argument: return "invalid_argument";
    case ErrorCategory::invalid_state: return "invalid_state";
    case ErrorCategory::numeric: return "numeric";
    case ErrorCategory::determinism: return "determinism";
    case ErrorCategory::format: return "format";
    case ErrorCategory::io: return "io";
    case ErrorCategory::capacity: return "capacity";
    case ErrorCategory::config: return "config";
  }
  return "unknown";
}

}  // namespace protofuse
