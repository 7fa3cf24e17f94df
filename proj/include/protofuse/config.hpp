// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The ProtoFuse Authors

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace protofuse {

enum class ValueKind { text, choice, real, count, real_list };

struct ConfigKey {
  std::string name;
  ValueKind kind;
  std::string default_value;
  std::string help;
  std::vector<std::string> choices;  // ValueKind::choice only
};

/// Every recognised key with its default, in documentation order.
const std::vector<ConfigKey>& config_schema();

/// Flat key/value configuration.
///
/// File syntax: one `key = value` per line, `#` starts a comment, blank
/// lines are ignored. Keys are dotted names from config_schema(); unknown
/// keys and unparsable values are config errors.
class Config {
 public:
  /// All defaults.
  Config();

  void set(std::string_view key, std::string_view value);
  /// Applies `key=value`.
  void apply_override(std::string_view assignment);
  /// Applies a whole file's text; `origin` appears in error messages.
  void apply_text(std::string_view text, std::string_view origin);

  const std::string& text(std::string_view key) const;
  double real(std::string_view key) const;
  std::uint64_t count(std::string_view key) const;
  std::vector<double> real_list(std::string_view key) const;

  /// Sorted `key = value` lines covering every key.
  std::string resolved() const;

 private:
  std::map<std::string, std::string, std::less<>> values_;
};

/// Defaults, then the file (if any), then each override in order.
Config load_config(const std::filesystem::path* file, std::span<const std::string> overrides);

}  // namespace protofuse
