// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The ProtoFuse Authors

#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "protofuse/tensor.hpp"

namespace protofuse {

/// Named parameter leaves, iterated in lexicographic name order.
///
/// Copying a store deep-copies every value, so a copy is an independent
/// snapshot. Frozen entries are leaves with requires_grad off; they never
/// receive gradient and the optimizer never touches them.
class ParamStore {
 public:
  struct Entry {
    Tensor tensor;
    bool frozen = false;
  };

  ParamStore() = default;
  ParamStore(const ParamStore& other);
  ParamStore& operator=(const ParamStore& other);
  ParamStore(ParamStore&&) noexcept = default;
  ParamStore& operator=(ParamStore&&) noexcept = default;

  /// Registers a new entry; values are rounded onto the f32 grid.
  Tensor& add(const std::string& name, Shape shape, std::vector<double> values, bool frozen);
  void remove(const std::string& name);
  /// Drops every entry whose name starts with the prefix; returns how many.
  std::size_t remove_prefix(std::string_view prefix);

  bool contains(const std::string& name) const { return entries_.count(name) != 0; }
  const Tensor& get(const std::string& name) const;
  Tensor& get(const std::string& name);
  bool is_frozen(const std::string& name) const;
  void set_frozen(const std::string& name, bool frozen);

  std::vector<std::string> names() const;
  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }
  const std::map<std::string, Entry>& entries() const noexcept { return entries_; }

  void zero_grad();
  /// Total number of scalar values across all entries.
  std::size_t parameter_count() const;

 private:
  Entry& entry(const std::string& name);
  const Entry& entry(const std::string& name) const;

  std::map<std::string, Entry> entries_;
};

/// True when both stores hold the same names, shapes, flags and bit-identical values.
bool bitwise_equal(const ParamStore& a, const ParamStore& b);

/// True when every entry under `prefix` is bit-identical between the stores.
bool prefix_bitwise_equal(const ParamStore& a, const ParamStore& b, std::string_view prefix);

}  // namespace protofuse
