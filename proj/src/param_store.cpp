// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The ProtoFuse Authors

#include "protofuse/param_store.hpp"

#include <cstring>

#include "protofuse/error.hpp"
#include "protofuse/random.hpp"

namespace protofuse {

ParamStore::ParamStore(const ParamStore& other) { *this = other; }

ParamStore& ParamStore::operator=(const ParamStore& other) {
  if (this == &other) return *this;
  entries_.clear();
  for (const auto& [name, e] : other.entries_) {
    Tensor copy = e.tensor.detached_copy();
    copy.set_requires_grad(!e.frozen);
    entries_.emplace(name, Entry{std::move(copy), e.frozen});
  }
  return *this;
}

Tensor& ParamStore::add(const std::string& name, Shape shape, std::vector<double> values,
                        bool frozen) {
  require(!name.empty(), ErrorCategory::invalid_argument, "parameter names must be non-empty");
  require(!contains(name), ErrorCategory::invalid_argument, "duplicate parameter name '" + name + "'");
  for (double& v : values) v = to_f32_grid(v);
  Tensor t = Tensor::from(std::move(shape), std::move(values), !frozen);
  return entries_.emplace(name, Entry{std::move(t), frozen}).first->second.tensor;
}

void ParamStore::remove(const std::string& name) { entries_.erase(name); }

std::size_t ParamStore::remove_prefix(std::string_view prefix) {
  std::size_t removed = 0;
  for (auto it = entries_.begin(); it != entries_.end();) {
    if (it->first.starts_with(prefix)) {
      it = entries_.erase(it);
      ++removed;
    } else {
      ++it;
    }
  }
  return removed;
}

ParamStore::Entry& ParamStore::entry(const std::string& name) {
  auto it = entries_.find(name);
  require(it != entries_.end(), ErrorCategory::invalid_argument, "unknown parameter '" + name + "'");
  return it->second;
}

const ParamStore::Entry& ParamStore::entry(const std::string& name) const {
  auto it = entries_.find(name);
  require(it != entries_.end(), ErrorCategory::invalid_argument, "unknown parameter '" + name + "'");
  return it->second;
}

const Tensor& ParamStore::get(const std::string& name) const { return entry(name).tensor; }
Tensor& ParamStore::get(const std::string& name) { return entry(name).tensor; }
bool ParamStore::is_frozen(const std::string& name) const { return entry(name).frozen; }

void ParamStore::set_frozen(const std::string& name, bool frozen) {
  Entry& e = entry(name);
  e.frozen = frozen;
  e.tensor.set_requires_grad(!frozen);
}

std::vector<std::string> ParamStore::names() const {
  std::vector<std::string> out;
  out.reserve(entries_.size());
  for (const auto& [name, _] : entries_) out.push_back(name);
  return out;
}

void ParamStore::zero_grad() {
  for (auto& [_, e] : entries_) e.tensor.clear_grad();
}

std::size_t ParamStore::parameter_count() const {
  std::size_t n = 0;
  for (const auto& [_, e] : entries_) n += e.tensor.numel();
  return n;
}

namespace {

bool same_entry(const ParamStore::Entry& x, const ParamStore::Entry& y) {
  if (x.frozen != y.frozen || x.tensor.shape() != y.tensor.shape()) return false;
  const auto a = x.tensor.values();
  const auto b = y.tensor.values();
  return std::memcmp(a.data(), b.data(), a.size_bytes()) == 0;
}

}  // namespace

bool bitwise_equal(const ParamStore& a, const ParamStore& b) {
  if (a.size() != b.size()) return false;
  auto ia = a.entries().begin();
  auto ib = b.entries().begin();
  for (; ia != a.entries().end(); ++ia, ++ib) {
    if (ia->first != ib->first || !same_entry(ia->second, ib->second)) return false;
  }
  return true;
}

bool prefix_bitwise_equal(const ParamStore& a, const ParamStore& b, std::string_view prefix) {
  std::size_t count_a = 0;
  for (const auto& [name, e] : a.entries()) {
    if (!name.starts_with(prefix)) continue;
    ++count_a;
    auto it = b.entries().find(name);
    if (it == b.entries().end() || !same_entry(e, it->second)) return false;
  }
  std::size_t count_b = 0;
  for (const auto& [name, _] : b.entries()) count_b += name.starts_with(prefix);
  return count_a == count_b;
}

}  // namespace protofuse
