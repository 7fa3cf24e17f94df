// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The ProtoFuse Authors

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "protofuse/param_store.hpp"

namespace protofuse {

struct AdamWOptions {
  double weight_decay = 5e-2;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  /// Round updated values onto the f32 grid so in-memory parameters always
  /// equal what a checkpoint would store.
  bool f32_storage = true;
};

/// Entries whose name starts with `prefix` train at `lr`. The first matching
/// group wins; entries matching no group are left alone.
struct ParamGroup {
  std::string prefix;
  double lr = 5e-4;
};

/// Decoupled weight decay Adam:
///   m = b1 m + (1-b1) g,  v = b2 v + (1-b2) g^2,
///   theta -= lr * (m_hat / (sqrt(v_hat) + eps) + wd * theta).
class AdamW {
 public:
  explicit AdamW(AdamWOptions options = {}) : options_(options) {}

  /// One update. Every non-frozen entry covered by a group must carry a
  /// gradient, otherwise invalid_state is thrown before anything changes.
  void step(ParamStore& store, const std::vector<ParamGroup>& groups);

  std::uint64_t step_count() const noexcept { return step_count_; }
  const AdamWOptions& options() const noexcept { return options_; }

 private:
  struct Moments {
    std::vector<double> m;
    std::vector<double> v;
  };

  AdamWOptions options_;
  std::uint64_t step_count_ = 0;
  std::map<std::string, Moments> state_;
};

}  // namespace protofuse
