// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The ProtoFuse Authors

#pragma once

#include <functional>
#include <string>
#include <vector>

#include "protofuse/param_store.hpp"

namespace protofuse {

struct GradCheckEntry {
  std::string name;
  double max_rel_error = 0.0;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;

  double max_rel_error() const;
  /// Largest error among entries whose name starts with prefix (0 if none).
  double max_rel_error(const std::string& prefix) const;
};

using LossBuilder = std::function<Tensor(const ParamStore&)>;

/// Compares backprop gradients with central differences
/// (L(theta+h) - L(theta-h)) / 2h for every non-frozen entry. Relative error
/// uses max(|analytic|, |numeric|, 1e-8) as denominator. Throws
/// ErrorCategory::determinism if two evaluations at theta disagree.
/// `store` is restored exactly before returning.
GradCheckReport finite_diff_check(const LossBuilder& loss_builder, ParamStore& store, double step);

}  // namespace protofuse
