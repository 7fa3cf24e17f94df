// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The ProtoFuse Authors

#include "protofuse/grad_check.hpp"

#include <algorithm>
#include <cmath>

#include "protofuse/error.hpp"

namespace protofuse {

double GradCheckReport::max_rel_error() const { return max_rel_error(""); }

double GradCheckReport::max_rel_error(const std::string& prefix) const {
  double worst = 0.0;
  for (const auto& e : entries) {
    if (e.name.starts_with(prefix)) worst = std::max(worst, e.max_rel_error);
  }
  return worst;
}

GradCheckReport finite_diff_check(const LossBuilder& loss_builder, ParamStore& store, double step) {
  require(step > 0.0 && std::isfinite(step), ErrorCategory::invalid_argument,
          "finite-difference step must be positive");
  GradCheckReport report;

  std::vector<std::string> names;
  for (const auto& [name, entry] : store.entries()) {
    if (!entry.frozen) names.push_back(name);
  }
  if (names.empty()) return report;

  store.zero_grad();
  const Tensor loss = loss_builder(store);
  double repeat = 0.0;
  {
    NoGradGuard guard;
    repeat = loss_builder(store).item();
  }
  if (loss.item() != repeat) {
    fail(ErrorCategory::determinism, "loss builder is not deterministic at the base point");
  }
  loss.backward();

  auto eval = [&] {
    NoGradGuard guard;
    return loss_builder(store).item();
  };

  for (const auto& name : names) {
    Tensor& param = store.get(name);
    const std::vector<double> analytic =
        param.has_grad() ? std::vector<double>(param.grad().begin(), param.grad().end())
                         : std::vector<double>(param.numel(), 0.0);
    GradCheckEntry result{name};
    auto values = param.mutable_values();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double saved = values[i];
      values[i] = saved + step;
      const double up = eval();
      values[i] = saved - step;
      const double down = eval();
      values[i] = saved;
      const double numeric = (up - down) / (2.0 * step);
      const double denom = std::max({std::abs(analytic[i]), std::abs(numeric), 1e-8});
      const double rel = std::abs(analytic[i] - numeric) / denom;
      if (rel > result.max_rel_error || i == 0) {
        result.max_rel_error = std::max(result.max_rel_error, rel);
        result.worst_index = i;
        result.analytic = analytic[i];
        result.numeric = numeric;
      }
    }
    report.entries.push_back(std::move(result));
  }
  store.zero_grad();
  return report;
}

}  // namespace protofuse
