// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The ProtoFuse Authors

#include "protofuse/optim.hpp"

#include <cmath>

#include "protofuse/error.hpp"
#include "protofuse/random.hpp"

namespace protofuse {

namespace {

const ParamGroup* match_group(const std::string& name, const std::vector<ParamGroup>& groups) {
  for (const auto& g : groups) {
    if (name.starts_with(g.prefix)) return &g;
  }
  return nullptr;
}

}  // namespace

void AdamW::step(ParamStore& store, const std::vector<ParamGroup>& groups) {
  for (const auto& g : groups) {
    require(g.lr > 0.0, ErrorCategory::invalid_argument, "learning rate must be positive");
  }
  require(options_.weight_decay >= 0.0, ErrorCategory::invalid_argument,
          "weight decay must be non-negative");

  std::vector<std::pair<const std::string*, const ParamGroup*>> active;
  for (const auto& [name, entry] : store.entries()) {
    if (entry.frozen) continue;
    const ParamGroup* group = match_group(name, groups);
    if (!group) continue;
    require(entry.tensor.has_grad(), ErrorCategory::invalid_state,
            "missing gradient for trainable parameter '" + name + "'");
    active.emplace_back(&name, group);
  }

  ++step_count_;
  const double t = static_cast<double>(step_count_);
  const double bc1 = 1.0 - std::pow(options_.beta1, t);
  const double bc2 = 1.0 - std::pow(options_.beta2, t);

  for (const auto& [name, group] : active) {
    Tensor& param = store.get(*name);
    const auto grad = param.grad();
    auto values = param.mutable_values();
    Moments& mom = state_[*name];
    if (mom.m.empty()) {
      mom.m.assign(values.size(), 0.0);
      mom.v.assign(values.size(), 0.0);
    }
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double g = grad[i];
      mom.m[i] = options_.beta1 * mom.m[i] + (1.0 - options_.beta1) * g;
      mom.v[i] = options_.beta2 * mom.v[i] + (1.0 - options_.beta2) * g * g;
      const double m_hat = mom.m[i] / bc1;
      const double v_hat = mom.v[i] / bc2;
      double next = values[i] - group->lr * (m_hat / (std::sqrt(v_hat) + options_.eps) +
                                             options_.weight_decay * values[i]);
      if (options_.f32_storage) next = to_f32_grid(next);
      require(std::isfinite(next), ErrorCategory::numeric,
              "optimizer produced a non-finite value in '" + *name + "'");
      values[i] = next;
    }
  }
}

}  // namespace protofuse
