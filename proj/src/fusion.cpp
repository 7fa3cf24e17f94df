// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The ProtoFuse Authors

#include "protofuse/fusion.hpp"

#include <cmath>
#include <string>

#include "protofuse/error.hpp"
#include "protofuse/layers.hpp"
#include "protofuse/random.hpp"

namespace protofuse {

std::string_view to_string(FusionKind kind) noexcept {
  switch (kind) {
    case FusionKind::add: return "add";
    case FusionKind::concat: return "concat";
    case FusionKind::attention: return "attention";
  }
  return "?";
}

FusionKind parse_fusion_kind(std::string_view text) {
  if (text == "add") return FusionKind::add;
  if (text == "concat") return FusionKind::concat;
  if (text == "attention") return FusionKind::attention;
  fail(ErrorCategory::config, "unknown fusion '" + std::string(text) + "'");
}

Fusion::Fusion(FusionKind kind, std::size_t d_v) : kind_(kind), d_v_(d_v) {
  require(d_v > 0, ErrorCategory::invalid_argument, "fusion width must be positive");
  if (kind == FusionKind::attention) {
    require(d_v % 4 == 0, ErrorCategory::invalid_argument, "attention fusion needs d_v divisible by 4");
  }
}

void Fusion::register_params(ParamStore& store, std::uint64_t seed) const {
  switch (kind_) {
    case FusionKind::add:
      break;
    case FusionKind::concat: {
      const std::string name = "fusion.concat.weight";
      Rng rng(mix_seed(seed, hash_name(name)));
      const double bound = 1.0 / std::sqrt(static_cast<double>(2 * d_v_));
      std::vector<double> w(d_v_ * 2 * d_v_);
      for (double& x : w) x = rng.uniform(-bound, bound);
      store.add(name, {d_v_, 2 * d_v_}, std::move(w), false);
      break;
    }
    case FusionKind::attention:
      register_linear(store, "fusion.att.fc1", 2 * d_v_, d_v_ / 4, seed);
      register_linear(store, "fusion.att.fc2", d_v_ / 4, 1, seed);
      break;
  }
}

Tensor Fusion::attention_weights(const ParamStore& store, const Tensor& visual,
                                 const Tensor& semantic) const {
  const Tensor joint = concat_cols({visual, semantic});
  const Tensor hidden = tanh(apply_linear(store, "fusion.att.fc1", joint));
  return sigmoid(apply_linear(store, "fusion.att.fc2", hidden));
}

Tensor Fusion::forward(const ParamStore& store, const Tensor& visual, const Tensor& semantic) const {
  require(visual.cols() == d_v_ && semantic.cols() == d_v_, ErrorCategory::invalid_argument,
          "fusion inputs must both have d_v = " + std::to_string(d_v_) + " features");
  require(visual.rows() == semantic.rows(), ErrorCategory::invalid_argument,
          "fusion inputs must have the same number of rows");
  switch (kind_) {
    case FusionKind::add:
      return add(visual, semantic);
    case FusionKind::concat:
      return linear(concat_cols({visual, semantic}), store.get("fusion.concat.weight"), Tensor{});
    case FusionKind::attention: {
      const Tensor alpha = attention_weights(store, visual, semantic);
      // a z + (1 - a) f  ==  f + a (z - f)
      return add(visual, mul(alpha, sub(semantic, visual)));
    }
  }
  fail(ErrorCategory::invalid_state, "unreachable fusion kind");
}

}  // namespace protofuse
