// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The ProtoFuse Authors

#pragma once

#include <cstdint>
#include <string_view>

#include "protofuse/param_store.hpp"

namespace protofuse {

enum class FusionKind { add, concat, attention };

std::string_view to_string(FusionKind kind) noexcept;
FusionKind parse_fusion_kind(std::string_view text);

/// Combines visual features f and adapted semantic features z row by row.
///
///   add:       f + z
///   concat:    W_f (f || z), W_f shaped d_v x 2 d_v, no bias
///   attention: a = sigmoid(fc2(tanh(fc1(f || z)))), out = a z + (1 - a) f
class Fusion {
 public:
  Fusion(FusionKind kind, std::size_t d_v);

  FusionKind kind() const noexcept { return kind_; }

  void register_params(ParamStore& store, std::uint64_t seed) const;
  Tensor forward(const ParamStore& store, const Tensor& visual, const Tensor& semantic) const;
  /// Per-row fusion weight of the attention variant (m x 1).
  Tensor attention_weights(const ParamStore& store, const Tensor& visual, const Tensor& semantic) const;

 private:
  FusionKind kind_;
  std::size_t d_v_;
};

}  // namespace protofuse
