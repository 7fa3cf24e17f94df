// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The ProtoFuse Authors

#pragma once

#include <cstdint>
#include <string_view>

#include "protofuse/param_store.hpp"

namespace protofuse {

enum class AdaptorKind { linear, bottleneck, residual };

std::string_view to_string(AdaptorKind kind) noexcept;
AdaptorKind parse_adaptor_kind(std::string_view text);

/// Maps semantic features (d_text) into visual space (d_v).
///
///   linear:     z = W0 g + b0
///   bottleneck: z = W2 tanh(W1 g + b1) + b2, hidden width d_v / 4
///   residual:   z' = W0 g + b0;  z = z' + W2 tanh(W1 z' + b1) + b2
///
/// Entries live under adaptor.linear / adaptor.fc1 / adaptor.fc2.
class Adaptor {
 public:
  Adaptor(AdaptorKind kind, std::size_t d_text, std::size_t d_v);

  AdaptorKind kind() const noexcept { return kind_; }
  std::size_t hidden() const noexcept { return d_v_ / 4; }

  void register_params(ParamStore& store, std::uint64_t seed) const;
  /// Rows of semantic features (n x d_text) to rows of d_v features.
  Tensor forward(const ParamStore& store, const Tensor& semantic) const;

 private:
  AdaptorKind kind_;
  std::size_t d_text_;
  std::size_t d_v_;
};

}  // namespace protofuse
