// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The ProtoFuse Authors

#pragma once

#include <cstdint>
#include <string>

#include "protofuse/param_store.hpp"

namespace protofuse {

enum class LayerInit {
  uniform_fan_in,  // weights U(-1/sqrt(fan_in), 1/sqrt(fan_in)), bias 0
  zeros,
};

/// Registers `<prefix>.weight` (out x in) and `<prefix>.bias` (out). Each
/// tensor draws from its own stream keyed by (seed, name).
void register_linear(ParamStore& store, const std::string& prefix, std::size_t in, std::size_t out,
                     std::uint64_t seed, LayerInit init = LayerInit::uniform_fan_in,
                     bool frozen = false);

/// x W^T + b using the entries registered under `prefix`.
Tensor apply_linear(const ParamStore& store, const std::string& prefix, const Tensor& x);

}  // namespace protofuse
