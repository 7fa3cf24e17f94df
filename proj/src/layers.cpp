// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The ProtoFuse Authors

#include "protofuse/layers.hpp"

#include <cmath>

#include "protofuse/random.hpp"

namespace protofuse {

void register_linear(ParamStore& store, const std::string& prefix, std::size_t in, std::size_t out,
                     std::uint64_t seed, LayerInit init, bool frozen) {
  const std::string wname = prefix + ".weight";
  std::vector<double> w(in * out, 0.0);
  if (init == LayerInit::uniform_fan_in) {
    Rng rng(mix_seed(seed, hash_name(wname)));
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    for (double& x : w) x = rng.uniform(-bound, bound);
  }
  store.add(wname, {out, in}, std::move(w), frozen);
  store.add(prefix + ".bias", {out}, std::vector<double>(out, 0.0), frozen);
}

Tensor apply_linear(const ParamStore& store, const std::string& prefix, const Tensor& x) {
  return linear(x, store.get(prefix + ".weight"), store.get(prefix + ".bias"));
}

}  // namespace protofuse
