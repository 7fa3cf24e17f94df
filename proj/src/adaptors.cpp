// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The ProtoFuse Authors

#include "protofuse/adaptors.hpp"

#include <string>

#include "protofuse/error.hpp"
#include "protofuse/layers.hpp"

namespace protofuse {

std::string_view to_string(AdaptorKind kind) noexcept {
  switch (kind) {
    case AdaptorKind::linear: return "linear";
    case AdaptorKind::bottleneck: return "bottleneck";
    case AdaptorKind::residual: return "residual";
  }
  return "?";
}

AdaptorKind parse_adaptor_kind(std::string_view text) {
  if (text == "linear") return AdaptorKind::linear;
  if (text == "bottleneck") return AdaptorKind::bottleneck;
  if (text == "residual") return AdaptorKind::residual;
  fail(ErrorCategory::config, "unknown adaptor '" + std::string(text) + "'");
}

Adaptor::Adaptor(AdaptorKind kind, std::size_t d_text, std::size_t d_v)
    : kind_(kind), d_text_(d_text), d_v_(d_v) {
  require(d_text > 0 && d_v > 0, ErrorCategory::invalid_argument, "adaptor dimensions must be positive");
  if (kind != AdaptorKind::linear) {
    require(d_v % 4 == 0, ErrorCategory::invalid_argument,
            "bottleneck adaptors need d_v divisible by 4, got " + std::to_string(d_v));
  }
}

void Adaptor::register_params(ParamStore& store, std::uint64_t seed) const {
  switch (kind_) {
    case AdaptorKind::linear:
      register_linear(store, "adaptor.linear", d_text_, d_v_, seed);
      break;
    case AdaptorKind::bottleneck:
      register_linear(store, "adaptor.fc1", d_text_, hidden(), seed);
      register_linear(store, "adaptor.fc2", hidden(), d_v_, seed);
      break;
    case AdaptorKind::residual:
      register_linear(store, "adaptor.linear", d_text_, d_v_, seed);
      register_linear(store, "adaptor.fc1", d_v_, hidden(), seed);
      register_linear(store, "adaptor.fc2", hidden(), d_v_, seed);
      break;
  }
}

Tensor Adaptor::forward(const ParamStore& store, const Tensor& semantic) const {
  require(semantic.cols() == d_text_, ErrorCategory::invalid_argument,
          "adaptor input has " + std::to_string(semantic.cols()) + " features, expected " +
              std::to_string(d_text_));
  switch (kind_) {
    case AdaptorKind::linear:
      return apply_linear(store, "adaptor.linear", semantic);
    case AdaptorKind::bottleneck:
      return apply_linear(store, "adaptor.fc2", tanh(apply_linear(store, "adaptor.fc1", semantic)));
    case AdaptorKind::residual: {
      const Tensor base = apply_linear(store, "adaptor.linear", semantic);
      const Tensor branch =
          apply_linear(store, "adaptor.fc2", tanh(apply_linear(store, "adaptor.fc1", base)));
      return add(base, branch);
    }
  }
  fail(ErrorCategory::invalid_state, "unreachable adaptor kind");
}

}  // namespace protofuse
