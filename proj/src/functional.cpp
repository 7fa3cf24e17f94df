// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The ProtoFuse Authors

#include "protofuse/functional.hpp"

#include <cmath>

#include "protofuse/error.hpp"
#include "protofuse/tensor.hpp"

namespace protofuse {

namespace {

void require_finite(std::span<const double> v, const char* what) {
  for (double x : v) {
    require(std::isfinite(x), ErrorCategory::invalid_argument, std::string(what) + " must be finite");
  }
}

void require_distribution(std::span<const double> p, const char* what) {
  double total = 0.0;
  for (double x : p) {
    require(std::isfinite(x) && x >= 0.0, ErrorCategory::invalid_argument,
            std::string(what) + " has a negative or non-finite entry");
    total += x;
  }
  require(std::abs(total - 1.0) <= 1e-6, ErrorCategory::invalid_argument,
          std::string(what) + " does not sum to 1");
}

}  // namespace

std::vector<double> softmax(std::span<const double> logits, double temperature) {
  require(!logits.empty(), ErrorCategory::invalid_argument, "softmax of an empty vector");
  require_finite(logits, "logits");
  const Tensor out = softmax_rows(Tensor::vector(logits), temperature);
  return {out.values().begin(), out.values().end()};
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  require(a.size() == b.size() && !a.empty(), ErrorCategory::invalid_argument,
          "cosine_similarity needs two non-empty vectors of equal length");
  require_finite(a, "cosine input");
  require_finite(b, "cosine input");
  return cosine_rows(Tensor::vector(a), Tensor::vector(b)).item();
}

double kl_divergence(std::span<const double> p, std::span<const double> q) {
  require(p.size() == q.size() && !p.empty(), ErrorCategory::invalid_argument,
          "kl_divergence needs two non-empty vectors of equal length");
  require_distribution(p, "p");
  require_distribution(q, "q");
  return kl_rows_mean(Tensor::vector(p), Tensor::vector(q)).item();
}

std::size_t argmax(std::span<const double> values) {
  require(!values.empty(), ErrorCategory::invalid_argument, "argmax of an empty vector");
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

}  // namespace protofuse
