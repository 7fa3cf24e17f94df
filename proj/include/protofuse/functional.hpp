// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The ProtoFuse Authors

#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace protofuse {

/// exp(l_i / t) / sum_j exp(l_j / t), max-shifted. Throws invalid_argument on
/// empty or non-finite logits and on a non-positive temperature.
std::vector<double> softmax(std::span<const double> logits, double temperature = 1.0);

/// a.b / (|a||b|). A zero-norm argument yields 0 and increments
/// zero_norm_events() instead of throwing.
double cosine_similarity(std::span<const double> a, std::span<const double> b);

/// sum_i p_i ln(p_i / max(q_i, 1e-12)) with 0 ln 0 = 0. Both inputs must be
/// non-negative, equally long and sum to 1 within 1e-6.
double kl_divergence(std::span<const double> p, std::span<const double> q);

/// Index of the largest entry; ties go to the lowest index.
std::size_t argmax(std::span<const double> values);

}  // namespace protofuse
