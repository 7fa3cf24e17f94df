// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The ProtoFuse Authors

#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "protofuse/param_store.hpp"

namespace protofuse {

using TokenId = std::uint32_t;

/// Reserved ids for the four words of the fixed phrase "a photo of a".
inline constexpr std::array<TokenId, 4> kFixedPhraseTokens{0, 1, 2, 3};
/// Class-name tokens are allocated from here upwards.
inline constexpr TokenId kFirstClassToken = 4;

// ---------------------------------------------------------------------------
// Visual encoder: d_in -> d_h -> d_h -> d_v perceptron with tanh hidden units.

struct VisualEncoderConfig {
  std::size_t d_in = 32;
  std::size_t d_h = 128;
  std::size_t d_v = 64;
};

class VisualEncoder {
 public:
  explicit VisualEncoder(VisualEncoderConfig config);

  const VisualEncoderConfig& config() const noexcept { return config_; }

  /// Registers visual.layer{1,2,3}.{weight,bias}.
  void register_params(ParamStore& store, std::uint64_t seed) const;
  /// Registers the pre-training head head.{weight,bias} over `num_classes`.
  void register_head(ParamStore& store, std::size_t num_classes, std::uint64_t seed) const;

  /// Rows of raw features (m x d_in) to rows of visual features (m x d_v).
  Tensor forward(const ParamStore& store, const Tensor& raw) const;
  Tensor head_logits(const ParamStore& store, const Tensor& features) const;

  /// Single-sample convenience used by tests and tooling.
  std::vector<double> encode(const ParamStore& store, std::span<const double> raw) const;

 private:
  VisualEncoderConfig config_;
};

// ---------------------------------------------------------------------------
// Frozen semantic encoder (language-model stand-in).

/// Associates a class-name token with the class's semantic attributes; the
/// encoder derives that token's embedding from them.
struct ClassToken {
  TokenId token = 0;
  std::vector<float> attributes;
};

struct SemanticEncoderConfig {
  std::size_t vocab = 1024;
  std::size_t d_text = 512;
  /// Std of the mixer entries; a unit-norm pooled input gives pre-activations of this std.
  double mixer_gain = 3.0;
  double bias_scale = 0.5;
};

/// Token sequence handed to the semantic encoder: context rows followed by
/// one class-name token.
struct Prompt {
  Tensor context;  // L x d_text; undefined when L = 0
  TokenId class_token = 0;
};

class SemanticEncoder {
 public:
  explicit SemanticEncoder(SemanticEncoderConfig config);

  const SemanticEncoderConfig& config() const noexcept { return config_; }

  /// Registers the frozen entries semantic.token_table, semantic.mixer.{weight,bias}.
  /// Rows of bound class tokens become normalize(P a) for a fixed seeded
  /// projection P; every other row is a unit-normalized Gaussian draw.
  void register_params(ParamStore& store, std::uint64_t seed,
                       std::span<const ClassToken> class_tokens) const;

  Tensor token_rows(const ParamStore& store, std::span<const TokenId> ids) const;

  /// mean(context rows, token row) as a 1 x d_text row.
  Tensor pool(const ParamStore& store, const Prompt& prompt) const;
  /// tanh(mixer * pool(prompt) + bias), 1 x d_text.
  Tensor encode(const ParamStore& store, const Prompt& prompt) const;
  /// One encode per prompt, stacked into N x d_text with a single mixer pass.
  Tensor encode_batch(const ParamStore& store, std::span<const Prompt> prompts) const;

 private:
  void check_token(TokenId id) const;
  SemanticEncoderConfig config_;
};

// ---------------------------------------------------------------------------
// Prompt composition.

enum class PromptMode { fixed, dataset, class_aware, task_aware };

struct PromptConfig {
  PromptMode mode = PromptMode::dataset;
  std::size_t length = 4;
  std::size_t d_text = 512;
  std::size_t d_v = 64;
};

class PromptBank {
 public:
  explicit PromptBank(PromptConfig config);

  const PromptConfig& config() const noexcept { return config_; }
  bool needs_conditioning() const noexcept {
    return config_.mode == PromptMode::class_aware || config_.mode == PromptMode::task_aware;
  }

  /// Registers prompt.context (L x d_text, initialized from the fixed-phrase
  /// rows) for learnable modes, plus the conditioning net for class/task
  /// modes: d_v -> d_text/4 (tanh) -> d_text with a zero final layer.
  /// The semantic entries must already be registered.
  void register_params(ParamStore& store, std::uint64_t seed) const;

  /// Context rows for one prompt. `conditioning` is the class prototype in
  /// class mode or the sum of the episode's prototypes in task mode; other
  /// modes ignore it.
  Tensor compose(const ParamStore& store, const SemanticEncoder& semantic,
                 const Tensor* conditioning = nullptr) const;

  std::string conditioning_net_prefix() const;

 private:
  PromptConfig config_;
};

}  // namespace protofuse
