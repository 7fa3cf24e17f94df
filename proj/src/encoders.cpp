// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The ProtoFuse Authors

#include "protofuse/encoders.hpp"

#include <cmath>
#include <string>

#include "protofuse/error.hpp"
#include "protofuse/layers.hpp"
#include "protofuse/random.hpp"

namespace protofuse {

// ---------------------------------------------------------------------------
// VisualEncoder

VisualEncoder::VisualEncoder(VisualEncoderConfig config) : config_(config) {
  require(config_.d_in > 0 && config_.d_h > 0 && config_.d_v > 0, ErrorCategory::invalid_argument,
          "visual encoder dimensions must be positive");
}

void VisualEncoder::register_params(ParamStore& store, std::uint64_t seed) const {
  register_linear(store, "visual.layer1", config_.d_in, config_.d_h, seed);
  register_linear(store, "visual.layer2", config_.d_h, config_.d_h, seed);
  register_linear(store, "visual.layer3", config_.d_h, config_.d_v, seed);
}

void VisualEncoder::register_head(ParamStore& store, std::size_t num_classes, std::uint64_t seed) const {
  require(num_classes > 0, ErrorCategory::invalid_argument, "head needs at least one class");
  register_linear(store, "head", config_.d_v, num_classes, seed);
}

Tensor VisualEncoder::forward(const ParamStore& store, const Tensor& raw) const {
  require(raw.cols() == config_.d_in, ErrorCategory::invalid_argument,
          "visual input has " + std::to_string(raw.cols()) + " features, expected " +
              std::to_string(config_.d_in));
  Tensor h = tanh(apply_linear(store, "visual.layer1", raw));
  h = tanh(apply_linear(store, "visual.layer2", h));
  return apply_linear(store, "visual.layer3", h);
}

Tensor VisualEncoder::head_logits(const ParamStore& store, const Tensor& features) const {
  return apply_linear(store, "head", features);
}

std::vector<double> VisualEncoder::encode(const ParamStore& store, std::span<const double> raw) const {
  require(raw.size() == config_.d_in, ErrorCategory::invalid_argument,
          "visual input has " + std::to_string(raw.size()) + " features, expected " +
              std::to_string(config_.d_in));
  NoGradGuard guard;
  const Tensor out = forward(store, Tensor::vector(raw));
  return {out.values().begin(), out.values().end()};
}

// ---------------------------------------------------------------------------
// SemanticEncoder

SemanticEncoder::SemanticEncoder(SemanticEncoderConfig config) : config_(config) {
  require(config_.d_text > 0, ErrorCategory::invalid_argument, "d_text must be positive");
  require(config_.vocab > kFirstClassToken, ErrorCategory::invalid_argument,
          "vocabulary too small for the reserved phrase tokens");
}

void SemanticEncoder::register_params(ParamStore& store, std::uint64_t seed,
                                      std::span<const ClassToken> class_tokens) const {
  const std::size_t d = config_.d_text;
  std::vector<double> table(config_.vocab * d);
  {
    Rng rng(mix_seed(seed, hash_name("semantic.token_table")));
    for (double& x : table) x = rng.normal();
  }

  if (!class_tokens.empty()) {
    const std::size_t attr_dim = class_tokens.front().attributes.size();
    require(attr_dim > 0, ErrorCategory::invalid_argument, "class tokens need attributes");
    Rng rng(mix_seed(seed, hash_name("semantic.attribute_projection")));
    std::vector<double> projection(d * attr_dim);
    for (double& x : projection) x = rng.normal();
    for (const auto& ct : class_tokens) {
      check_token(ct.token);
      require(ct.token >= kFirstClassToken, ErrorCategory::invalid_argument,
              "class tokens may not reuse the reserved phrase ids");
      require(ct.attributes.size() == attr_dim, ErrorCategory::invalid_argument,
              "class attribute vectors must share one length");
      double* row = table.data() + static_cast<std::size_t>(ct.token) * d;
      for (std::size_t i = 0; i < d; ++i) {
        double acc = 0.0;
        for (std::size_t k = 0; k < attr_dim; ++k) acc += projection[i * attr_dim + k] * ct.attributes[k];
        row[i] = acc;
      }
    }
  }

  for (std::size_t r = 0; r < config_.vocab; ++r) {
    double* row = table.data() + r * d;
    double norm = 0.0;
    for (std::size_t i = 0; i < d; ++i) norm += row[i] * row[i];
    norm = std::sqrt(norm);
    require(norm > 0.0, ErrorCategory::invalid_argument,
            "token row " + std::to_string(r) + " has zero norm");
    for (std::size_t i = 0; i < d; ++i) row[i] /= norm;
  }
  store.add("semantic.token_table", {config_.vocab, d}, std::move(table), true);

  std::vector<double> mixer(d * d);
  std::vector<double> bias(d);
  {
    Rng rng(mix_seed(seed, hash_name("semantic.mixer.weight")));
    for (double& x : mixer) x = config_.mixer_gain * rng.normal();
    Rng brng(mix_seed(seed, hash_name("semantic.mixer.bias")));
    for (double& x : bias) x = config_.bias_scale * brng.normal();
  }
  store.add("semantic.mixer.weight", {d, d}, std::move(mixer), true);
  store.add("semantic.mixer.bias", {d}, std::move(bias), true);
}

void SemanticEncoder::check_token(TokenId id) const {
  require(id < config_.vocab, ErrorCategory::invalid_argument,
          "token id " + std::to_string(id) + " outside vocabulary of " + std::to_string(config_.vocab));
}

Tensor SemanticEncoder::token_rows(const ParamStore& store, std::span<const TokenId> ids) const {
  std::vector<std::size_t> idx;
  idx.reserve(ids.size());
  for (TokenId id : ids) {
    check_token(id);
    idx.push_back(id);
  }
  return gather_rows(store.get("semantic.token_table"), idx);
}

Tensor SemanticEncoder::pool(const ParamStore& store, const Prompt& prompt) const {
  const TokenId id = prompt.class_token;
  Tensor token = token_rows(store, std::span<const TokenId>(&id, 1));
  if (!prompt.context.defined()) return token;
  require(prompt.context.cols() == config_.d_text, ErrorCategory::invalid_argument,
          "prompt context width does not match d_text");
  return mean_rows(concat_rows({prompt.context, token}));
}

Tensor SemanticEncoder::encode(const ParamStore& store, const Prompt& prompt) const {
  return tanh(apply_linear(store, "semantic.mixer", pool(store, prompt)));
}

Tensor SemanticEncoder::encode_batch(const ParamStore& store, std::span<const Prompt> prompts) const {
  require(!prompts.empty(), ErrorCategory::invalid_argument, "encode_batch needs at least one prompt");
  std::vector<Tensor> pooled;
  pooled.reserve(prompts.size());
  for (const auto& p : prompts) pooled.push_back(pool(store, p));
  return tanh(apply_linear(store, "semantic.mixer", concat_rows(pooled)));
}

// ---------------------------------------------------------------------------
// PromptBank

PromptBank::PromptBank(PromptConfig config) : config_(config) {
  require(config_.d_text > 0 && config_.d_v > 0, ErrorCategory::invalid_argument,
          "prompt dimensions must be positive");
  if (needs_conditioning()) {
    require(config_.d_text % 4 == 0, ErrorCategory::invalid_argument,
            "conditional prompts need d_text divisible by 4");
  }
}

std::string PromptBank::conditioning_net_prefix() const {
  return config_.mode == PromptMode::task_aware ? "prompt.task_net" : "prompt.class_net";
}

void PromptBank::register_params(ParamStore& store, std::uint64_t seed) const {
  if (config_.mode == PromptMode::fixed) return;
  if (config_.length > 0) {
    const Tensor& table = store.get("semantic.token_table");
    require(table.cols() == config_.d_text, ErrorCategory::invalid_argument,
            "prompt d_text does not match the semantic encoder");
    std::vector<double> init;
    init.reserve(config_.length * config_.d_text);
    for (std::size_t l = 0; l < config_.length; ++l) {
      const auto row = table.row(kFixedPhraseTokens[l % kFixedPhraseTokens.size()]);
      init.insert(init.end(), row.begin(), row.end());
    }
    store.add("prompt.context", {config_.length, config_.d_text}, std::move(init), false);
  }
  if (needs_conditioning()) {
    const std::string net = conditioning_net_prefix();
    register_linear(store, net + ".fc1", config_.d_v, config_.d_text / 4, seed);
    register_linear(store, net + ".fc2", config_.d_text / 4, config_.d_text, seed, LayerInit::zeros);
  }
}

Tensor PromptBank::compose(const ParamStore& store, const SemanticEncoder& semantic,
                           const Tensor* conditioning) const {
  if (config_.mode == PromptMode::fixed) return semantic.token_rows(store, kFixedPhraseTokens);
  if (config_.length == 0) return {};
  const Tensor& context = store.get("prompt.context");
  if (!needs_conditioning()) return context;
  require(conditioning != nullptr && conditioning->defined(), ErrorCategory::invalid_argument,
          config_.mode == PromptMode::class_aware
              ? "class-aware prompts need the class's visual prototype"
              : "task-aware prompts need the sum of the episode's visual prototypes");
  require(conditioning->numel() == config_.d_v, ErrorCategory::invalid_argument,
          "prompt conditioning vector must have d_v entries");
  const std::string net = conditioning_net_prefix();
  const Tensor hidden = tanh(apply_linear(store, net + ".fc1", *conditioning));
  return add(context, apply_linear(store, net + ".fc2", hidden));
}

}  // namespace protofuse
