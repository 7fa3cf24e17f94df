// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The ProtoFuse Authors

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "protofuse/adaptors.hpp"
#include "protofuse/encoders.hpp"
#include "protofuse/fusion.hpp"
#include "protofuse/param_store.hpp"

namespace protofuse {

enum class Method { protonet, simplefsl, simplefsl_pp, zeroshot, zeroshot_lp };

std::string_view to_string(Method method) noexcept;
Method parse_method(std::string_view text);
std::string_view to_string(PromptMode mode) noexcept;
PromptMode parse_prompt_mode(std::string_view text);

inline bool uses_semantic(Method m) noexcept { return m != Method::protonet; }
inline bool is_zero_shot(Method m) noexcept { return m == Method::zeroshot || m == Method::zeroshot_lp; }

struct Hyperparams {
  double lambda = 0.5;             // self-ensemble weight
  double alpha = 1.0;              // self-distillation weight
  double tau = 0.1;                // visual classifier temperature
  double tau2 = 0.1;               // fused classifier temperature
  double contrastive_temp = 0.07;  // zero-shot alignment temperature
};

// ---------------------------------------------------------------------------
// Episodes

struct LabeledSample {
  std::size_t sample_id = 0;
  std::vector<double> features;
  std::size_t label = 0;  // index into Episode::classes
};

struct EpisodeClass {
  std::uint32_t class_id = 0;
  TokenId token = 0;
};

/// One N-way K-shot task. Support is class-major (K samples of class 0, then
/// class 1, ...); query holds q_query samples per class.
struct Episode {
  std::size_t n_way = 0;
  std::size_t k_shot = 0;
  std::size_t q_query = 0;
  std::vector<EpisodeClass> classes;
  std::vector<LabeledSample> support;
  std::vector<LabeledSample> query;

  /// Throws invalid_argument if counts, labels or sample ids are inconsistent.
  void validate() const;
  std::vector<std::size_t> query_labels() const;
  std::vector<TokenId> class_tokens() const;
};

struct PrototypeSet {
  std::vector<std::vector<double>> fused;   // p_i
  std::vector<std::vector<double>> visual;  // p_i^0
};

struct Prediction {
  std::vector<double> y_hat;     // fused classifier
  std::vector<double> y_hat0;    // visual classifier
  std::vector<double> y_hat_pp;  // y_hat + lambda * y_hat0
  std::size_t predicted = 0;
};

// ---------------------------------------------------------------------------
// Model

struct ModelConfig {
  VisualEncoderConfig visual;
  SemanticEncoderConfig semantic;
  std::size_t prompt_length = 4;
  PromptMode prompt = PromptMode::dataset;
  AdaptorKind adaptor = AdaptorKind::bottleneck;
  FusionKind fusion = FusionKind::add;
  std::uint64_t seed = 7;
};

/// Graph pieces of one episode forward pass.
struct EpisodeForward {
  Tensor support_visual;  // NK x d_v
  Tensor query_visual;    // NQ x d_v
  Tensor visual_protos;   // N x d_v
  Tensor class_text;      // N x d_v adapted semantic features (semantic methods)
  Tensor support_fused;   // NK x d_v
  Tensor fused_protos;    // N x d_v
  Tensor logp_fused;      // NQ x N
  Tensor logp_visual;     // NQ x N
};

/// Stateless description of the network; parameters live in a ParamStore.
class FewShotModel {
 public:
  FewShotModel(ModelConfig config, Method method);

  const ModelConfig& config() const noexcept { return config_; }
  Method method() const noexcept { return method_; }
  /// Prompt mode actually used: zero-shot forces fixed, zero-shot+LP dataset.
  PromptMode prompt_mode() const noexcept { return prompts_.config().mode; }
  const VisualEncoder& visual() const noexcept { return visual_; }
  const SemanticEncoder& semantic() const noexcept { return semantic_; }
  const PromptBank& prompts() const noexcept { return prompts_; }
  const Adaptor& adaptor() const noexcept { return adaptor_; }
  const Fusion& fusion() const noexcept { return fusion_; }

  /// Fresh parameters. The semantic token table binds `class_tokens`.
  ParamStore initialize(std::span<const ClassToken> class_tokens) const;

  /// Adapted semantic features z for each token (N x d_v). Class/task
  /// prompts read the visual prototypes (N x d_v) for conditioning.
  Tensor class_text_features(const ParamStore& store, std::span<const TokenId> tokens,
                             const Tensor* visual_protos = nullptr) const;

  /// Visual features, prototypes and both classifiers' log-probabilities.
  /// Fusion is applied per support sample: p_i = mean_j fuse(f(x_j), z_j).
  EpisodeForward forward(const ParamStore& store, const Episode& episode,
                         const Hyperparams& hyper) const;

  /// Entry prefixes optimized during meta-training for this method.
  std::vector<std::string> meta_trainable_prefixes() const;

 private:
  ModelConfig config_;
  Method method_;
  VisualEncoder visual_;
  SemanticEncoder semantic_;
  PromptBank prompts_;
  Adaptor adaptor_;
  Fusion fusion_;
};

// ---------------------------------------------------------------------------
// Prototypes, classifiers, ensemble

PrototypeSet compute_prototypes(const FewShotModel& model, const ParamStore& store,
                                const Episode& episode);

/// softmax over cosine(query, p_i) / tau2.
std::vector<double> classify_fused(std::span<const double> query_feature, const PrototypeSet& protos,
                                   double tau2);
/// softmax over cosine(query, p_i^0) / tau.
std::vector<double> classify_visual(std::span<const double> query_feature, const PrototypeSet& protos,
                                    double tau);

/// y_hat + lambda * y_hat0; lambda must be non-negative.
std::vector<double> ensemble(std::span<const double> y_hat, std::span<const double> y_hat0, double lambda);

/// Per-query predictions using the method's decision rule.
std::vector<Prediction> predict_episode(const FewShotModel& model, const ParamStore& store,
                                        const Episode& episode, const Hyperparams& hyper);

/// Fraction of queries whose prediction equals the true label.
double episode_accuracy(const FewShotModel& model, const ParamStore& store, const Episode& episode,
                        const Hyperparams& hyper);

// ---------------------------------------------------------------------------
// Losses

struct MetaLossTerms {
  Tensor l1;     // mean CE of the fused classifier
  Tensor l2;     // mean CE of the visual classifier
  Tensor kd;     // mean symmetric KL
  Tensor total;
};

/// protonet: L2 only. simplefsl: L1. simplefsl_pp: L1 + L2 + alpha * KD.
MetaLossTerms meta_loss(const EpisodeForward& fwd, std::span<const std::size_t> labels, double alpha,
                        Method method);

/// 0.5 * (KL(p, q) + KL(q, p)) averaged over rows of probability matrices.
Tensor symmetric_kl(const Tensor& p, const Tensor& q);

/// Mean cross-entropy from probability rows using the 1e-12 floor.
double cross_entropy(std::span<const std::vector<double>> probs, std::span<const std::size_t> labels);

/// Loss from precomputed predictions (plain values, no graph). Mode must be
/// simplefsl or simplefsl_pp.
double loss_meta(std::span<const Prediction> predictions, std::span<const std::size_t> labels,
                 double alpha, Method mode);
double loss_kd(std::span<const double> y_hat, std::span<const double> y_hat0);

/// Mean CE of softmax(head(f(x))) against base-class labels.
Tensor loss_pretrain(const FewShotModel& model, const ParamStore& store, const Tensor& raw_batch,
                     std::span<const std::size_t> labels);

/// Symmetric InfoNCE over the B x B cosine matrix scaled by 1/temperature.
/// `class_ids` must be distinct.
Tensor loss_contrastive_align(const Tensor& visual, const Tensor& text,
                              std::span<const std::uint32_t> class_ids, double temperature);

/// argmax over cosine(query, adapted text feature of each candidate).
std::size_t zero_shot_predict(const FewShotModel& model, const ParamStore& store,
                              std::span<const double> query_feature,
                              std::span<const TokenId> candidate_tokens);

}  // namespace protofuse
