// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The ProtoFuse Authors

#include "protofuse/fsl_core.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

#include "protofuse/error.hpp"
#include "protofuse/functional.hpp"
#include "protofuse/random.hpp"

namespace protofuse {

std::string_view to_string(Method method) noexcept {
  switch (method) {
    case Method::protonet: return "protonet";
    case Method::simplefsl: return "simplefsl";
    case Method::simplefsl_pp: return "simplefsl_pp";
    case Method::zeroshot: return "zeroshot";
    case Method::zeroshot_lp: return "zeroshot_lp";
  }
  return "?";
}

Method parse_method(std::string_view text) {
  if (text == "protonet") return Method::protonet;
  if (text == "simplefsl") return Method::simplefsl;
  if (text == "simplefsl_pp") return Method::simplefsl_pp;
  if (text == "zeroshot") return Method::zeroshot;
  if (text == "zeroshot_lp") return Method::zeroshot_lp;
  fail(ErrorCategory::config, "unknown method '" + std::string(text) + "'");
}

std::string_view to_string(PromptMode mode) noexcept {
  switch (mode) {
    case PromptMode::fixed: return "fixed";
    case PromptMode::dataset: return "dataset";
    case PromptMode::class_aware: return "class";
    case PromptMode::task_aware: return "task";
  }
  return "?";
}

PromptMode parse_prompt_mode(std::string_view text) {
  if (text == "fixed") return PromptMode::fixed;
  if (text == "dataset") return PromptMode::dataset;
  if (text == "class") return PromptMode::class_aware;
  if (text == "task") return PromptMode::task_aware;
  fail(ErrorCategory::config, "unknown prompt mode '" + std::string(text) + "'");
}

// ---------------------------------------------------------------------------
// Episode

void Episode::validate() const {
  require(n_way > 0, ErrorCategory::invalid_argument, "episode needs at least one class");
  require(classes.size() == n_way, ErrorCategory::invalid_argument, "episode class roster size != N");
  std::set<std::uint32_t> ids;
  for (const auto& c : classes) ids.insert(c.class_id);
  require(ids.size() == n_way, ErrorCategory::invalid_argument, "episode classes must be distinct");
  require(support.size() == n_way * k_shot, ErrorCategory::invalid_argument,
          "support set must hold K samples per class");
  require(query.size() == n_way * q_query, ErrorCategory::invalid_argument,
          "query set must hold Q samples per class");
  for (std::size_t i = 0; i < support.size(); ++i) {
    require(support[i].label == i / k_shot, ErrorCategory::invalid_argument,
            "support samples must be grouped by class");
  }
  std::vector<std::size_t> per_class(n_way, 0);
  for (const auto& q : query) {
    require(q.label < n_way, ErrorCategory::invalid_argument, "query label out of range");
    ++per_class[q.label];
  }
  for (std::size_t c : per_class) {
    require(c == q_query, ErrorCategory::invalid_argument, "query set must hold Q samples per class");
  }
  std::set<std::size_t> support_ids;
  for (const auto& s : support) support_ids.insert(s.sample_id);
  for (const auto& q : query) {
    require(!support_ids.count(q.sample_id), ErrorCategory::invalid_argument,
            "sample " + std::to_string(q.sample_id) + " appears in both support and query");
  }
}

std::vector<std::size_t> Episode::query_labels() const {
  std::vector<std::size_t> out;
  out.reserve(query.size());
  for (const auto& q : query) out.push_back(q.label);
  return out;
}

std::vector<TokenId> Episode::class_tokens() const {
  std::vector<TokenId> out;
  out.reserve(classes.size());
  for (const auto& c : classes) out.push_back(c.token);
  return out;
}

// ---------------------------------------------------------------------------
// Model

namespace {

PromptMode effective_prompt_mode(Method method, PromptMode configured) {
  if (method == Method::zeroshot) return PromptMode::fixed;
  if (method == Method::zeroshot_lp) return PromptMode::dataset;
  return configured;
}

Tensor stack_features(const std::vector<LabeledSample>& samples) {
  std::vector<std::vector<double>> rows;
  rows.reserve(samples.size());
  for (const auto& s : samples) rows.push_back(s.features);
  return Tensor::stack(rows);
}

/// N x NK matrix averaging each class's K consecutive support rows.
Tensor class_mean_matrix(std::size_t n_way, std::size_t k_shot) {
  std::vector<double> m(n_way * n_way * k_shot, 0.0);
  const double w = 1.0 / static_cast<double>(k_shot);
  for (std::size_t c = 0; c < n_way; ++c) {
    for (std::size_t j = 0; j < k_shot; ++j) m[c * n_way * k_shot + c * k_shot + j] = w;
  }
  return Tensor::matrix(n_way, n_way * k_shot, std::move(m));
}

}  // namespace

FewShotModel::FewShotModel(ModelConfig config, Method method)
    : config_(config),
      method_(method),
      visual_(config.visual),
      semantic_(config.semantic),
      prompts_(PromptConfig{effective_prompt_mode(method, config.prompt), config.prompt_length,
                            config.semantic.d_text, config.visual.d_v}),
      adaptor_(config.adaptor, config.semantic.d_text, config.visual.d_v),
      fusion_(config.fusion, config.visual.d_v) {
  config_.prompt = prompts_.config().mode;
  if (is_zero_shot(method)) {
    config_.fusion = FusionKind::add;
  }
}

ParamStore FewShotModel::initialize(std::span<const ClassToken> class_tokens) const {
  ParamStore store;
  const std::uint64_t seed = config_.seed;
  visual_.register_params(store, seed);
  semantic_.register_params(store, seed, class_tokens);
  prompts_.register_params(store, seed);
  adaptor_.register_params(store, seed);
  if (!is_zero_shot(method_)) fusion_.register_params(store, seed);
  return store;
}

Tensor FewShotModel::class_text_features(const ParamStore& store, std::span<const TokenId> tokens,
                                         const Tensor* visual_protos) const {
  require(!tokens.empty(), ErrorCategory::invalid_argument, "no classes to encode");
  std::vector<Prompt> prompts(tokens.size());
  switch (prompts_.config().mode) {
    case PromptMode::fixed:
    case PromptMode::dataset: {
      const Tensor context = prompts_.compose(store, semantic_);
      for (std::size_t i = 0; i < tokens.size(); ++i) prompts[i] = Prompt{context, tokens[i]};
      break;
    }
    case PromptMode::task_aware: {
      require(visual_protos && visual_protos->defined(), ErrorCategory::invalid_argument,
              "task-aware prompts need visual prototypes");
      const Tensor total = sum_rows(*visual_protos);
      const Tensor context = prompts_.compose(store, semantic_, &total);
      for (std::size_t i = 0; i < tokens.size(); ++i) prompts[i] = Prompt{context, tokens[i]};
      break;
    }
    case PromptMode::class_aware: {
      require(visual_protos && visual_protos->defined(), ErrorCategory::invalid_argument,
              "class-aware prompts need visual prototypes");
      require(visual_protos->rows() == tokens.size(), ErrorCategory::invalid_argument,
              "one visual prototype per class required");
      for (std::size_t i = 0; i < tokens.size(); ++i) {
        const std::size_t row = i;
        const Tensor proto = gather_rows(*visual_protos, std::span<const std::size_t>(&row, 1));
        prompts[i] = Prompt{prompts_.compose(store, semantic_, &proto), tokens[i]};
      }
      break;
    }
  }
  return adaptor_.forward(store, semantic_.encode_batch(store, prompts));
}

EpisodeForward FewShotModel::forward(const ParamStore& store, const Episode& episode,
                                     const Hyperparams& hyper) const {
  episode.validate();
  require(!episode.query.empty(), ErrorCategory::invalid_argument, "episode has no queries");
  EpisodeForward out;
  out.query_visual = visual_.forward(store, stack_features(episode.query));
  const std::vector<TokenId> tokens = episode.class_tokens();

  if (is_zero_shot(method_)) {
    out.class_text = class_text_features(store, tokens);
    out.logp_fused = log_softmax_rows(cosine_rows(out.query_visual, out.class_text), hyper.tau2);
    return out;
  }

  require(episode.k_shot > 0, ErrorCategory::invalid_argument, "prototypes need K >= 1 support samples");
  out.support_visual = visual_.forward(store, stack_features(episode.support));
  const Tensor averaging = class_mean_matrix(episode.n_way, episode.k_shot);
  out.visual_protos = matmul(averaging, out.support_visual);
  out.logp_visual = log_softmax_rows(cosine_rows(out.query_visual, out.visual_protos), hyper.tau);
  if (!uses_semantic(method_)) return out;

  out.class_text = class_text_features(store, tokens, &out.visual_protos);
  std::vector<std::size_t> support_labels;
  support_labels.reserve(episode.support.size());
  for (const auto& s : episode.support) support_labels.push_back(s.label);
  const Tensor per_sample_text = gather_rows(out.class_text, support_labels);
  out.support_fused = fusion_.forward(store, out.support_visual, per_sample_text);
  out.fused_protos = matmul(averaging, out.support_fused);
  out.logp_fused = log_softmax_rows(cosine_rows(out.query_visual, out.fused_protos), hyper.tau2);
  return out;
}

std::vector<std::string> FewShotModel::meta_trainable_prefixes() const {
  if (!uses_semantic(method_)) return {"visual."};
  if (is_zero_shot(method_)) return {"visual.", "adaptor.", "prompt."};
  return {"visual.", "adaptor.", "fusion.", "prompt."};
}

// ---------------------------------------------------------------------------
// Prototypes and classifiers

PrototypeSet compute_prototypes(const FewShotModel& model, const ParamStore& store,
                                const Episode& episode) {
  require(episode.k_shot > 0, ErrorCategory::invalid_argument, "prototypes need K >= 1 support samples");
  NoGradGuard guard;
  const EpisodeForward fwd = model.forward(store, episode, Hyperparams{});
  PrototypeSet out;
  out.visual = fwd.visual_protos.to_rows();
  out.fused = fwd.fused_protos.defined() ? fwd.fused_protos.to_rows() : out.visual;
  return out;
}

namespace {

std::vector<double> classify(std::span<const double> query, const std::vector<std::vector<double>>& protos,
                             double temperature) {
  require(!protos.empty(), ErrorCategory::invalid_argument, "no prototypes to classify against");
  std::vector<double> logits;
  logits.reserve(protos.size());
  for (const auto& p : protos) logits.push_back(cosine_similarity(query, p));
  return softmax(logits, temperature);
}

}  // namespace

std::vector<double> classify_fused(std::span<const double> query_feature, const PrototypeSet& protos,
                                   double tau2) {
  return classify(query_feature, protos.fused, tau2);
}

std::vector<double> classify_visual(std::span<const double> query_feature, const PrototypeSet& protos,
                                    double tau) {
  return classify(query_feature, protos.visual, tau);
}

std::vector<double> ensemble(std::span<const double> y_hat, std::span<const double> y_hat0, double lambda) {
  require(std::isfinite(lambda) && lambda >= 0.0, ErrorCategory::invalid_argument,
          "ensemble weight lambda must be non-negative");
  require(y_hat.size() == y_hat0.size(), ErrorCategory::invalid_argument,
          "ensemble inputs must have equal length");
  std::vector<double> out(y_hat.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = y_hat[i] + lambda * y_hat0[i];
  return out;
}

std::vector<Prediction> predict_episode(const FewShotModel& model, const ParamStore& store,
                                        const Episode& episode, const Hyperparams& hyper) {
  NoGradGuard guard;
  const EpisodeForward fwd = model.forward(store, episode, hyper);
  const std::size_t nq = episode.query.size();
  std::vector<Prediction> out(nq);

  if (is_zero_shot(model.method())) {
    const Tensor cos = cosine_rows(fwd.query_visual, fwd.class_text);
    const Tensor probs = exp(fwd.logp_fused);
    for (std::size_t q = 0; q < nq; ++q) {
      out[q].y_hat = probs.row(q);
      out[q].predicted = argmax(cos.row(q));
    }
    return out;
  }

  const Tensor p0 = exp(fwd.logp_visual);
  const Tensor p = fwd.logp_fused.defined() ? exp(fwd.logp_fused) : Tensor{};
  for (std::size_t q = 0; q < nq; ++q) {
    Prediction& pred = out[q];
    pred.y_hat0 = p0.row(q);
    switch (model.method()) {
      case Method::protonet:
        pred.predicted = argmax(pred.y_hat0);
        break;
      case Method::simplefsl:
        pred.y_hat = p.row(q);
        pred.predicted = argmax(pred.y_hat);
        break;
      case Method::simplefsl_pp:
        pred.y_hat = p.row(q);
        pred.y_hat_pp = ensemble(pred.y_hat, pred.y_hat0, hyper.lambda);
        pred.predicted = argmax(pred.y_hat_pp);
        break;
      default:
        break;
    }
  }
  return out;
}

double episode_accuracy(const FewShotModel& model, const ParamStore& store, const Episode& episode,
                        const Hyperparams& hyper) {
  const auto preds = predict_episode(model, store, episode, hyper);
  std::size_t correct = 0;
  for (std::size_t q = 0; q < preds.size(); ++q) correct += preds[q].predicted == episode.query[q].label;
  return static_cast<double>(correct) / static_cast<double>(preds.size());
}

// ---------------------------------------------------------------------------
// Losses

Tensor symmetric_kl(const Tensor& p, const Tensor& q) {
  return scale(add(kl_rows_mean(p, q), kl_rows_mean(q, p)), 0.5);
}

MetaLossTerms meta_loss(const EpisodeForward& fwd, std::span<const std::size_t> labels, double alpha,
                        Method method) {
  require(alpha >= 0.0 && std::isfinite(alpha), ErrorCategory::invalid_argument,
          "distillation weight alpha must be non-negative");
  MetaLossTerms terms;
  switch (method) {
    case Method::protonet:
      terms.l2 = nll_mean(fwd.logp_visual, labels);
      terms.total = terms.l2;
      break;
    case Method::simplefsl:
      terms.l1 = nll_mean(fwd.logp_fused, labels);
      terms.total = terms.l1;
      break;
    case Method::simplefsl_pp:
      terms.l1 = nll_mean(fwd.logp_fused, labels);
      terms.l2 = nll_mean(fwd.logp_visual, labels);
      terms.kd = symmetric_kl(exp(fwd.logp_fused), exp(fwd.logp_visual));
      terms.total = add(add(terms.l1, terms.l2), scale(terms.kd, alpha));
      break;
    default:
      fail(ErrorCategory::invalid_argument, "meta loss is undefined for zero-shot methods");
  }
  return terms;
}

double cross_entropy(std::span<const std::vector<double>> probs, std::span<const std::size_t> labels) {
  require(!probs.empty() && probs.size() == labels.size(), ErrorCategory::invalid_argument,
          "cross_entropy needs one label per prediction");
  std::vector<std::vector<double>> rows(probs.begin(), probs.end());
  return nll_mean(log(clamp_min(Tensor::stack(rows), kKlFloor)), labels).item();
}

double loss_meta(std::span<const Prediction> predictions, std::span<const std::size_t> labels,
                 double alpha, Method mode) {
  require(mode == Method::simplefsl || mode == Method::simplefsl_pp, ErrorCategory::invalid_argument,
          "loss_meta mode must be simplefsl or simplefsl_pp");
  require(alpha >= 0.0, ErrorCategory::invalid_argument, "alpha must be non-negative");
  require(!predictions.empty() && predictions.size() == labels.size(), ErrorCategory::invalid_argument,
          "loss_meta needs one label per prediction");
  std::vector<std::vector<double>> fused, visual;
  for (const auto& p : predictions) {
    fused.push_back(p.y_hat);
    if (mode == Method::simplefsl_pp) visual.push_back(p.y_hat0);
  }
  const double l1 = cross_entropy(fused, labels);
  if (mode == Method::simplefsl) return l1;
  const double l2 = cross_entropy(visual, labels);
  double kd = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    kd += loss_kd(predictions[i].y_hat, predictions[i].y_hat0);
  }
  kd /= static_cast<double>(predictions.size());
  return l1 + l2 + alpha * kd;
}

double loss_kd(std::span<const double> y_hat, std::span<const double> y_hat0) {
  return 0.5 * (kl_divergence(y_hat, y_hat0) + kl_divergence(y_hat0, y_hat));
}

Tensor loss_pretrain(const FewShotModel& model, const ParamStore& store, const Tensor& raw_batch,
                     std::span<const std::size_t> labels) {
  const Tensor features = model.visual().forward(store, raw_batch);
  return nll_mean(log_softmax_rows(model.visual().head_logits(store, features), 1.0), labels);
}

Tensor loss_contrastive_align(const Tensor& visual, const Tensor& text,
                              std::span<const std::uint32_t> class_ids, double temperature) {
  require(temperature > 0.0 && std::isfinite(temperature), ErrorCategory::invalid_argument,
          "contrastive temperature must be positive");
  require(visual.rows() == text.rows() && visual.rows() == class_ids.size(),
          ErrorCategory::invalid_argument, "alignment batch needs matched visual/text/class rows");
  require(!class_ids.empty(), ErrorCategory::invalid_argument, "alignment batch is empty");
  std::set<std::uint32_t> seen(class_ids.begin(), class_ids.end());
  require(seen.size() == class_ids.size(), ErrorCategory::invalid_argument,
          "alignment batch contains a duplicate class");
  std::vector<std::size_t> targets(class_ids.size());
  for (std::size_t i = 0; i < targets.size(); ++i) targets[i] = i;
  const Tensor logits = scale(cosine_rows(visual, text), 1.0 / temperature);
  const Tensor by_row = nll_mean(log_softmax_rows(logits, 1.0), targets);
  const Tensor by_col = nll_mean(log_softmax_rows(transpose(logits), 1.0), targets);
  return scale(add(by_row, by_col), 0.5);
}

std::size_t zero_shot_predict(const FewShotModel& model, const ParamStore& store,
                              std::span<const double> query_feature,
                              std::span<const TokenId> candidate_tokens) {
  require(!candidate_tokens.empty(), ErrorCategory::invalid_argument, "no candidate classes");
  std::set<TokenId> unique(candidate_tokens.begin(), candidate_tokens.end());
  require(unique.size() == candidate_tokens.size(), ErrorCategory::invalid_argument,
          "duplicate candidate class");
  NoGradGuard guard;
  const Tensor text = model.class_text_features(store, candidate_tokens);
  const Tensor cos = cosine_rows(Tensor::vector(query_feature), text);
  return argmax(cos.values());
}

}  // namespace protofuse
