// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The ProtoFuse Authors

#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "protofuse/config.hpp"
#include "protofuse/data.hpp"
#include "protofuse/fsl_core.hpp"
#include "protofuse/random.hpp"
#include "protofuse/train_eval.hpp"

namespace protofuse::test {

inline std::vector<double> random_vector(Rng& rng, std::size_t n, double scale = 1.0) {
  std::vector<double> v(n);
  for (double& x : v) x = scale * rng.normal();
  return v;
}

inline std::vector<double> random_distribution(Rng& rng, std::size_t n) {
  std::vector<double> v(n);
  double total = 0.0;
  for (double& x : v) {
    x = rng.uniform(0.01, 1.0);
    total += x;
  }
  for (double& x : v) x /= total;
  return v;
}

/// Small dimensions so toy models run in microseconds.
inline ModelConfig toy_model_config(PromptMode prompt = PromptMode::dataset,
                                    AdaptorKind adaptor = AdaptorKind::bottleneck,
                                    FusionKind fusion = FusionKind::add) {
  ModelConfig m;
  m.visual = {4, 6, 4};
  m.semantic.vocab = 12;
  m.semantic.d_text = 8;
  m.semantic.mixer_gain = 1.0;
  m.prompt_length = 2;
  m.prompt = prompt;
  m.adaptor = adaptor;
  m.fusion = fusion;
  m.seed = 3;
  return m;
}

/// Class tokens 4.. with random 3-dim attributes.
inline std::vector<ClassToken> toy_tokens(std::size_t n, std::uint64_t seed = 1) {
  Rng rng(seed);
  std::vector<ClassToken> out;
  for (std::size_t i = 0; i < n; ++i) {
    ClassToken t;
    t.token = static_cast<TokenId>(kFirstClassToken + i);
    for (int k = 0; k < 3; ++k) t.attributes.push_back(static_cast<float>(rng.normal()));
    out.push_back(t);
  }
  return out;
}

/// Random episode over classes 0..n_way-1 with tokens 4.. and d features.
inline Episode random_episode(Rng& rng, std::size_t n_way, std::size_t k_shot, std::size_t q_query,
                              std::size_t d) {
  Episode ep;
  ep.n_way = n_way;
  ep.k_shot = k_shot;
  ep.q_query = q_query;
  std::size_t id = 0;
  for (std::size_t c = 0; c < n_way; ++c) {
    ep.classes.push_back({static_cast<std::uint32_t>(c), static_cast<TokenId>(kFirstClassToken + c)});
  }
  for (std::size_t c = 0; c < n_way; ++c) {
    for (std::size_t k = 0; k < k_shot; ++k) ep.support.push_back({id++, random_vector(rng, d), c});
  }
  for (std::size_t c = 0; c < n_way; ++c) {
    for (std::size_t q = 0; q < q_query; ++q) ep.query.push_back({id++, random_vector(rng, d), c});
  }
  return ep;
}

/// Config for a tiny synthetic dataset and a fast model.
inline Config tiny_config(const std::filesystem::path& out_dir) {
  Config cfg;
  for (const char* kv : {"data.num_classes=32", "data.samples_per_class=40", "data.d_in=8", "data.attr_dim=4",
                         "model.d_h=16", "model.d_v=8", "model.d_text=16", "model.vocab=64", "model.prompt_len=2",
                         "pretrain.epochs=2", "pretrain.batch_size=32", "meta.episodes=20", "meta.q_query=3",
                         "meta.val_every=10", "meta.val_tasks=5", "zeroshot.steps=10", "zeroshot.batch_size=4",
                         "eval.tasks=12", "eval.q_query=3", "export.shots=4", "export.n_way=3"}) {
    cfg.apply_override(kv);
  }
  cfg.set("paths.out_dir", out_dir.string());
  return cfg;
}

inline LoadedData tiny_data(const Config& cfg) {
  SyntheticDataset ds = generate_synthetic(synthetic_spec(cfg));
  return LoadedData{std::move(ds.data), std::move(ds.manifest)};
}

inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("protofuse_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

/// Meta-training loss of one episode; contrastive alignment for zero-shot methods.
inline Tensor train_loss(const FewShotModel& model, const ParamStore& store, const Episode& ep, const Hyperparams& hyper) {
  if (is_zero_shot(model.method())) {
    std::vector<std::vector<double>> rows;
    std::vector<std::uint32_t> ids;
    for (const auto& s : ep.support) rows.push_back(s.features);
    for (const auto& c : ep.classes) ids.push_back(c.class_id);
    const Tensor visual = model.visual().forward(store, Tensor::stack(rows));
    const Tensor text = model.class_text_features(store, ep.class_tokens());
    return loss_contrastive_align(visual, text, ids, hyper.contrastive_temp);
  }
  const EpisodeForward fwd = model.forward(store, ep, hyper);
  return meta_loss(fwd, ep.query_labels(), hyper.alpha, model.method()).total;
}

inline void randomize_biases(ParamStore& store, Rng& rng) {
  for (const auto& name : store.names()) {
    if (store.is_frozen(name) || !name.ends_with(".bias")) continue;
    for (double& v : store.get(name).mutable_values()) v = 0.3 * rng.normal();
  }
}

}  // namespace protofuse::test
