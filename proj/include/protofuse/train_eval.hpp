// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The ProtoFuse Authors

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "protofuse/checkpoint.hpp"
#include "protofuse/config.hpp"
#include "protofuse/data.hpp"
#include "protofuse/fsl_core.hpp"

namespace protofuse {

// ---------------------------------------------------------------------------
// Config views

struct LoadedData {
  DatasetFile data;
  SplitManifest manifest;
};

SyntheticSpec synthetic_spec(const Config& cfg);
ModelConfig model_config(const Config& cfg, std::size_t d_in);
Hyperparams hyperparams(const Config& cfg);
Method config_method(const Config& cfg);

/// Resolved file locations; empty keys fall back to names under paths.out_dir.
std::filesystem::path data_path(const Config& cfg);
std::filesystem::path manifest_path(const Config& cfg);
std::filesystem::path pretrain_path(const Config& cfg);
std::filesystem::path checkpoint_path(const Config& cfg);
std::filesystem::path report_path(const Config& cfg, const std::string& command);
std::filesystem::path export_path(const Config& cfg);

LoadedData load_data(const Config& cfg);

/// Evaluation thread count: PROTOFUSE_THREADS if set, else hardware concurrency.
std::size_t default_thread_count();

// ---------------------------------------------------------------------------
// Training

struct PretrainResult {
  Checkpoint checkpoint;
  std::vector<double> epoch_losses;
};

/// Cross-entropy training of visual.* and head.* on the base split. The
/// checkpoint carries the full model initialisation for the configured
/// method plus the head.
PretrainResult run_pretrain(const Config& cfg, const LoadedData& data, std::ostream* log = nullptr);

struct ValidationPoint {
  std::uint64_t episode = 0;
  double accuracy = 0.0;
};

struct MetaTrainResult {
  Checkpoint checkpoint;           // best validation state, head removed
  std::vector<ValidationPoint> validation;  // first point is the initial state
  std::uint64_t best_episode = 0;
  double best_accuracy = 0.0;
};

/// Fresh parameters for `model` with the visual encoder copied from `init`
/// (shape-checked). Everything else, including any head, is left out.
ParamStore initial_params(const FewShotModel& model, const DatasetFile& data, const ParamStore* init);

/// Parameters for `model` taken entirely from a checkpoint. Throws
/// invalid_argument naming any missing or differently shaped entry.
ParamStore params_from_checkpoint(const FewShotModel& model, const DatasetFile& data, const ParamStore& ckpt);

/// Episodic training on the base split (contrastive alignment for zero-shot
/// methods). `init` may be null for a fresh start.
MetaTrainResult run_meta_train(const Config& cfg, const LoadedData& data, const ParamStore* init,
                               std::ostream* log = nullptr);

// ---------------------------------------------------------------------------
// Evaluation

struct EvalReport {
  std::string method;
  std::string split;
  std::size_t n_way = 0;
  std::size_t k_shot = 0;
  std::size_t q_query = 0;
  std::size_t tasks = 0;
  std::uint64_t seed = 0;
  std::vector<double> accuracies;
  double mean = 0.0;
  double ci95 = 0.0;
  double wall_seconds = 0.0;
  /// FNV-1a over the sampled class and sample ids of every episode.
  std::uint64_t episode_fingerprint = 0;
  std::string label;  // ladder row or sweep point, may be empty
};

struct EvalSpec {
  Split split = Split::novel;
  std::size_t n_way = 5;
  std::size_t k_shot = 1;
  std::size_t q_query = 15;
  std::size_t tasks = 2000;
  std::uint64_t seed = 99;
  std::size_t threads = 1;
};

EvalSpec eval_spec(const Config& cfg);

/// Mean of the values and 1.96 * sample std / sqrt(T) (0 when T = 1).
void summarize(EvalReport& report);

/// Per-episode accuracy over T episodes drawn with episode_seed(seed, t).
/// Zero-shot methods draw K = 0 episodes whatever spec.k_shot says.
EvalReport evaluate(const FewShotModel& model, const ParamStore& store, const LoadedData& data,
                    const EvalSpec& spec, const Hyperparams& hyper, const EpisodeSampler* sampler = nullptr);

/// Structured record (one JSON object, no trailing newline). Wall time is
/// left out so records are reproducible byte for byte.
std::string report_json(const EvalReport& report, const std::string& kind, const std::string& config_echo);
void print_table(std::ostream& out, const std::string& title, const std::vector<EvalReport>& rows);

// ---------------------------------------------------------------------------
// Experiments

struct AblationReport {
  std::vector<EvalReport> rows;
};

/// Row labels of the ablation ladder, in order.
const std::vector<std::string>& ablation_labels();

/// Config overrides that turn `cfg` into ladder row `index`.
Config ablation_row_config(const Config& cfg, std::size_t index);

AblationReport run_ablation(const Config& cfg, const LoadedData& data, const ParamStore& pretrained,
                            std::ostream* log = nullptr);

struct SweepTable {
  std::string parameter;  // "lambda" or "alpha"
  std::vector<double> grid;
  std::vector<EvalReport> rows;
  std::size_t best_index = 0;
  bool best_on_boundary = false;
};

/// Ties go to the lowest index; the flag is set when the best point is the
/// first or last of a grid with more than one point.
void pick_best(SweepTable& table);

/// lambda grid: one meta-trained simplefsl_pp model evaluated per lambda.
/// alpha grid: one meta-training run per alpha, evaluated at the configured lambda.
std::vector<SweepTable> run_sweep(const Config& cfg, const LoadedData& data, const ParamStore& pretrained,
                                  std::ostream* log = nullptr);

struct EmbeddingExport {
  std::vector<std::vector<double>> rows;  // fused support features
  std::vector<std::size_t> labels;
};

/// Fused (pre-classifier) support representations of one N-way `shots`-shot
/// episode; visual features for protonet.
EmbeddingExport compute_embeddings(const FewShotModel& model, const ParamStore& store, const LoadedData& data,
                                   Split split, std::size_t n_way, std::size_t shots, std::uint64_t seed);

/// CSV: one row per support sample, label first then d_v values, no header.
void write_embeddings_csv(const std::filesystem::path& path, const EmbeddingExport& embeddings);

}  // namespace protofuse
