// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The ProtoFuse Authors

#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "protofuse/encoders.hpp"
#include "protofuse/fsl_core.hpp"

namespace protofuse {

/// Knobs for the synthetic benchmark. Class means are
///   mu_c = s * M a_c + (1 - s) * u_c
/// with attributes a_c ~ N(0, I), M ~ N(0, 1/attr_dim) and u_c ~ N(0, I);
/// samples add N(0, sigma^2 I) noise.
struct SyntheticSpec {
  std::uint32_t num_classes = 100;
  std::uint32_t samples_per_class = 600;
  std::uint32_t d_in = 32;
  std::uint32_t attr_dim = 16;
  double sigma = 1.0;
  double semantic_signal = 0.8;
  std::uint64_t seed = 2024;

  void validate() const;
};

struct ClassRecord {
  std::uint32_t class_id = 0;
  TokenId token = 0;
  std::vector<float> attributes;  // attr_dim
  std::vector<float> samples;     // samples_per_class x d_in, row-major
};

struct DatasetFile {
  std::uint32_t d_in = 0;
  std::uint32_t attr_dim = 0;
  std::uint32_t samples_per_class = 0;
  std::vector<ClassRecord> classes;

  void validate() const;
  /// Position of a class id in `classes`; throws invalid_argument if absent.
  std::size_t index_of(std::uint32_t class_id) const;
  std::span<const float> sample(std::size_t class_index, std::size_t sample_index) const;
};

enum class Split { base, val, novel };

std::string_view to_string(Split split) noexcept;
Split parse_split(std::string_view text);

struct SplitManifest {
  std::vector<std::uint32_t> base;
  std::vector<std::uint32_t> val;
  std::vector<std::uint32_t> novel;

  const std::vector<std::uint32_t>& ids(Split split) const;
  /// Checks pairwise disjointness and, given a dataset, membership.
  void validate(const DatasetFile* dataset = nullptr) const;
};

struct SyntheticDataset {
  DatasetFile data;
  SplitManifest manifest;
};

SyntheticDataset generate_synthetic(const SyntheticSpec& spec);

/// Seeded 64/16/20 split of the given ids (sizes rounded, novel takes the rest).
SplitManifest split_classes(std::span<const std::uint32_t> class_ids, std::uint64_t seed);

std::vector<std::uint8_t> encode_dataset(const DatasetFile& data);
DatasetFile decode_dataset(std::span<const std::uint8_t> bytes);
void write_dataset(const std::filesystem::path& path, const DatasetFile& data);
DatasetFile read_dataset(const std::filesystem::path& path);

std::string format_manifest(const SplitManifest& manifest);
SplitManifest parse_manifest(std::string_view text);
void write_manifest(const std::filesystem::path& path, const SplitManifest& manifest);
SplitManifest read_manifest(const std::filesystem::path& path);

/// Token bindings handed to the semantic encoder.
std::vector<ClassToken> class_tokens(const DatasetFile& data);

/// Seed of episode `index` in a stream; independent of evaluation order.
std::uint64_t episode_seed(std::uint64_t master_seed, std::uint64_t index) noexcept;

/// Draws N-way K-shot Q-query episodes from one split of a dataset.
/// K = 0 yields an empty support set (zero-shot protocol).
class EpisodeSampler {
 public:
  EpisodeSampler(const DatasetFile& data, const SplitManifest& manifest);

  Episode sample(Split split, std::size_t n_way, std::size_t k_shot, std::size_t q_query,
                 std::uint64_t seed) const;

  /// Global id of a sample: class position * samples_per_class + row.
  std::size_t sample_id(std::size_t class_index, std::size_t row) const noexcept {
    return class_index * data_->samples_per_class + row;
  }

  /// Number of sample() calls with K > 0 so far (thread-safe).
  std::uint64_t labeled_support_draws() const noexcept;

 private:
  const DatasetFile* data_;
  const SplitManifest* manifest_;
  mutable std::atomic<std::uint64_t> labeled_draws_{0};
};

}  // namespace protofuse
