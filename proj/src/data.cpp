// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The ProtoFuse Authors

#include "protofuse/data.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "protofuse/binary_io.hpp"
#include "protofuse/error.hpp"
#include "protofuse/random.hpp"

namespace protofuse {

namespace {

constexpr std::string_view kDatasetMagic = "FSLD";
constexpr std::uint16_t kDatasetVersion = 1;

}  // namespace

void SyntheticSpec::validate() const {
  require(num_classes > 0 && samples_per_class > 0 && d_in > 0 && attr_dim > 0,
          ErrorCategory::invalid_argument, "synthetic dataset counts must be positive");
  require(std::isfinite(sigma) && sigma > 0.0, ErrorCategory::invalid_argument,
          "visual cluster sigma must be positive");
  require(semantic_signal >= 0.0 && semantic_signal <= 1.0, ErrorCategory::invalid_argument,
          "semantic_signal must lie in [0, 1]");
}

void DatasetFile::validate() const {
  require(d_in > 0 && attr_dim > 0 && samples_per_class > 0, ErrorCategory::invalid_argument,
          "dataset dimensions must be positive");
  std::set<std::uint32_t> ids;
  std::set<TokenId> tokens;
  for (const auto& c : classes) {
    require(ids.insert(c.class_id).second, ErrorCategory::invalid_argument,
            "duplicate class id " + std::to_string(c.class_id));
    require(tokens.insert(c.token).second, ErrorCategory::invalid_argument,
            "duplicate class token " + std::to_string(c.token));
    require(c.token >= kFirstClassToken, ErrorCategory::invalid_argument,
            "class token " + std::to_string(c.token) + " collides with reserved tokens");
    require(c.attributes.size() == attr_dim, ErrorCategory::invalid_argument,
            "class " + std::to_string(c.class_id) + " has the wrong attribute length");
    require(c.samples.size() == static_cast<std::size_t>(samples_per_class) * d_in,
            ErrorCategory::invalid_argument,
            "class " + std::to_string(c.class_id) + " has the wrong sample matrix size");
  }
}

std::size_t DatasetFile::index_of(std::uint32_t class_id) const {
  for (std::size_t i = 0; i < classes.size(); ++i) {
    if (classes[i].class_id == class_id) return i;
  }
  fail(ErrorCategory::invalid_argument, "class id " + std::to_string(class_id) + " not in dataset");
}

std::span<const float> DatasetFile::sample(std::size_t class_index, std::size_t sample_index) const {
  return std::span<const float>(classes.at(class_index).samples).subspan(sample_index * d_in, d_in);
}

std::string_view to_string(Split split) noexcept {
  switch (split) {
    case Split::base: return "base";
    case Split::val: return "val";
    case Split::novel: return "novel";
  }
  return "?";
}

Split parse_split(std::string_view text) {
  if (text == "base") return Split::base;
  if (text == "val") return Split::val;
  if (text == "novel") return Split::novel;
  fail(ErrorCategory::config, "unknown split '" + std::string(text) + "'");
}

const std::vector<std::uint32_t>& SplitManifest::ids(Split split) const {
  switch (split) {
    case Split::base: return base;
    case Split::val: return val;
    case Split::novel: return novel;
  }
  fail(ErrorCategory::invalid_argument, "unknown split");
}

void SplitManifest::validate(const DatasetFile* dataset) const {
  std::set<std::uint32_t> seen;
  for (Split s : {Split::base, Split::val, Split::novel}) {
    for (std::uint32_t id : ids(s)) {
      require(seen.insert(id).second, ErrorCategory::invalid_argument,
              "class " + std::to_string(id) + " appears in more than one split");
      if (dataset) dataset->index_of(id);
    }
  }
}

SplitManifest split_classes(std::span<const std::uint32_t> class_ids, std::uint64_t seed) {
  const std::size_t n = class_ids.size();
  const auto n_base = static_cast<std::size_t>(std::llround(0.64 * static_cast<double>(n)));
  const auto n_val = std::min(n - n_base, static_cast<std::size_t>(std::llround(0.16 * static_cast<double>(n))));
  Rng rng(seed);
  const auto order = rng.sample_without_replacement(n, n);
  SplitManifest m;
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint32_t id = class_ids[order[i]];
    if (i < n_base) {
      m.base.push_back(id);
    } else if (i < n_base + n_val) {
      m.val.push_back(id);
    } else {
      m.novel.push_back(id);
    }
  }
  std::sort(m.base.begin(), m.base.end());
  std::sort(m.val.begin(), m.val.end());
  std::sort(m.novel.begin(), m.novel.end());
  return m;
}

SyntheticDataset generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  const std::size_t d_in = spec.d_in;
  const std::size_t attr_dim = spec.attr_dim;
  const double s = spec.semantic_signal;

  Rng proj_rng(mix_seed(spec.seed, hash_name("data.projection")));
  std::vector<double> projection(d_in * attr_dim);
  const double proj_std = 1.0 / std::sqrt(static_cast<double>(attr_dim));
  for (double& v : projection) v = proj_std * proj_rng.normal();

  SyntheticDataset out;
  out.data.d_in = spec.d_in;
  out.data.attr_dim = spec.attr_dim;
  out.data.samples_per_class = spec.samples_per_class;
  out.data.classes.resize(spec.num_classes);

  std::vector<double> attrs(attr_dim);
  std::vector<double> mu(d_in);
  for (std::uint32_t c = 0; c < spec.num_classes; ++c) {
    ClassRecord& rec = out.data.classes[c];
    rec.class_id = c;
    rec.token = kFirstClassToken + c;

    Rng attr_rng(mix_seed(mix_seed(spec.seed, hash_name("data.attributes")), c));
    for (double& a : attrs) a = attr_rng.normal();
    rec.attributes.assign(attrs.begin(), attrs.end());

    Rng offset_rng(mix_seed(mix_seed(spec.seed, hash_name("data.offsets")), c));
    for (std::size_t i = 0; i < d_in; ++i) {
      double projected = 0.0;
      for (std::size_t j = 0; j < attr_dim; ++j) projected += projection[i * attr_dim + j] * attrs[j];
      const double offset = offset_rng.normal();
      mu[i] = s * projected + (1.0 - s) * offset;
    }

    Rng noise_rng(mix_seed(mix_seed(spec.seed, hash_name("data.noise")), c));
    rec.samples.resize(static_cast<std::size_t>(spec.samples_per_class) * d_in);
    for (std::size_t r = 0; r < spec.samples_per_class; ++r) {
      for (std::size_t i = 0; i < d_in; ++i) {
        rec.samples[r * d_in + i] = static_cast<float>(mu[i] + spec.sigma * noise_rng.normal());
      }
    }
  }

  std::vector<std::uint32_t> ids(spec.num_classes);
  for (std::uint32_t c = 0; c < spec.num_classes; ++c) ids[c] = c;
  out.manifest = split_classes(ids, mix_seed(spec.seed, hash_name("data.split")));
  return out;
}

std::vector<std::uint8_t> encode_dataset(const DatasetFile& data) {
  data.validate();
  ByteWriter w;
  w.bytes(kDatasetMagic);
  w.u16(kDatasetVersion);
  w.u32(static_cast<std::uint32_t>(data.classes.size()));
  w.u32(data.d_in);
  w.u32(data.attr_dim);
  w.u32(data.samples_per_class);
  for (const auto& c : data.classes) {
    w.u32(c.class_id);
    w.u32(c.token);
    for (float a : c.attributes) w.f32(a);
    for (float v : c.samples) w.f32(v);
  }
  w.seal_crc32();
  return w.take();
}

DatasetFile decode_dataset(std::span<const std::uint8_t> bytes) {
  const std::string what = "dataset";
  {
    ByteReader head(bytes, what);
    require(head.bytes(4) == kDatasetMagic, ErrorCategory::format, "dataset: bad magic, expected FSLD");
    const std::uint16_t version = head.u16();
    require(version == kDatasetVersion, ErrorCategory::format,
            "dataset: unsupported version " + std::to_string(version));
  }
  ByteReader r(verify_crc32(bytes, what), what);
  r.bytes(4);
  r.u16();
  DatasetFile data;
  const std::uint32_t num_classes = r.u32();
  data.d_in = r.u32();
  data.attr_dim = r.u32();
  data.samples_per_class = r.u32();
  const std::size_t per_class =
      8 + 4 * (static_cast<std::size_t>(data.attr_dim) +
               static_cast<std::size_t>(data.samples_per_class) * data.d_in);
  require(r.remaining() == per_class * num_classes, ErrorCategory::format,
          "dataset: payload size does not match header");
  data.classes.resize(num_classes);
  for (auto& c : data.classes) {
    c.class_id = r.u32();
    c.token = r.u32();
    c.attributes.resize(data.attr_dim);
    for (float& a : c.attributes) a = r.f32();
    c.samples.resize(static_cast<std::size_t>(data.samples_per_class) * data.d_in);
    for (float& v : c.samples) v = r.f32();
  }
  try {
    data.validate();
  } catch (const Error& e) {
    fail(ErrorCategory::format, std::string("dataset: ") + e.what());
  }
  return data;
}

void write_dataset(const std::filesystem::path& path, const DatasetFile& data) {
  write_file_bytes(path, encode_dataset(data));
}

DatasetFile read_dataset(const std::filesystem::path& path) { return decode_dataset(read_file_bytes(path)); }

std::string format_manifest(const SplitManifest& manifest) {
  std::ostringstream out;
  for (Split s : {Split::base, Split::val, Split::novel}) {
    out << to_string(s) << ":";
    const auto& ids = manifest.ids(s);
    for (std::size_t i = 0; i < ids.size(); ++i) out << (i == 0 ? " " : ",") << ids[i];
    out << "\n";
  }
  return out.str();
}

SplitManifest parse_manifest(std::string_view text) {
  SplitManifest m;
  std::set<std::string> seen;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    const auto colon = line.find(':');
    require(colon != std::string::npos, ErrorCategory::format, "manifest: expected '<split>: ids' in '" + line + "'");
    std::string key = line.substr(0, colon);
    key.erase(0, key.find_first_not_of(" \t"));
    key.erase(key.find_last_not_of(" \t") + 1);
    require(key == "base" || key == "val" || key == "novel", ErrorCategory::format,
            "manifest: unknown split '" + key + "'");
    require(seen.insert(key).second, ErrorCategory::format, "manifest: split '" + key + "' listed twice");
    auto& ids = key == "base" ? m.base : key == "val" ? m.val : m.novel;
    std::istringstream list(line.substr(colon + 1));
    std::string item;
    while (std::getline(list, item, ',')) {
      item.erase(0, item.find_first_not_of(" \t"));
      item.erase(item.find_last_not_of(" \t") + 1);
      if (item.empty()) continue;
      require(item.find_first_not_of("0123456789") == std::string::npos && item.size() <= 10,
              ErrorCategory::format, "manifest: bad class id '" + item + "'");
      const unsigned long long v = std::stoull(item);
      require(v <= 0xffffffffull, ErrorCategory::format, "manifest: class id out of range: " + item);
      ids.push_back(static_cast<std::uint32_t>(v));
    }
  }
  require(seen.size() == 3, ErrorCategory::format, "manifest: needs base, val and novel lines");
  try {
    m.validate();
  } catch (const Error& e) {
    fail(ErrorCategory::format, std::string("manifest: ") + e.what());
  }
  return m;
}

void write_manifest(const std::filesystem::path& path, const SplitManifest& manifest) {
  manifest.validate();
  write_text_file(path, format_manifest(manifest));
}

SplitManifest read_manifest(const std::filesystem::path& path) { return parse_manifest(read_text_file(path)); }

std::vector<ClassToken> class_tokens(const DatasetFile& data) {
  std::vector<ClassToken> out;
  out.reserve(data.classes.size());
  for (const auto& c : data.classes) out.push_back(ClassToken{c.token, c.attributes});
  return out;
}

std::uint64_t episode_seed(std::uint64_t master_seed, std::uint64_t index) noexcept {
  return mix_seed(master_seed, index);
}

EpisodeSampler::EpisodeSampler(const DatasetFile& data, const SplitManifest& manifest)
    : data_(&data), manifest_(&manifest) {
  manifest.validate(&data);
}

Episode EpisodeSampler::sample(Split split, std::size_t n_way, std::size_t k_shot, std::size_t q_query,
                               std::uint64_t seed) const {
  require(n_way > 0, ErrorCategory::invalid_argument, "N must be at least 1");
  require(q_query > 0, ErrorCategory::invalid_argument, "Q must be at least 1");
  const auto& ids = manifest_->ids(split);
  if (ids.size() < n_way) {
    fail(ErrorCategory::capacity, std::string(to_string(split)) + " split has " + std::to_string(ids.size()) +
                                      " classes, episode needs " + std::to_string(n_way));
  }
  if (data_->samples_per_class < k_shot + q_query) {
    fail(ErrorCategory::capacity, "classes hold " + std::to_string(data_->samples_per_class) +
                                      " samples, episode needs K+Q = " + std::to_string(k_shot + q_query));
  }
  if (k_shot > 0) labeled_draws_.fetch_add(1, std::memory_order_relaxed);

  Rng rng(seed);
  Episode ep;
  ep.n_way = n_way;
  ep.k_shot = k_shot;
  ep.q_query = q_query;
  const auto picked = rng.sample_without_replacement(ids.size(), n_way);
  std::vector<std::vector<std::size_t>> rows(n_way);
  for (std::size_t label = 0; label < n_way; ++label) {
    const std::size_t ci = data_->index_of(ids[picked[label]]);
    ep.classes.push_back(EpisodeClass{data_->classes[ci].class_id, data_->classes[ci].token});
    rows[label] = rng.sample_without_replacement(data_->samples_per_class, k_shot + q_query);
  }
  auto make = [&](std::size_t label, std::size_t row) {
    const std::size_t ci = data_->index_of(ep.classes[label].class_id);
    const auto feat = data_->sample(ci, row);
    return LabeledSample{sample_id(ci, row), std::vector<double>(feat.begin(), feat.end()), label};
  };
  for (std::size_t label = 0; label < n_way; ++label) {
    for (std::size_t j = 0; j < k_shot; ++j) ep.support.push_back(make(label, rows[label][j]));
  }
  for (std::size_t label = 0; label < n_way; ++label) {
    for (std::size_t j = 0; j < q_query; ++j) ep.query.push_back(make(label, rows[label][k_shot + j]));
  }
  return ep;
}

std::uint64_t EpisodeSampler::labeled_support_draws() const noexcept {
  return labeled_draws_.load(std::memory_order_relaxed);
}

}  // namespace protofuse
