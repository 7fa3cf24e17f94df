// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The ProtoFuse Authors

#include "protofuse/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

#include "protofuse/binary_io.hpp"
#include "protofuse/error.hpp"

namespace protofuse {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

bool parse_real(std::string_view s, double& out) {
  if (s.empty()) return false;
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && ptr == end && std::isfinite(out);
}

bool parse_count(std::string_view s, std::uint64_t& out) {
  if (s.empty()) return false;
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && ptr == end;
}

std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const auto comma = s.find(',', start);
    const auto piece = trim(s.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (!piece.empty()) out.push_back(piece);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

const ConfigKey& lookup(std::string_view key) {
  const auto& schema = config_schema();
  const auto it = std::find_if(schema.begin(), schema.end(), [&](const ConfigKey& k) { return k.name == key; });
  if (it == schema.end()) fail(ErrorCategory::config, "unknown config key '" + std::string(key) + "'");
  return *it;
}

std::string normalize(const ConfigKey& key, std::string_view raw) {
  const std::string value = trim(raw);
  const auto bad = [&](const std::string& why) {
    fail(ErrorCategory::config, "bad value '" + value + "' for " + key.name + ": " + why);
  };
  switch (key.kind) {
    case ValueKind::text:
      return value;
    case ValueKind::choice:
      if (std::find(key.choices.begin(), key.choices.end(), value) == key.choices.end()) {
        std::string allowed;
        for (const auto& c : key.choices) allowed += (allowed.empty() ? "" : "|") + c;
        bad("expected one of " + allowed);
      }
      return value;
    case ValueKind::real: {
      double v = 0.0;
      if (!parse_real(value, v)) bad("expected a finite number");
      return value;
    }
    case ValueKind::count: {
      std::uint64_t v = 0;
      if (!parse_count(value, v)) bad("expected a non-negative integer");
      return value;
    }
    case ValueKind::real_list: {
      std::string joined;
      for (const auto& item : split_list(value)) {
        double v = 0.0;
        if (!parse_real(item, v)) bad("expected comma-separated numbers");
        joined += (joined.empty() ? "" : ",") + item;
      }
      return joined;
    }
  }
  return value;
}

}  // namespace

const std::vector<ConfigKey>& config_schema() {
  using K = ValueKind;
  static const std::vector<ConfigKey> schema = {
      {"method", K::choice, "simplefsl_pp", "protonet | simplefsl | simplefsl_pp | zeroshot | zeroshot_lp",
       {"protonet", "simplefsl", "simplefsl_pp", "zeroshot", "zeroshot_lp"}},
      {"prompt", K::choice, "dataset", "prompt mode", {"fixed", "dataset", "class", "task"}},
      {"adaptor", K::choice, "bottleneck", "semantic to visual adaptor", {"linear", "bottleneck", "residual"}},
      {"fusion", K::choice, "add", "prototype fusion", {"add", "concat", "attention"}},
      {"lambda", K::real, "0.5", "self-ensemble weight", {}},
      {"alpha", K::real, "1.0", "self-distillation weight", {}},
      {"tau", K::real, "0.1", "visual classifier temperature", {}},
      {"tau2", K::real, "0.1", "fused classifier temperature", {}},
      {"contrastive_temp", K::real, "0.07", "zero-shot alignment temperature", {}},

      {"model.d_h", K::count, "128", "visual hidden width", {}},
      {"model.d_v", K::count, "64", "visual feature width", {}},
      {"model.d_text", K::count, "512", "semantic feature width", {}},
      {"model.vocab", K::count, "1024", "token table rows", {}},
      {"model.prompt_len", K::count, "4", "learnable context length", {}},
      {"model.mixer_gain", K::real, "3.0", "std of the frozen semantic mixer", {}},
      {"model.mixer_bias", K::real, "0.5", "std of the frozen semantic mixer bias", {}},
      {"model.seed", K::count, "7", "parameter initialisation seed", {}},

      {"optim.lr", K::real, "5e-4", "learning rate", {}},
      {"optim.visual_lr_meta", K::real, "1e-6", "visual learning rate during meta-training", {}},
      {"optim.weight_decay", K::real, "5e-2", "decoupled weight decay", {}},
      {"optim.beta1", K::real, "0.9", "", {}},
      {"optim.beta2", K::real, "0.999", "", {}},
      {"optim.eps", K::real, "1e-8", "", {}},

      {"pretrain.epochs", K::count, "10", "passes over the base split", {}},
      {"pretrain.batch_size", K::count, "64", "", {}},

      {"meta.episodes", K::count, "10000", "meta-training episodes", {}},
      {"meta.n_way", K::count, "5", "", {}},
      {"meta.k_shot", K::count, "1", "", {}},
      {"meta.q_query", K::count, "15", "", {}},
      {"meta.val_every", K::count, "500", "episodes between validations (0 disables)", {}},
      {"meta.val_tasks", K::count, "200", "1-shot validation episodes", {}},
      {"meta.seed", K::count, "11", "episode stream seed", {}},

      {"zeroshot.steps", K::count, "2000", "alignment steps", {}},
      {"zeroshot.batch_size", K::count, "16", "distinct base classes per alignment batch", {}},

      {"data.num_classes", K::count, "100", "", {}},
      {"data.samples_per_class", K::count, "600", "", {}},
      {"data.d_in", K::count, "32", "raw feature width", {}},
      {"data.attr_dim", K::count, "16", "semantic attribute width", {}},
      {"data.sigma", K::real, "1.0", "within-class noise std", {}},
      {"data.semantic_signal", K::real, "0.8", "share of the class mean explained by attributes", {}},
      {"data.seed", K::count, "2024", "", {}},

      {"eval.split", K::choice, "novel", "", {"base", "val", "novel"}},
      {"eval.n_way", K::count, "5", "", {}},
      {"eval.k_shot", K::count, "1", "", {}},
      {"eval.q_query", K::count, "15", "", {}},
      {"eval.tasks", K::count, "2000", "", {}},
      {"eval.seed", K::count, "99", "", {}},

      {"sweep.lambda", K::real_list, "0,0.25,0.5,0.75,1", "lambda grid", {}},
      {"sweep.alpha", K::real_list, "0,0.5,1,2,4", "alpha grid (one meta-training run per point)", {}},

      {"export.split", K::choice, "novel", "", {"base", "val", "novel"}},
      {"export.n_way", K::count, "5", "", {}},
      {"export.shots", K::count, "200", "", {}},
      {"export.seed", K::count, "5", "", {}},
      {"export.path", K::text, "", "default <out_dir>/embeddings.csv", {}},

      {"paths.out_dir", K::text, "run", "", {}},
      {"paths.data", K::text, "", "default <out_dir>/data.fsld", {}},
      {"paths.manifest", K::text, "", "default <out_dir>/manifest.txt", {}},
      {"paths.pretrain", K::text, "", "default <out_dir>/pretrain.fslc", {}},
      {"paths.checkpoint", K::text, "", "default <out_dir>/meta.fslc", {}},
      {"paths.report", K::text, "", "default <out_dir>/<command>.jsonl", {}},
  };
  return schema;
}

Config::Config() {
  for (const auto& key : config_schema()) values_[key.name] = key.default_value;
}

void Config::set(std::string_view key, std::string_view value) {
  const ConfigKey& k = lookup(key);
  values_[k.name] = normalize(k, value);
}

void Config::apply_override(std::string_view assignment) {
  const auto eq = assignment.find('=');
  require(eq != std::string_view::npos, ErrorCategory::config,
          "override '" + std::string(assignment) + "' is not key=value");
  set(trim(assignment.substr(0, eq)), assignment.substr(eq + 1));
}

void Config::apply_text(std::string_view text, std::string_view origin) {
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    require(eq != std::string::npos, ErrorCategory::config,
            std::string(origin) + ":" + std::to_string(lineno) + ": expected key = value");
    try {
      set(trim(std::string_view(line).substr(0, eq)), std::string_view(line).substr(eq + 1));
    } catch (const Error& e) {
      fail(ErrorCategory::config, std::string(origin) + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
}

const std::string& Config::text(std::string_view key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) fail(ErrorCategory::config, "unknown config key '" + std::string(key) + "'");
  return it->second;
}

double Config::real(std::string_view key) const {
  double v = 0.0;
  if (!parse_real(text(key), v)) fail(ErrorCategory::config, std::string(key) + " is not a number");
  return v;
}

std::uint64_t Config::count(std::string_view key) const {
  std::uint64_t v = 0;
  if (!parse_count(text(key), v)) fail(ErrorCategory::config, std::string(key) + " is not a count");
  return v;
}

std::vector<double> Config::real_list(std::string_view key) const {
  std::vector<double> out;
  for (const auto& item : split_list(text(key))) {
    double v = 0.0;
    if (!parse_real(item, v)) fail(ErrorCategory::config, std::string(key) + " holds a non-number");
    out.push_back(v);
  }
  return out;
}

std::string Config::resolved() const {
  std::string out;
  for (const auto& [k, v] : values_) out += k + " = " + v + "\n";
  return out;
}

Config load_config(const std::filesystem::path* file, std::span<const std::string> overrides) {
  Config cfg;
  if (file) cfg.apply_text(read_text_file(*file), file->string());
  for (const auto& o : overrides) cfg.apply_override(o);
  return cfg;
}

}  // namespace protofuse
