// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The ProtoFuse Authors

#include "protofuse/train_eval.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "protofuse/binary_io.hpp"
#include "protofuse/error.hpp"
#include "protofuse/optim.hpp"
#include "protofuse/random.hpp"

namespace protofuse {

namespace {

std::vector<double> to_doubles(std::span<const float> values) {
  return std::vector<double>(values.begin(), values.end());
}

AdamWOptions adamw_options(const Config& cfg) {
  AdamWOptions o;
  o.weight_decay = cfg.real("optim.weight_decay");
  o.beta1 = cfg.real("optim.beta1");
  o.beta2 = cfg.real("optim.beta2");
  o.eps = cfg.real("optim.eps");
  return o;
}

std::filesystem::path path_or(const Config& cfg, const char* key, const char* fallback) {
  const std::string& p = cfg.text(key);
  if (!p.empty()) return p;
  return std::filesystem::path(cfg.text("paths.out_dir")) / fallback;
}

std::string format_number(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return ec == std::errc() ? std::string(buf, ptr) : std::to_string(v);
}

std::uint64_t fnv1a(std::uint64_t h, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) {
    h ^= (v >> (8 * i)) & 0xffu;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::uint64_t fingerprint_of(const Episode& ep) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (const auto& c : ep.classes) h = fnv1a(h, c.class_id);
  for (const auto& s : ep.support) h = fnv1a(h, s.sample_id);
  for (const auto& s : ep.query) h = fnv1a(h, s.sample_id);
  return h;
}

}  // namespace

// ---------------------------------------------------------------------------
// Config views

SyntheticSpec synthetic_spec(const Config& cfg) {
  SyntheticSpec s;
  s.num_classes = static_cast<std::uint32_t>(cfg.count("data.num_classes"));
  s.samples_per_class = static_cast<std::uint32_t>(cfg.count("data.samples_per_class"));
  s.d_in = static_cast<std::uint32_t>(cfg.count("data.d_in"));
  s.attr_dim = static_cast<std::uint32_t>(cfg.count("data.attr_dim"));
  s.sigma = cfg.real("data.sigma");
  s.semantic_signal = cfg.real("data.semantic_signal");
  s.seed = cfg.count("data.seed");
  return s;
}

ModelConfig model_config(const Config& cfg, std::size_t d_in) {
  ModelConfig m;
  m.visual.d_in = d_in;
  m.visual.d_h = cfg.count("model.d_h");
  m.visual.d_v = cfg.count("model.d_v");
  m.semantic.vocab = cfg.count("model.vocab");
  m.semantic.d_text = cfg.count("model.d_text");
  m.semantic.mixer_gain = cfg.real("model.mixer_gain");
  m.semantic.bias_scale = cfg.real("model.mixer_bias");
  m.prompt_length = cfg.count("model.prompt_len");
  m.prompt = parse_prompt_mode(cfg.text("prompt"));
  m.adaptor = parse_adaptor_kind(cfg.text("adaptor"));
  m.fusion = parse_fusion_kind(cfg.text("fusion"));
  m.seed = cfg.count("model.seed");
  return m;
}

Hyperparams hyperparams(const Config& cfg) {
  Hyperparams h;
  h.lambda = cfg.real("lambda");
  h.alpha = cfg.real("alpha");
  h.tau = cfg.real("tau");
  h.tau2 = cfg.real("tau2");
  h.contrastive_temp = cfg.real("contrastive_temp");
  require(h.lambda >= 0.0 && h.alpha >= 0.0, ErrorCategory::config, "lambda and alpha must be non-negative");
  require(h.tau > 0.0 && h.tau2 > 0.0 && h.contrastive_temp > 0.0, ErrorCategory::config,
          "temperatures must be positive");
  return h;
}

Method config_method(const Config& cfg) { return parse_method(cfg.text("method")); }

std::filesystem::path data_path(const Config& cfg) { return path_or(cfg, "paths.data", "data.fsld"); }
std::filesystem::path manifest_path(const Config& cfg) { return path_or(cfg, "paths.manifest", "manifest.txt"); }
std::filesystem::path pretrain_path(const Config& cfg) { return path_or(cfg, "paths.pretrain", "pretrain.fslc"); }
std::filesystem::path checkpoint_path(const Config& cfg) { return path_or(cfg, "paths.checkpoint", "meta.fslc"); }
std::filesystem::path export_path(const Config& cfg) { return path_or(cfg, "export.path", "embeddings.csv"); }

std::filesystem::path report_path(const Config& cfg, const std::string& command) {
  const std::string& p = cfg.text("paths.report");
  if (!p.empty()) return p;
  return std::filesystem::path(cfg.text("paths.out_dir")) / (command + ".jsonl");
}

LoadedData load_data(const Config& cfg) {
  LoadedData d;
  d.data = read_dataset(data_path(cfg));
  d.manifest = read_manifest(manifest_path(cfg));
  d.manifest.validate(&d.data);
  return d;
}

std::size_t default_thread_count() {
  std::size_t hw = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("PROTOFUSE_THREADS")) {
    std::uint64_t v = 0;
    const std::string_view s(env);
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    require(ec == std::errc() && ptr == s.data() + s.size() && v > 0, ErrorCategory::config,
            "PROTOFUSE_THREADS must be a positive integer, got '" + std::string(s) + "'");
    return static_cast<std::size_t>(v);
  }
  return hw;
}

// ---------------------------------------------------------------------------
// Training

PretrainResult run_pretrain(const Config& cfg, const LoadedData& data, std::ostream* log) {
  const FewShotModel model(model_config(cfg, data.data.d_in), config_method(cfg));
  ParamStore store = model.initialize(class_tokens(data.data));
  const auto& base = data.manifest.base;
  require(!base.empty(), ErrorCategory::invalid_argument, "base split is empty");
  model.visual().register_head(store, base.size(), model.config().seed);

  struct Item {
    std::size_t class_index;
    std::size_t row;
    std::size_t label;
  };
  std::vector<Item> items;
  for (std::size_t label = 0; label < base.size(); ++label) {
    const std::size_t ci = data.data.index_of(base[label]);
    for (std::size_t r = 0; r < data.data.samples_per_class; ++r) items.push_back({ci, r, label});
  }

  const std::size_t epochs = cfg.count("pretrain.epochs");
  const std::size_t batch = cfg.count("pretrain.batch_size");
  require(batch > 0, ErrorCategory::config, "pretrain.batch_size must be positive");
  const double lr = cfg.real("optim.lr");
  AdamW opt(adamw_options(cfg));
  const std::vector<ParamGroup> groups{{"visual.", lr}, {"head.", lr}};

  PretrainResult result;
  for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
    Rng rng(mix_seed(mix_seed(model.config().seed, hash_name("pretrain.shuffle")), epoch));
    const auto order = rng.sample_without_replacement(items.size(), items.size());
    double total = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t end = std::min(order.size(), start + batch);
      std::vector<std::vector<double>> rows;
      std::vector<std::size_t> labels;
      for (std::size_t i = start; i < end; ++i) {
        const Item& it = items[order[i]];
        rows.push_back(to_doubles(data.data.sample(it.class_index, it.row)));
        labels.push_back(it.label);
      }
      const Tensor loss = loss_pretrain(model, store, Tensor::stack(rows), labels);
      loss.backward();
      opt.step(store, groups);
      store.zero_grad();
      total += loss.item();
      ++batches;
    }
    result.epoch_losses.push_back(total / static_cast<double>(batches));
    if (log) {
      *log << "pretrain epoch " << (epoch + 1) << "/" << epochs << " loss " << std::fixed << std::setprecision(6)
           << result.epoch_losses.back() << std::defaultfloat << "\n";
    }
  }
  result.checkpoint = Checkpoint{std::move(store), "pretrain", epochs, cfg.resolved()};
  return result;
}

ParamStore initial_params(const FewShotModel& model, const DatasetFile& data, const ParamStore* init) {
  ParamStore store = model.initialize(class_tokens(data));
  if (init) {
    ParamStore visual;
    for (const auto& [name, entry] : init->entries()) {
      if (name.rfind("visual.", 0) == 0) {
        visual.add(name, entry.tensor.shape(), std::vector<double>(entry.tensor.values().begin(),
                                                                   entry.tensor.values().end()), entry.frozen);
      }
    }
    load_matching(store, visual);
  }
  return store;
}

ParamStore params_from_checkpoint(const FewShotModel& model, const DatasetFile& data, const ParamStore& ckpt) {
  ParamStore store = model.initialize(class_tokens(data));
  for (const auto& name : store.names()) {
    require(ckpt.contains(name), ErrorCategory::invalid_argument,
            "checkpoint lacks entry '" + name + "' required by the configured model");
  }
  load_matching(store, ckpt);
  return store;
}

namespace {

std::vector<ParamGroup> meta_groups(const FewShotModel& model, const Config& cfg) {
  std::vector<ParamGroup> groups;
  for (const auto& prefix : model.meta_trainable_prefixes()) {
    groups.push_back({prefix, prefix == "visual." ? cfg.real("optim.visual_lr_meta") : cfg.real("optim.lr")});
  }
  return groups;
}

Tensor alignment_loss(const FewShotModel& model, const ParamStore& store, const LoadedData& data,
                      std::size_t batch, std::uint64_t seed, double temperature) {
  const auto& base = data.manifest.base;
  Rng rng(seed);
  const auto picked = rng.sample_without_replacement(base.size(), std::min(batch, base.size()));
  std::vector<std::vector<double>> rows;
  std::vector<TokenId> tokens;
  std::vector<std::uint32_t> ids;
  for (std::size_t p : picked) {
    const std::size_t ci = data.data.index_of(base[p]);
    rows.push_back(to_doubles(data.data.sample(ci, rng.below(data.data.samples_per_class))));
    tokens.push_back(data.data.classes[ci].token);
    ids.push_back(data.data.classes[ci].class_id);
  }
  const Tensor visual = model.visual().forward(store, Tensor::stack(rows));
  const Tensor text = model.class_text_features(store, tokens);
  return loss_contrastive_align(visual, text, ids, temperature);
}

}  // namespace

MetaTrainResult run_meta_train(const Config& cfg, const LoadedData& data, const ParamStore* init,
                               std::ostream* log) {
  const Method method = config_method(cfg);
  const FewShotModel model(model_config(cfg, data.data.d_in), method);
  const Hyperparams hyper = hyperparams(cfg);
  ParamStore store = initial_params(model, data.data, init);
  const EpisodeSampler sampler(data.data, data.manifest);

  const std::size_t n_way = cfg.count("meta.n_way");
  const std::size_t k_shot = cfg.count("meta.k_shot");
  const std::size_t q_query = cfg.count("meta.q_query");
  const std::uint64_t seed = cfg.count("meta.seed");
  const std::size_t val_every = cfg.count("meta.val_every");
  const std::size_t val_tasks = cfg.count("meta.val_tasks");
  const bool zero_shot = is_zero_shot(method);
  const std::size_t steps = zero_shot ? cfg.count("zeroshot.steps") : cfg.count("meta.episodes");
  const bool validate = val_every > 0 && val_tasks > 0 && !data.manifest.val.empty();

  EvalSpec val_spec;
  val_spec.split = Split::val;
  val_spec.n_way = std::min<std::size_t>(n_way, data.manifest.val.size());
  val_spec.k_shot = 1;
  val_spec.q_query = q_query;
  val_spec.tasks = val_tasks;
  val_spec.seed = mix_seed(seed, hash_name("meta.validation"));
  val_spec.threads = default_thread_count();
  auto validation_accuracy = [&](const ParamStore& s) {
    return evaluate(model, s, data, val_spec, hyper, &sampler).mean;
  };

  MetaTrainResult result;
  ParamStore best = store;
  if (validate) {
    result.best_accuracy = validation_accuracy(store);
    result.validation.push_back({0, result.best_accuracy});
  }

  AdamW opt(adamw_options(cfg));
  const auto groups = meta_groups(model, cfg);
  const std::uint64_t train_seed = mix_seed(seed, hash_name("meta.train"));
  double running = 0.0;
  std::size_t running_n = 0;
  for (std::size_t step = 1; step <= steps; ++step) {
    Tensor loss;
    if (zero_shot) {
      loss = alignment_loss(model, store, data, cfg.count("zeroshot.batch_size"), episode_seed(train_seed, step - 1),
                            hyper.contrastive_temp);
    } else {
      const Episode ep = sampler.sample(Split::base, n_way, k_shot, q_query, episode_seed(train_seed, step - 1));
      const EpisodeForward fwd = model.forward(store, ep, hyper);
      loss = meta_loss(fwd, ep.query_labels(), hyper.alpha, method).total;
    }
    loss.backward();
    opt.step(store, groups);
    store.zero_grad();
    running += loss.item();
    ++running_n;

    const bool last = step == steps;
    if (validate && (step % val_every == 0 || last)) {
      const double acc = validation_accuracy(store);
      result.validation.push_back({step, acc});
      if (acc > result.best_accuracy) {
        result.best_accuracy = acc;
        result.best_episode = step;
        best = store;
      }
      if (log) {
        *log << "meta-train step " << step << "/" << steps << " loss " << std::fixed << std::setprecision(6)
             << running / static_cast<double>(running_n) << " val " << std::setprecision(4) << acc
             << std::defaultfloat << "\n";
      }
      running = 0.0;
      running_n = 0;
    }
  }
  if (!validate) {
    best = std::move(store);
    result.best_episode = steps;
  }
  best.remove_prefix("head.");
  result.checkpoint = Checkpoint{std::move(best), zero_shot ? "zero-shot" : "meta-train", result.best_episode,
                                 cfg.resolved()};
  return result;
}

// ---------------------------------------------------------------------------
// Evaluation

EvalSpec eval_spec(const Config& cfg) {
  EvalSpec s;
  s.split = parse_split(cfg.text("eval.split"));
  s.n_way = cfg.count("eval.n_way");
  s.k_shot = cfg.count("eval.k_shot");
  s.q_query = cfg.count("eval.q_query");
  s.tasks = cfg.count("eval.tasks");
  s.seed = cfg.count("eval.seed");
  s.threads = default_thread_count();
  return s;
}

void summarize(EvalReport& report) {
  const std::size_t t = report.accuracies.size();
  report.tasks = t;
  require(t > 0, ErrorCategory::invalid_argument, "no task accuracies to summarize");
  double sum = 0.0;
  for (double a : report.accuracies) {
    require(a >= 0.0 && a <= 1.0, ErrorCategory::invalid_argument, "task accuracy outside [0, 1]");
    sum += a;
  }
  report.mean = sum / static_cast<double>(t);
  if (t < 2) {
    report.ci95 = 0.0;
    return;
  }
  double ss = 0.0;
  for (double a : report.accuracies) ss += (a - report.mean) * (a - report.mean);
  const double sd = std::sqrt(ss / static_cast<double>(t - 1));
  report.ci95 = 1.96 * sd / std::sqrt(static_cast<double>(t));
}

EvalReport evaluate(const FewShotModel& model, const ParamStore& store, const LoadedData& data,
                    const EvalSpec& spec, const Hyperparams& hyper, const EpisodeSampler* sampler) {
  require(spec.tasks > 0, ErrorCategory::invalid_argument, "evaluation needs at least one task");
  std::optional<EpisodeSampler> own;
  if (!sampler) sampler = &own.emplace(data.data, data.manifest);
  const std::size_t k_shot = is_zero_shot(model.method()) ? 0 : spec.k_shot;
  require(k_shot > 0 || is_zero_shot(model.method()), ErrorCategory::invalid_argument,
          "few-shot evaluation needs K >= 1");

  const auto started = std::chrono::steady_clock::now();
  std::vector<double> acc(spec.tasks);
  std::vector<std::uint64_t> prints(spec.tasks);
  std::vector<std::exception_ptr> errors(spec.tasks);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t t = next.fetch_add(1); t < spec.tasks; t = next.fetch_add(1)) {
      try {
        const Episode ep = sampler->sample(spec.split, spec.n_way, k_shot, spec.q_query, episode_seed(spec.seed, t));
        prints[t] = fingerprint_of(ep);
        acc[t] = episode_accuracy(model, store, ep, hyper);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    }
  };
  const std::size_t threads = std::max<std::size_t>(1, std::min(spec.threads, spec.tasks));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  EvalReport report;
  report.method = std::string(to_string(model.method()));
  report.split = std::string(to_string(spec.split));
  report.n_way = spec.n_way;
  report.k_shot = k_shot;
  report.q_query = spec.q_query;
  report.seed = spec.seed;
  report.accuracies = std::move(acc);
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (std::uint64_t p : prints) h = fnv1a(h, p);
  report.episode_fingerprint = h;
  summarize(report);
  report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return report;
}

std::string report_json(const EvalReport& report, const std::string& kind, const std::string& config_echo) {
  nlohmann::json j;
  j["kind"] = kind;
  j["label"] = report.label;
  j["method"] = report.method;
  j["split"] = report.split;
  j["n_way"] = report.n_way;
  j["k_shot"] = report.k_shot;
  j["q_query"] = report.q_query;
  j["tasks"] = report.tasks;
  j["seed"] = report.seed;
  j["mean"] = report.mean;
  j["ci95"] = report.ci95;
  j["accuracies"] = report.accuracies;
  j["episode_fingerprint"] = report.episode_fingerprint;
  nlohmann::json config = nlohmann::json::object();
  std::istringstream in(config_echo);
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find(" = ");
    if (eq != std::string::npos) config[line.substr(0, eq)] = line.substr(eq + 3);
  }
  j["config"] = config;
  return j.dump();
}

void print_table(std::ostream& out, const std::string& title, const std::vector<EvalReport>& rows) {
  std::size_t width = 12;
  for (const auto& r : rows) width = std::max(width, (r.label.empty() ? r.method : r.label).size() + 2);
  out << title << "\n";
  out << std::left << std::setw(static_cast<int>(width)) << "row" << std::setw(14) << "method" << std::setw(12)
      << "task" << std::setw(8) << "T" << std::setw(18) << "accuracy (%)" << "seconds\n";
  for (const auto& r : rows) {
    std::ostringstream task, accuracy;
    task << r.n_way << "w" << r.k_shot << "s" << r.q_query << "q";
    accuracy << std::fixed << std::setprecision(2) << 100.0 * r.mean << " +- " << 100.0 * r.ci95;
    out << std::left << std::setw(static_cast<int>(width)) << (r.label.empty() ? r.method : r.label)
        << std::setw(14) << r.method << std::setw(12) << task.str() << std::setw(8) << r.tasks << std::setw(18)
        << accuracy.str() << std::fixed << std::setprecision(1) << r.wall_seconds << std::defaultfloat << "\n";
  }
}

// ---------------------------------------------------------------------------
// Experiments

const std::vector<std::string>& ablation_labels() {
  static const std::vector<std::string> labels{"Visual backbone", "+ fixed Prompt", "+ Learnable Prompt",
                                               "+ self-ensemble", "+ self-Distillation"};
  return labels;
}

Config ablation_row_config(const Config& cfg, std::size_t index) {
  require(index < ablation_labels().size(), ErrorCategory::invalid_argument, "ablation row out of range");
  Config row = cfg;
  const std::string learnable = cfg.text("prompt") == "fixed" ? "dataset" : cfg.text("prompt");
  switch (index) {
    case 0:
      row.set("method", "protonet");
      break;
    case 1:
      row.set("method", "simplefsl");
      row.set("prompt", "fixed");
      break;
    case 2:
      row.set("method", "simplefsl");
      row.set("prompt", learnable);
      break;
    case 3:
      row.set("method", "simplefsl_pp");
      row.set("prompt", learnable);
      row.set("alpha", "0");
      break;
    default:
      row.set("method", "simplefsl_pp");
      row.set("prompt", learnable);
      break;
  }
  return row;
}

AblationReport run_ablation(const Config& cfg, const LoadedData& data, const ParamStore& pretrained,
                            std::ostream* log) {
  AblationReport report;
  const EpisodeSampler sampler(data.data, data.manifest);
  for (std::size_t i = 0; i < ablation_labels().size(); ++i) {
    const Config row = ablation_row_config(cfg, i);
    if (log) *log << "ablation row " << (i + 1) << ": " << ablation_labels()[i] << "\n";
    const MetaTrainResult trained = run_meta_train(row, data, &pretrained, log);
    const FewShotModel model(model_config(row, data.data.d_in), config_method(row));
    EvalReport r = evaluate(model, trained.checkpoint.params, data, eval_spec(row), hyperparams(row), &sampler);
    r.label = ablation_labels()[i];
    report.rows.push_back(std::move(r));
  }
  return report;
}

void pick_best(SweepTable& table) {
  require(!table.rows.empty(), ErrorCategory::invalid_argument, "empty sweep");
  table.best_index = 0;
  for (std::size_t i = 1; i < table.rows.size(); ++i) {
    if (table.rows[i].mean > table.rows[table.best_index].mean) table.best_index = i;
  }
  table.best_on_boundary =
      table.rows.size() > 1 && (table.best_index == 0 || table.best_index + 1 == table.rows.size());
}

std::vector<SweepTable> run_sweep(const Config& cfg, const LoadedData& data, const ParamStore& pretrained,
                                  std::ostream* log) {
  Config base = cfg;
  base.set("method", "simplefsl_pp");
  const EpisodeSampler sampler(data.data, data.manifest);
  const EvalSpec spec = eval_spec(base);
  std::vector<SweepTable> tables;

  const auto lambdas = base.real_list("sweep.lambda");
  if (!lambdas.empty()) {
    SweepTable t;
    t.parameter = "lambda";
    t.grid = lambdas;
    if (log) *log << "sweep lambda: training once at alpha=" << base.text("alpha") << "\n";
    const MetaTrainResult trained = run_meta_train(base, data, &pretrained, log);
    const FewShotModel model(model_config(base, data.data.d_in), Method::simplefsl_pp);
    for (double lambda : lambdas) {
      Config point = base;
      point.set("lambda", format_number(lambda));
      EvalReport r = evaluate(model, trained.checkpoint.params, data, spec, hyperparams(point), &sampler);
      r.label = "lambda=" + format_number(lambda);
      t.rows.push_back(std::move(r));
    }
    pick_best(t);
    tables.push_back(std::move(t));
  }

  const auto alphas = base.real_list("sweep.alpha");
  if (!alphas.empty()) {
    SweepTable t;
    t.parameter = "alpha";
    t.grid = alphas;
    for (double alpha : alphas) {
      Config point = base;
      point.set("alpha", format_number(alpha));
      if (log) *log << "sweep alpha=" << format_number(alpha) << "\n";
      const MetaTrainResult trained = run_meta_train(point, data, &pretrained, log);
      const FewShotModel model(model_config(point, data.data.d_in), Method::simplefsl_pp);
      EvalReport r = evaluate(model, trained.checkpoint.params, data, spec, hyperparams(point), &sampler);
      r.label = "alpha=" + format_number(alpha);
      t.rows.push_back(std::move(r));
    }
    pick_best(t);
    tables.push_back(std::move(t));
  }
  return tables;
}

EmbeddingExport compute_embeddings(const FewShotModel& model, const ParamStore& store, const LoadedData& data,
                                   Split split, std::size_t n_way, std::size_t shots, std::uint64_t seed) {
  require(shots > 0, ErrorCategory::invalid_argument, "export needs at least one shot");
  const EpisodeSampler sampler(data.data, data.manifest);
  const Episode ep = sampler.sample(split, n_way, shots, 1, seed);
  NoGradGuard guard;
  Tensor features;
  if (uses_semantic(model.method()) && !is_zero_shot(model.method())) {
    features = model.forward(store, ep, Hyperparams{}).support_fused;
  } else {
    std::vector<std::vector<double>> rows;
    for (const auto& s : ep.support) rows.push_back(s.features);
    features = model.visual().forward(store, Tensor::stack(rows));
  }
  EmbeddingExport out;
  out.rows = features.to_rows();
  for (const auto& s : ep.support) out.labels.push_back(s.label);
  return out;
}

void write_embeddings_csv(const std::filesystem::path& path, const EmbeddingExport& embeddings) {
  std::string text;
  for (std::size_t i = 0; i < embeddings.rows.size(); ++i) {
    text += std::to_string(embeddings.labels[i]);
    for (double v : embeddings.rows[i]) text += "," + format_number(v);
    text += "\n";
  }
  write_text_file(path, text);
}

}  // namespace protofuse
