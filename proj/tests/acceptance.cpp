// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The ProtoFuse Authors
//
// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// nonzero when any criterion fails.

#include <CLI11.hpp>

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "oracle.hpp"
#include "protofuse/binary_io.hpp"
#include "protofuse/checkpoint.hpp"
#include "protofuse/data.hpp"
#include "protofuse/error.hpp"
#include "protofuse/functional.hpp"
#include "protofuse/grad_check.hpp"
#include "protofuse/train_eval.hpp"
#include "support.hpp"

namespace fs = std::filesystem;
using namespace protofuse;
using Vec = std::vector<double>;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string fmt(double v, int digits = 4) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << v;
  return s.str();
}

std::string sci(double v) {
  std::ostringstream s;
  s << std::scientific << std::setprecision(2) << v;
  return s.str();
}

std::string pct(const EvalReport& r) { return fmt(100.0 * r.mean, 2) + "+-" + fmt(100.0 * r.ci95, 2); }

void perturb_trainable(ParamStore& store, Rng& rng, double scale) {
  for (const auto& name : store.names()) {
    if (store.is_frozen(name)) continue;
    for (double& v : store.get(name).mutable_values()) v += scale * rng.normal();
  }
}

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) return INFINITY;
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
  return worst;
}

// ---------------------------------------------------------------------------
// 1. Gradient correctness

Verdict gradient_correctness() {
  const Stopwatch clock;
  Rng rng(101);
  Verdict v{true, ""};
  for (Method m : {Method::protonet, Method::simplefsl, Method::simplefsl_pp, Method::zeroshot_lp}) {
    const FewShotModel model(m == Method::simplefsl_pp
                                 ? test::toy_model_config(PromptMode::task_aware, AdaptorKind::bottleneck,
                                                          FusionKind::attention)
                                 : test::toy_model_config(),
                             m);
    ParamStore store = model.initialize(test::toy_tokens(2));
    perturb_trainable(store, rng, 0.3);
    const Episode ep = test::random_episode(rng, 2, 1, 2, model.config().visual.d_in);
    Hyperparams hyper;
    hyper.contrastive_temp = 0.5;
    auto builder = [&](const ParamStore& s) { return test::train_loss(model, s, ep, hyper); };
    const GradCheckReport report = finite_diff_check(builder, store, 1e-5);
    std::set<std::string> missing;
    for (const auto& prefix : model.meta_trainable_prefixes()) {
      bool present = false, found = false;
      for (const auto& name : store.names()) present = present || (name.starts_with(prefix) && !store.is_frozen(name));
      if (!present) continue;
      for (const auto& e : report.entries) found = found || e.name.starts_with(prefix);
      if (!found) missing.insert(prefix);
    }
    const double worst = report.max_rel_error();
    v.pass = v.pass && !report.entries.empty() && missing.empty() && worst < 1e-4;
    v.detail += std::string(to_string(m)) + " " + std::to_string(report.entries.size()) + " groups, max rel error " + sci(worst) + "; ";
    for (const auto& p : missing) v.detail += "unchecked group " + p + "; ";
  }
  const double t = clock.seconds();
  v.pass = v.pass && t < 30.0;
  v.detail += "limit 1e-4; runtime " + fmt(t, 2) + " s (limit 30)";
  return v;
}

// ---------------------------------------------------------------------------
// 2. Oracle equivalence

Verdict oracle_equivalence() {
  const Stopwatch clock;
  Rng rng(202);
  double worst_proto = 0.0, worst_cls = 0.0, worst_ens = 0.0, worst_loss = 0.0;
  const AdaptorKind kinds[] = {AdaptorKind::linear, AdaptorKind::bottleneck, AdaptorKind::residual};
  for (std::size_t t = 0; t < 100; ++t) {
    const PromptMode prompt = t % 2 ? PromptMode::fixed : PromptMode::dataset;
    const FewShotModel model(test::toy_model_config(prompt, kinds[t % 3]), Method::simplefsl_pp);
    const std::size_t n = 2 + rng.below(4), k = 1 + rng.below(3), q = 1 + rng.below(3);
    ParamStore store = model.initialize(test::toy_tokens(n, t));
    perturb_trainable(store, rng, 0.3);
    const Episode ep = test::random_episode(rng, n, k, q, model.config().visual.d_in);
    Hyperparams hyper;
    hyper.lambda = rng.uniform(0.0, 1.0);
    hyper.alpha = rng.uniform(0.0, 2.0);
    hyper.tau = rng.uniform(0.05, 1.0);
    hyper.tau2 = rng.uniform(0.05, 1.0);

    const PrototypeSet protos = compute_prototypes(model, store, ep);
    const oracle::Prototypes ref = oracle::prototypes(store, model.config(), ep, true);
    for (std::size_t c = 0; c < n; ++c) {
      worst_proto = std::max({worst_proto, max_abs_diff(protos.fused[c], ref.fused[c]),
                              max_abs_diff(protos.visual[c], ref.visual[c])});
    }

    std::vector<Vec> ys, y0s;
    const auto preds = predict_episode(model, store, ep, hyper);
    for (std::size_t i = 0; i < ep.query.size(); ++i) {
      const Vec f = oracle::visual(store, ep.query[i].features);
      const Vec y = oracle::classify(f, ref.fused, hyper.tau2);
      const Vec y0 = oracle::classify(f, ref.visual, hyper.tau);
      worst_cls = std::max({worst_cls, max_abs_diff(classify_fused(f, protos, hyper.tau2), y),
                            max_abs_diff(classify_visual(f, protos, hyper.tau), y0),
                            max_abs_diff(preds[i].y_hat, y), max_abs_diff(preds[i].y_hat0, y0)});
      const Vec e = oracle::ensemble(y, y0, hyper.lambda);
      worst_ens = std::max({worst_ens, max_abs_diff(ensemble(y, y0, hyper.lambda), e),
                            max_abs_diff(preds[i].y_hat_pp, e)});
      ys.push_back(y);
      y0s.push_back(y0);
    }
    const auto labels = ep.query_labels();
    worst_loss = std::max(
        {worst_loss,
         std::abs(loss_meta(preds, labels, hyper.alpha, Method::simplefsl) -
                  oracle::meta_loss(ys, y0s, labels, hyper.alpha, false)),
         std::abs(loss_meta(preds, labels, hyper.alpha, Method::simplefsl_pp) -
                  oracle::meta_loss(ys, y0s, labels, hyper.alpha, true))});
  }
  const double t = clock.seconds();
  const double worst = std::max({worst_proto, worst_cls, worst_ens, worst_loss});
  std::ostringstream d;
  d << std::scientific << std::setprecision(2) << "100 episodes; max abs diff prototypes " << worst_proto
    << ", classifiers " << worst_cls << ", ensemble " << worst_ens << ", loss_meta " << worst_loss
    << " (limit 1e-10); runtime " << std::fixed << t << " s (limit 10)";
  return {worst <= 1e-10 && t < 10.0, d.str()};
}

// ---------------------------------------------------------------------------
// 3. Distribution invariants

Verdict distribution_invariants() {
  constexpr std::size_t kCases = 1000;
  Rng rng(303);
  std::size_t bad_softmax = 0, bad_kl = 0, bad_kd = 0, bad_ens = 0, bad_scale = 0;
  for (std::size_t t = 0; t < kCases; ++t) {
    const std::size_t n = 2 + rng.below(9);
    const Vec logits = test::random_vector(rng, n, 5.0);
    const Vec p = softmax(logits, rng.uniform(0.01, 10.0));
    double total = 0.0;
    bool nonneg = true;
    for (double x : p) {
      total += x;
      nonneg = nonneg && x >= 0.0;
    }
    bad_softmax += !(nonneg && std::abs(total - 1.0) < 1e-12);

    const Vec a = test::random_distribution(rng, n);
    const Vec b = test::random_distribution(rng, n);
    bad_kl += !(kl_divergence(a, b) >= 0.0 && kl_divergence(a, a) == 0.0);
    const double kd = loss_kd(a, b);
    bad_kd += !(kd >= 0.0 && std::abs(kd - loss_kd(b, a)) <= 1e-15 && std::abs(loss_kd(a, a)) <= 1e-15);

    const double lambda = rng.uniform(0.0, 2.0);
    double ens = 0.0;
    for (double x : ensemble(a, b, lambda)) ens += x;
    bad_ens += !(std::abs(ens - (1.0 + lambda)) < 1e-12);

    const std::size_t d = 2 + rng.below(15);
    PrototypeSet protos;
    for (std::size_t c = 0; c < n; ++c) {
      protos.fused.push_back(test::random_vector(rng, d));
      protos.visual.push_back(test::random_vector(rng, d));
    }
    Vec query = test::random_vector(rng, d);
    const double tau = rng.uniform(0.05, 1.0);
    const Vec yf = classify_fused(query, protos, tau);
    const Vec yv = classify_visual(query, protos, tau);
    const double factor = std::exp(rng.uniform(-5.0, 5.0));
    for (double& x : query) x *= factor;
    PrototypeSet scaled = protos;
    for (auto& row : scaled.fused) {
      for (double& x : row) x *= 3.0;
    }
    for (auto& row : scaled.visual) {
      for (double& x : row) x *= 0.25;
    }
    bad_scale += !(max_abs_diff(classify_fused(query, scaled, tau), yf) < 1e-12 &&
                   max_abs_diff(classify_visual(query, scaled, tau), yv) < 1e-12);
  }
  std::ostringstream d;
  d << kCases << " cases each; violations softmax " << bad_softmax << ", KL " << bad_kl << ", loss_kd " << bad_kd
    << ", ensemble sum " << bad_ens << ", cosine scale " << bad_scale;
  return {bad_softmax + bad_kl + bad_kd + bad_ens + bad_scale == 0, d.str()};
}

// ---------------------------------------------------------------------------
// 4. Freeze contract

Verdict freeze_contract(const fs::path& work) {
  Config cfg;
  cfg.set("paths.out_dir", (work / "freeze").string());
  cfg.set("prompt", "fixed");
  cfg.set("meta.episodes", "1000");
  const SyntheticDataset ds = generate_synthetic(synthetic_spec(cfg));
  const LoadedData data{ds.data, ds.manifest};
  const PretrainResult pre = run_pretrain(cfg, data);
  const MetaTrainResult meta = run_meta_train(cfg, data, &pre.checkpoint.params);
  const fs::path path = work / "freeze" / "meta.fslc";
  save_checkpoint(path, meta.checkpoint);
  const ParamStore saved = load_checkpoint(path).params;

  const FewShotModel model(model_config(cfg, data.data.d_in), config_method(cfg));
  const ParamStore fresh = model.initialize(class_tokens(data.data));
  bool prompt_entries = false;
  for (const auto& name : saved.names()) prompt_entries = prompt_entries || name.starts_with("prompt.");
  const bool pre_ok = prefix_bitwise_equal(pre.checkpoint.params, fresh, "semantic.");
  const bool meta_ok = prefix_bitwise_equal(saved, fresh, "semantic.");
  const std::uint64_t steps = meta.validation.empty() ? 0 : meta.validation.back().episode;
  const bool adaptor_moved = !prefix_bitwise_equal(saved, fresh, "adaptor.");
  std::string detail = std::to_string(steps) + " meta episodes; semantic.* after pretrain " +
                       (pre_ok ? "identical" : "CHANGED") + ", after meta-train " +
                       (meta_ok ? "identical" : "CHANGED") + "; fixed prompt reads frozen token rows, " +
                       (prompt_entries ? "unexpected prompt.* entries present" : "no prompt.* entries") +
                       "; adaptor " + (adaptor_moved ? "trained" : "unchanged (best state was step 0)");
  return {pre_ok && meta_ok && !prompt_entries && steps >= 1000, detail};
}

// ---------------------------------------------------------------------------
// 5-7. Default synthetic dataset

struct DefaultRun {
  Config cfg;
  LoadedData data;
  ParamStore pretrained;
  double pretrain_seconds = 0.0;
};

DefaultRun default_run(const fs::path& work) {
  const Stopwatch clock;
  DefaultRun run;
  run.cfg.set("paths.out_dir", (work / "default").string());
  SyntheticDataset ds = generate_synthetic(synthetic_spec(run.cfg));
  run.data = LoadedData{std::move(ds.data), std::move(ds.manifest)};
  run.pretrained = run_pretrain(run.cfg, run.data).checkpoint.params;
  run.pretrain_seconds = clock.seconds();
  return run;
}

struct AblationOutcome {
  std::vector<EvalReport> rows;
  std::vector<ParamStore> params;
  double seconds = 0.0;
};

AblationOutcome run_ladder(const DefaultRun& run) {
  const Stopwatch clock;
  AblationOutcome out;
  const EpisodeSampler sampler(run.data.data, run.data.manifest);
  for (std::size_t i = 0; i < ablation_labels().size(); ++i) {
    const Config row = ablation_row_config(run.cfg, i);
    MetaTrainResult trained = run_meta_train(row, run.data, &run.pretrained);
    const FewShotModel model(model_config(row, run.data.data.d_in), config_method(row));
    EvalReport r = evaluate(model, trained.checkpoint.params, run.data, eval_spec(row), hyperparams(row), &sampler);
    r.label = ablation_labels()[i];
    std::cout << "  ladder row " << (i + 1) << " " << r.label << ": " << pct(r) << " over " << r.tasks
              << " tasks\n"
              << std::flush;
    out.rows.push_back(std::move(r));
    out.params.push_back(std::move(trained.checkpoint.params));
  }
  out.seconds = clock.seconds();
  return out;
}

Verdict ablation_direction(const DefaultRun& run, const AblationOutcome& ladder) {
  const auto& r = ladder.rows;
  const double floor = r[2].mean - r[2].ci95;
  const bool monotone = r[0].mean <= r[1].mean && r[1].mean <= r[2].mean;
  const bool separated = r[2].mean - r[0].mean > r[0].ci95 + r[2].ci95;
  const bool ensemble_ok = r[3].mean >= floor;
  const bool distill_ok = r[4].mean >= floor;
  const double total = run.pretrain_seconds + ladder.seconds;
  const bool fast = total < 600.0;
  std::string d;
  for (std::size_t i = 0; i < r.size(); ++i) d += r[i].label + " " + pct(r[i]) + "; ";
  d += std::string("non-decreasing first three: ") + (monotone ? "yes" : "NO") +
       "; learnable vs visual CIs disjoint: " + (separated ? "yes" : "NO") + "; ensemble >= " +
       fmt(100.0 * floor, 2) + ": " + (ensemble_ok ? "yes" : "NO") + "; distillation >= " + fmt(100.0 * floor, 2) +
       ": " + (distill_ok ? "yes" : "NO") + "; runtime " + fmt(total, 1) + " s (limit 600)";
  return {monotone && separated && ensemble_ok && distill_ok && fast, d};
}

Verdict shot_gap(const DefaultRun& run, const AblationOutcome& ladder) {
  const EpisodeSampler sampler(run.data.data, run.data.manifest);
  auto five_shot = [&](std::size_t row_index) {
    const Config row = ablation_row_config(run.cfg, row_index);
    const FewShotModel model(model_config(row, run.data.data.d_in), config_method(row));
    EvalSpec spec = eval_spec(row);
    spec.k_shot = 5;
    return evaluate(model, ladder.params[row_index], run.data, spec, hyperparams(row), &sampler);
  };
  const EvalReport visual5 = five_shot(0);
  const EvalReport simple5 = five_shot(2);
  const double gap1 = ladder.rows[2].mean - ladder.rows[0].mean;
  const double gap5 = simple5.mean - visual5.mean;
  const std::string d = "K=1 gap " + fmt(100.0 * gap1, 2) + " pts (" + pct(ladder.rows[2]) + " vs " +
                        pct(ladder.rows[0]) + "); K=5 gap " + fmt(100.0 * gap5, 2) + " pts (" + pct(simple5) +
                        " vs " + pct(visual5) + ")";
  return {gap1 > gap5, d};
}

Verdict zero_shot_ordering(const DefaultRun& run) {
  std::vector<EvalReport> rows;
  std::vector<std::uint64_t> draws;
  for (const char* method : {"zeroshot", "zeroshot_lp"}) {
    Config cfg = run.cfg;
    cfg.set("method", method);
    const MetaTrainResult trained = run_meta_train(cfg, run.data, &run.pretrained);
    const FewShotModel model(model_config(cfg, run.data.data.d_in), config_method(cfg));
    const EpisodeSampler sampler(run.data.data, run.data.manifest);
    rows.push_back(evaluate(model, trained.checkpoint.params, run.data, eval_spec(cfg), hyperparams(cfg), &sampler));
    draws.push_back(sampler.labeled_support_draws());
  }
  const EvalReport& zs = rows[0];
  const EvalReport& lp = rows[1];
  const bool signal = run.cfg.real("data.semantic_signal") >= 0.8;
  const bool ordered = lp.mean >= zs.mean || zs.mean - lp.mean <= zs.ci95 + lp.ci95;
  const bool no_labels = draws[0] == 0 && draws[1] == 0 && zs.k_shot == 0 && lp.k_shot == 0;
  const bool full = zs.tasks == 2000 && lp.tasks == 2000;
  const std::string d = "zero-shot " + pct(zs) + ", zero-shot+LP " + pct(lp) + " over " + std::to_string(lp.tasks) +
                        " tasks; labeled support draws " + std::to_string(draws[0]) + "/" +
                        std::to_string(draws[1]) + ", K=" + std::to_string(zs.k_shot) + "/" +
                        std::to_string(lp.k_shot);
  return {signal && ordered && no_labels && full, d};
}

// ---------------------------------------------------------------------------
// 8-9. Command-line runs

class CliRunner {
 public:
  CliRunner(fs::path binary, fs::path dir) : binary_(std::move(binary)), dir_(std::move(dir)) {}

  /// Runs a subcommand with the directory's config; returns the exit code.
  int run(const std::string& command, const std::string& extra = "", int threads = 1) {
    const fs::path log = dir_ / ("log." + std::to_string(counter_++) + ".txt");
    const std::string line = "PROTOFUSE_THREADS=" + std::to_string(threads) + " '" + binary_.string() + "' " +
                             command + " --config '" + (dir_ / "run.cfg").string() + "' " + extra + " > '" +
                             log.string() + "' 2>&1";
    const int status = std::system(line.c_str());
    last_output_ = fs::exists(log) ? read_text_file(log) : "";
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  void require_ok(const std::string& command, const std::string& extra = "", int threads = 1) {
    const int code = run(command, extra, threads);
    require(code == 0, ErrorCategory::invalid_state,
            "protofuse " + command + " exited " + std::to_string(code) + ": " + last_output_);
  }

  const std::string& last_output() const { return last_output_; }
  const fs::path& dir() const { return dir_; }

 private:
  fs::path binary_;
  fs::path dir_;
  int counter_ = 0;
  std::string last_output_;
};

CliRunner prepare_cli(const fs::path& cli, const fs::path& dir, const std::string& settings) {
  fs::remove_all(dir);
  fs::create_directories(dir);
  write_text_file(dir / "run.cfg", "paths.out_dir = " + dir.string() + "\n" + settings);
  return CliRunner(cli, dir);
}

std::vector<nlohmann::json> json_lines(const fs::path& path) {
  std::vector<nlohmann::json> out;
  std::istringstream in(read_text_file(path));
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) out.push_back(nlohmann::json::parse(line));
  }
  return out;
}

Verdict sweep_sanity(const fs::path& cli, const fs::path& work) {
  CliRunner runner = prepare_cli(cli, work / "sweep",
                                 "pretrain.epochs = 2\n"
                                 "meta.episodes = 300\n"
                                 "meta.val_every = 100\n"
                                 "meta.val_tasks = 50\n"
                                 "eval.tasks = 300\n"
                                 "sweep.lambda = 0,0.25,0.5,0.75,1\n"
                                 "sweep.alpha = 0,0.5,1,2,4\n");
  runner.require_ok("gen-data");
  runner.require_ok("pretrain");
  runner.require_ok("sweep");
  const fs::path report = runner.dir() / "sweep.jsonl";
  const auto first = read_file_bytes(report);
  const bool printed = runner.last_output().find("accuracy vs lambda") != std::string::npos &&
                       runner.last_output().find("accuracy vs alpha") != std::string::npos;
  runner.require_ok("sweep");
  const bool deterministic = read_file_bytes(report) == first;

  bool tables_ok = true;
  std::string d;
  for (const std::string parameter : {"lambda", "alpha"}) {
    std::vector<double> means;
    std::optional<nlohmann::json> best;
    for (const auto& j : json_lines(report)) {
      if (j["kind"] == "sweep." + parameter) means.push_back(j["mean"].get<double>());
      if (j["kind"] == "sweep.best" && j["parameter"] == parameter) best = j;
    }
    if (!best || means.size() != 5) {
      tables_ok = false;
      d += parameter + ": incomplete table; ";
      continue;
    }
    const auto idx = (*best)["best_index"].get<std::size_t>();
    const bool boundary = (*best)["boundary"].get<bool>();
    const bool at_edge = idx == 0 || idx + 1 == means.size();
    const bool is_max = idx < means.size() && *std::max_element(means.begin(), means.end()) == means[idx];
    tables_ok = tables_ok && is_max && boundary == at_edge;
    d += parameter + " best " + fmt((*best)["best_value"].get<double>(), 2) + " (" +
         (boundary ? "boundary-flagged" : "interior") + ", acc";
    for (double m : means) d += " " + fmt(100.0 * m, 2);
    d += "); ";
  }
  d += std::string("report ") + (deterministic ? "byte-identical" : "DIFFERS") + " across two runs";
  return {tables_ok && deterministic && printed, d};
}

Verdict determinism_and_formats(const fs::path& cli, const fs::path& work) {
  CliRunner runner = prepare_cli(cli, work / "determinism",
                                 "data.num_classes = 40\n"
                                 "data.samples_per_class = 100\n"
                                 "data.d_in = 16\n"
                                 "pretrain.epochs = 2\n"
                                 "meta.episodes = 200\n"
                                 "meta.val_every = 100\n"
                                 "meta.val_tasks = 50\n"
                                 "eval.tasks = 400\n");
  const std::vector<std::string> artifacts{"data.fsld",      "manifest.txt", "pretrain.fslc", "pretrain.fslc.meta",
                                           "meta.fslc",      "meta.fslc.meta", "eval.jsonl"};
  auto pipeline = [&](int threads) {
    for (const char* command : {"gen-data", "pretrain", "meta-train", "eval"}) runner.require_ok(command, "", threads);
    std::vector<std::vector<std::uint8_t>> bytes;
    for (const auto& a : artifacts) bytes.push_back(read_file_bytes(runner.dir() / a));
    return bytes;
  };
  const auto first = pipeline(1);
  const auto second = pipeline(1);
  const auto threaded = pipeline(4);
  std::vector<std::string> differing;
  for (std::size_t i = 0; i < artifacts.size(); ++i) {
    if (first[i] != second[i] || first[i] != threaded[i]) differing.push_back(artifacts[i]);
  }

  // Round trips through the library readers and writers.
  const fs::path dir = runner.dir();
  write_dataset(dir / "rt.fsld", read_dataset(dir / "data.fsld"));
  save_checkpoint(dir / "rt.fslc", load_checkpoint(dir / "meta.fslc"));
  const bool fsld_rt = read_file_bytes(dir / "rt.fsld") == read_file_bytes(dir / "data.fsld");
  const bool fslc_rt = read_file_bytes(dir / "rt.fslc") == read_file_bytes(dir / "meta.fslc") &&
                       read_file_bytes(dir / "rt.fslc.meta") == read_file_bytes(dir / "meta.fslc.meta");

  // Single-bit corruption anywhere must be rejected as a format error.
  auto corrupt_detected = [&](const fs::path& good, const fs::path& bad, const std::function<void()>& load) {
    const auto bytes = read_file_bytes(good);
    std::size_t caught = 0, tried = 0;
    for (std::size_t at : {std::size_t{8}, bytes.size() / 2, bytes.size() - 6, bytes.size() - 1}) {
      auto copy = bytes;
      copy[at] ^= 0x04;
      write_file_bytes(bad, copy);
      ++tried;
      try {
        load();
      } catch (const Error& e) {
        caught += e.category() == ErrorCategory::format;
      }
    }
    return caught == tried;
  };
  fs::copy_file(dir / "meta.fslc.meta", dir / "bad.fslc.meta", fs::copy_options::overwrite_existing);
  const bool fsld_crc = corrupt_detected(dir / "data.fsld", dir / "bad.fsld", [&] { read_dataset(dir / "bad.fsld"); });
  const bool fslc_crc = corrupt_detected(dir / "meta.fslc", dir / "bad.fslc", [&] { load_checkpoint(dir / "bad.fslc"); });
  const int code = runner.run("eval", "--set paths.checkpoint=" + (dir / "bad.fslc").string());
  const bool cli_reports = code == 1 && runner.last_output().find("error[format]") != std::string::npos;

  std::string d = "artifacts over runs (threads 1, 1, 4): ";
  if (differing.empty()) {
    d += "all " + std::to_string(artifacts.size()) + " byte-identical";
  } else {
    for (const auto& a : differing) d += a + " DIFFERS ";
  }
  d += std::string("; FSLD round trip ") + (fsld_rt ? "exact" : "MISMATCH") + ", FSLC round trip " +
       (fslc_rt ? "exact" : "MISMATCH") + "; corruption detected FSLD " + (fsld_crc ? "yes" : "NO") + ", FSLC " +
       (fslc_crc ? "yes" : "NO") + ", CLI exit " + std::to_string(code);
  return {differing.empty() && fsld_rt && fslc_rt && fsld_crc && fslc_crc && cli_reports, d};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"protofuse acceptance suite"};
  std::string cli;
  std::string work = (fs::temp_directory_path() / "protofuse_acceptance").string();
  std::vector<int> only;
  app.add_option("--cli", cli, "path to the protofuse binary")->required();
  app.add_option("--work", work, "scratch directory");
  app.add_option("--only", only, "run only these criteria");
  CLI11_PARSE(app, argc, argv);
  fs::create_directories(work);

  const std::vector<std::string> titles{
      "",
      "gradient correctness",
      "oracle equivalence",
      "distribution invariants",
      "freeze contract",
      "ablation direction",
      "1-shot vs 5-shot gap",
      "zero-shot ordering",
      "lambda/alpha sweep sanity",
      "determinism and formats",
  };
  auto wanted = [&](int n) { return only.empty() || std::find(only.begin(), only.end(), n) != only.end(); };
  int failures = 0;
  auto report = [&](int n, const std::function<Verdict()>& fn) {
    if (!wanted(n)) return;
    const Stopwatch clock;
    Verdict v;
    try {
      v = fn();
    } catch (const std::exception& e) {
      v = {false, std::string("error: ") + e.what()};
    }
    failures += !v.pass;
    std::cout << (v.pass ? "[PASS]" : "[FAIL]") << " criterion " << n << ": " << titles[n] << " | " << v.detail
              << " | " << fmt(clock.seconds(), 1) << " s\n"
              << std::flush;
  };

  report(1, gradient_correctness);
  report(2, oracle_equivalence);
  report(3, distribution_invariants);
  report(4, [&] { return freeze_contract(work); });

  if (wanted(5) || wanted(6) || wanted(7)) {
    std::optional<DefaultRun> run;
    std::optional<AblationOutcome> ladder;
    std::string setup_error;
    try {
      run = default_run(work);
      std::cout << "  pretrain on the default dataset: " << fmt(run->pretrain_seconds, 1) << " s\n";
      if (wanted(5) || wanted(6)) ladder = run_ladder(*run);
    } catch (const std::exception& e) {
      setup_error = e.what();
    }
    auto guarded = [&](bool need_ladder, const std::function<Verdict()>& fn) {
      return [&, need_ladder, fn] {
        require(run.has_value() && (!need_ladder || ladder.has_value()), ErrorCategory::invalid_state,
                "default run failed: " + setup_error);
        return fn();
      };
    };
    report(5, guarded(true, [&] { return ablation_direction(*run, *ladder); }));
    report(6, guarded(true, [&] { return shot_gap(*run, *ladder); }));
    report(7, guarded(false, [&] { return zero_shot_ordering(*run); }));
  }

  report(8, [&] { return sweep_sanity(cli, fs::path(work)); });
  report(9, [&] { return determinism_and_formats(cli, fs::path(work)); });

  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criterion(s) failed") << "\n";
  return failures == 0 ? 0 : 1;
}
