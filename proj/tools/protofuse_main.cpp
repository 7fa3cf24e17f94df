// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The ProtoFuse Authors
//
// protofuse: command-line front end for data generation, training and
// evaluation. Every subcommand takes --config <file> and repeatable
// --set key=value overrides.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "protofuse/binary_io.hpp"
#include "protofuse/config.hpp"
#include "protofuse/error.hpp"
#include "protofuse/train_eval.hpp"

namespace fs = std::filesystem;
using namespace protofuse;

namespace {

struct Invocation {
  std::string config_file;
  std::vector<std::string> overrides;
};

Config resolve(const std::string& command, const Invocation& inv) {
  const fs::path file(inv.config_file);
  Config cfg = load_config(inv.config_file.empty() ? nullptr : &file, inv.overrides);
  const fs::path out_dir(cfg.text("paths.out_dir"));
  fs::create_directories(out_dir);
  write_text_file(out_dir / (command + ".resolved.cfg"), cfg.resolved());
  return cfg;
}

void write_report(const fs::path& path, const std::vector<std::string>& lines) {
  std::string text;
  for (const auto& l : lines) text += l + "\n";
  write_text_file(path, text);
  std::cout << "report: " << path.string() << "\n";
}

ParamStore load_pretrained(const Config& cfg) {
  const fs::path path = pretrain_path(cfg);
  require(fs::exists(path), ErrorCategory::io, "pretrain checkpoint not found: " + path.string());
  return load_checkpoint(path).params;
}

int cmd_gen_data(const Config& cfg) {
  const SyntheticDataset ds = generate_synthetic(synthetic_spec(cfg));
  write_dataset(data_path(cfg), ds.data);
  write_manifest(manifest_path(cfg), ds.manifest);
  std::cout << "wrote " << ds.data.classes.size() << " classes (" << ds.manifest.base.size() << " base, "
            << ds.manifest.val.size() << " val, " << ds.manifest.novel.size() << " novel) to "
            << data_path(cfg).string() << "\n";
  return 0;
}

int cmd_pretrain(const Config& cfg) {
  const LoadedData data = load_data(cfg);
  const PretrainResult r = run_pretrain(cfg, data, &std::cout);
  save_checkpoint(pretrain_path(cfg), r.checkpoint);
  std::cout << "checkpoint: " << pretrain_path(cfg).string() << "\n";
  return 0;
}

int cmd_meta_train(const Config& cfg) {
  const LoadedData data = load_data(cfg);
  std::optional<ParamStore> init;
  if (fs::exists(pretrain_path(cfg))) {
    init = load_checkpoint(pretrain_path(cfg)).params;
  } else {
    std::cout << "no pretrain checkpoint at " << pretrain_path(cfg).string() << ", starting fresh\n";
  }
  const MetaTrainResult r = run_meta_train(cfg, data, init ? &*init : nullptr, &std::cout);
  save_checkpoint(checkpoint_path(cfg), r.checkpoint);
  std::cout << "selected step " << r.best_episode << " (val " << r.best_accuracy << ")\n";
  std::cout << "checkpoint: " << checkpoint_path(cfg).string() << "\n";
  return 0;
}

int cmd_eval(const Config& cfg) {
  const LoadedData data = load_data(cfg);
  const FewShotModel model(model_config(cfg, data.data.d_in), config_method(cfg));
  const Checkpoint ckpt = load_checkpoint(checkpoint_path(cfg));
  const ParamStore store = params_from_checkpoint(model, data.data, ckpt.params);
  const EvalReport r = evaluate(model, store, data, eval_spec(cfg), hyperparams(cfg));
  print_table(std::cout, "evaluation", {r});
  write_report(report_path(cfg, "eval"), {report_json(r, "eval", cfg.resolved())});
  return 0;
}

int cmd_ablate(const Config& cfg) {
  const LoadedData data = load_data(cfg);
  const AblationReport rep = run_ablation(cfg, data, load_pretrained(cfg), &std::cout);
  print_table(std::cout, "ablation", rep.rows);
  std::vector<std::string> lines;
  for (const auto& r : rep.rows) lines.push_back(report_json(r, "ablation", cfg.resolved()));
  write_report(report_path(cfg, "ablate"), lines);
  return 0;
}

int cmd_sweep(const Config& cfg) {
  const LoadedData data = load_data(cfg);
  const auto tables = run_sweep(cfg, data, load_pretrained(cfg), &std::cout);
  std::vector<std::string> lines;
  for (const auto& t : tables) {
    print_table(std::cout, "accuracy vs " + t.parameter, t.rows);
    std::cout << "best " << t.parameter << " = " << t.grid[t.best_index]
              << (t.best_on_boundary ? " (on grid boundary)" : " (interior)") << "\n";
    for (const auto& r : t.rows) lines.push_back(report_json(r, "sweep." + t.parameter, cfg.resolved()));
    nlohmann::json best;
    best["kind"] = "sweep.best";
    best["parameter"] = t.parameter;
    best["grid"] = t.grid;
    best["best_index"] = t.best_index;
    best["best_value"] = t.grid[t.best_index];
    best["boundary"] = t.best_on_boundary;
    lines.push_back(best.dump());
  }
  write_report(report_path(cfg, "sweep"), lines);
  return 0;
}

int cmd_zero_shot(const Config& cfg) {
  const LoadedData data = load_data(cfg);
  const ParamStore pretrained = load_pretrained(cfg);
  std::vector<EvalReport> rows;
  std::vector<std::string> lines;
  for (const char* method : {"zeroshot", "zeroshot_lp"}) {
    Config run = cfg;
    run.set("method", method);
    const MetaTrainResult trained = run_meta_train(run, data, &pretrained, &std::cout);
    const FewShotModel model(model_config(run, data.data.d_in), config_method(run));
    const EpisodeSampler sampler(data.data, data.manifest);
    EvalReport r = evaluate(model, trained.checkpoint.params, data, eval_spec(run), hyperparams(run), &sampler);
    require(sampler.labeled_support_draws() == 0, ErrorCategory::invalid_state,
            "zero-shot evaluation drew labeled support samples");
    r.label = method == std::string("zeroshot") ? "zero-shot" : "zero-shot + LP";
    lines.push_back(report_json(r, "zero-shot", run.resolved()));
    rows.push_back(std::move(r));
  }
  print_table(std::cout, "zero-shot baselines", rows);
  write_report(report_path(cfg, "zero-shot"), lines);
  return 0;
}

int cmd_export(const Config& cfg) {
  const LoadedData data = load_data(cfg);
  const FewShotModel model(model_config(cfg, data.data.d_in), config_method(cfg));
  const ParamStore store = params_from_checkpoint(model, data.data, load_checkpoint(checkpoint_path(cfg)).params);
  const EmbeddingExport e = compute_embeddings(model, store, data, parse_split(cfg.text("export.split")),
                                               cfg.count("export.n_way"), cfg.count("export.shots"),
                                               cfg.count("export.seed"));
  write_embeddings_csv(export_path(cfg), e);
  std::cout << "wrote " << e.rows.size() << " rows to " << export_path(cfg).string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"protofuse: semantic prototype few-shot learning"};
  app.require_subcommand(1);
  const std::vector<std::pair<std::string, std::function<int(const Config&)>>> commands{
      {"gen-data", cmd_gen_data}, {"pretrain", cmd_pretrain}, {"meta-train", cmd_meta_train},
      {"eval", cmd_eval},         {"ablate", cmd_ablate},     {"sweep", cmd_sweep},
      {"zero-shot", cmd_zero_shot}, {"export-embeddings", cmd_export},
  };
  const std::map<std::string, std::string> help{
      {"gen-data", "generate the synthetic dataset and split manifest"},
      {"pretrain", "train the visual encoder with a classification head on base classes"},
      {"meta-train", "episodic training on base classes"},
      {"eval", "evaluate a checkpoint on sampled episodes"},
      {"ablate", "train and evaluate the five-row ablation ladder"},
      {"sweep", "accuracy over the lambda and alpha grids"},
      {"zero-shot", "zero-shot baselines with fixed and learned prompts"},
      {"export-embeddings", "write fused support features of one many-shot episode as CSV"},
  };
  Invocation inv;
  for (const auto& [name, fn] : commands) {
    CLI::App* sub = app.add_subcommand(name, help.at(name));
    sub->add_option("--config", inv.config_file, "configuration file");
    sub->add_option("--set", inv.overrides, "override key=value (repeatable)")->allow_extra_args(false);
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error[usage]: " << e.what() << "\n";
    return 2;
  }
  for (const auto& [name, fn] : commands) {
    if (!app.got_subcommand(name)) continue;
    try {
      return fn(resolve(name, inv));
    } catch (const Error& e) {
      std::cerr << "error[" << category_name(e.category()) << "]: " << e.what() << "\n";
      return 1;
    } catch (const std::filesystem::filesystem_error& e) {
      std::cerr << "error[io]: " << e.what() << "\n";
      return 1;
    } catch (const std::exception& e) {
      std::cerr << "error[internal]: " << e.what() << "\n";
      return 1;
    }
  }
  return 2;
}
