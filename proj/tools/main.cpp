// Copyright 2026 The GenHMM Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <CLI11.hpp>

#include <cstdio>
#include <exception>
#include <iostream>
#include <string>

#include "cli/commands.hpp"
#include "cli/common.hpp"
#include "cli/config.hpp"
#include "genhmm/genhmm.h"

using namespace genhmm_cli;

namespace {

int verbosity = 1;  // 0 quiet, 1 warnings, 2 everything

void log_to_stderr(genhmm_log_level level, const char* message, void*) {
  if (verbosity == 0) return;
  if (level == GENHMM_LOG_INFO && verbosity < 2) return;
  std::fprintf(stderr, "%s: %s\n", level == GENHMM_LOG_WARNING ? "warning" : "info", message);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"GenHMM sequence classification toolkit"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", "genhmm API " + std::to_string(genhmm_api_version()));
  bool quiet = false, verbose = false;
  app.add_flag("-q,--quiet", quiet, "Only print errors and results");
  app.add_flag("-v,--verbose", verbose, "Print informational library messages");

  TrainOptions train;
  EvalOptions eval;
  BenchOptions bench;
  std::string train_cfg, eval_cfg, bench_cfg;

  auto* train_cmd = app.add_subcommand("train", "Train one model per class");
  add_run_options(*train_cmd, train.config);
  train_cmd->add_option("--config", train_cfg, "key = value configuration file");
  train_cmd->add_option("--data", train.data, "Training dataset");
  train_cmd->add_option("--out", train.out, "Output directory for checkpoints and logs");
  train_cmd->add_flag("--resume", train.resume, "Continue an interrupted run in --out");
  train_cmd->add_flag("--standardize", train.standardize, "Standardize features with training statistics");
  train_cmd->add_option("--jobs", train.jobs, "Classes trained concurrently")->capture_default_str();

  auto* eval_cmd = app.add_subcommand("eval", "Classify a test set with trained models");
  eval_cmd->add_option("--config", eval_cfg, "key = value configuration file");
  eval_cmd->add_option("--models", eval.models, "Directory written by train");
  eval_cmd->add_option("--data", eval.data, "Test dataset");
  eval_cmd->add_option("--out", eval.out, "Machine-readable report path");
  eval_cmd->add_option("--noise", eval.noise, "Perturb the test set")->check(CLI::IsMember({"white", "pink"}));
  eval_cmd->add_option("--snr-db", eval.snr_db, "Per-sequence SNR of the perturbation");
  eval_cmd->add_option("--seed", eval.seed, "Noise seed")->capture_default_str();
  eval_cmd->add_flag("--per-frame", eval.per_frame, "Score by log-likelihood per frame");
  eval_cmd->add_option("--threads", eval.threads, "Worker threads")->capture_default_str();

  auto* bench_cmd = app.add_subcommand("bench", "Sweep model type, K and SNR");
  add_run_options(*bench_cmd, bench.config);
  bench_cmd->add_option("--config", bench_cfg, "key = value configuration file");
  bench_cmd->add_option("--data", bench.data, "Training dataset");
  bench_cmd->add_option("--test", bench.test, "Test dataset");
  bench_cmd->add_option("--synthetic", bench.synthetic, "Generate data from a preset instead")
      ->check(CLI::IsMember({"separated", "warped", "multimodal"}));
  bench_cmd->add_option("--data-seed", bench.data_seed, "Seed of synthetic data and noise")->capture_default_str();
  bench_cmd->add_option("--classes", bench.classes, "Synthetic class count");
  bench_cmd->add_option("--train-per-class", bench.train_per_class, "Synthetic training sequences per class");
  bench_cmd->add_option("--test-per-class", bench.test_per_class, "Synthetic test sequences per class");
  bench_cmd->add_option("--models", bench.models, "Model types to sweep")->capture_default_str();
  bench_cmd->add_option("--ks", bench.ks, "Mixture sizes to sweep")->capture_default_str();
  bench_cmd->add_option("--snrs", bench.snrs, "Test SNRs in dB ('clean' for none)")->capture_default_str();
  bench_cmd->add_option("--noise", bench.noise, "Noise kind")
      ->check(CLI::IsMember({"white", "pink"}))
      ->capture_default_str();
  bench_cmd->add_option("--out", bench.out, "Output directory for reports");
  bench_cmd->add_flag("--standardize", bench.standardize, "Standardize features with training statistics");
  bench_cmd->add_flag("--per-frame", bench.per_frame, "Score by log-likelihood per frame");
  bench_cmd->add_option("--jobs", bench.jobs, "Classes trained concurrently")->capture_default_str();

  SynthOptions synth;
  auto* synth_cmd = app.add_subcommand("synth", "Write a synthetic train/test pair");
  synth_cmd->add_option("--preset", synth.preset, "Preset")
      ->check(CLI::IsMember({"separated", "warped", "multimodal"}))
      ->capture_default_str();
  synth_cmd->add_option("--classes", synth.classes, "Class count");
  synth_cmd->add_option("--dim", synth.dim, "Frame dimension");
  synth_cmd->add_option("--train-per-class", synth.train_per_class, "Training sequences per class");
  synth_cmd->add_option("--test-per-class", synth.test_per_class, "Test sequences per class");
  synth_cmd->add_option("--seed", synth.seed, "Seed")->capture_default_str();
  synth_cmd->add_option("--train-out", synth.train_out, "Training set path (.gz compresses)");
  synth_cmd->add_option("--test-out", synth.test_out, "Test set path (.gz compresses)");

  try {
    app.parse(argc, argv);
    if (train_cmd->parsed() && !train_cfg.empty()) apply_config_file(*train_cmd, train_cfg);
    if (eval_cmd->parsed() && !eval_cfg.empty()) apply_config_file(*eval_cmd, eval_cfg);
    if (bench_cmd->parsed() && !bench_cfg.empty()) apply_config_file(*bench_cmd, bench_cfg);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  } catch (const CliError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e.status());
  }

  verbosity = quiet ? 0 : (verbose ? 2 : 1);
  genhmm_set_log_callback(&log_to_stderr, nullptr);
  train.quiet = eval.quiet = bench.quiet = quiet;
  if (train.jobs < 1 || bench.jobs < 1) {
    std::cerr << "error: --jobs must be positive\n";
    return kExitConfig;
  }

  try {
    if (train_cmd->parsed()) return cmd_train(train);
    if (eval_cmd->parsed()) return cmd_eval(eval);
    if (synth_cmd->parsed()) return cmd_synth(synth);
    return cmd_bench(bench);
  } catch (const CliError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e.status());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}
