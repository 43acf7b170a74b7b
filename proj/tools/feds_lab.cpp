// Copyright 2026 The FEDS Lab Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Command-line front end: gen-data, train-baseline, tune, evaluate, scatter.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "feds/errors.hpp"
#include "feds/experiment.hpp"

namespace fs = std::filesystem;

namespace {

// Flags shared by the commands that take an experiment config. Unset flags
// leave the file (or default) values alone.
struct ConfigFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> mode;
  std::optional<std::string> gate;
  std::optional<double> lambda;
  std::optional<std::size_t> epochs;
  std::optional<std::size_t> iters_surrogate;
  std::optional<std::size_t> iters_recognizer;

  void attach(CLI::App* cmd, bool training) {
    cmd->add_option("--config", config, "JSON experiment config")->check(CLI::ExistingFile);
    cmd->add_option("--seed", seed, "seed for data, initialisation and sampling");
    if (!training) return;
    cmd->add_option("--mode", mode, "feds or lsed")->check(CLI::IsMember({"feds", "lsed"}));
    cmd->add_option("--gate", gate, "gated or literal")->check(CLI::IsMember({"gated", "literal"}));
    cmd->add_option("--lambda", lambda, "filter threshold");
    cmd->add_option("--epochs", epochs, "post-tuning epochs E");
    cmd->add_option("--iters-surrogate", iters_surrogate, "surrogate steps per epoch");
    cmd->add_option("--iters-recognizer", iters_recognizer, "recognizer steps per epoch");
  }

  feds::ExperimentConfig resolve() const {
    feds::ExperimentConfig cfg = config.empty() ? feds::ExperimentConfig{} : feds::load_config(config);
    if (seed) cfg.set_seed(*seed);
    if (mode) cfg.train.mode = feds::parse_train_mode(*mode);
    if (gate) cfg.train.gate_mode = feds::parse_gate_mode(*gate);
    if (lambda) cfg.train.lambda = *lambda;
    if (epochs) cfg.train.epochs = *epochs;
    if (iters_surrogate) cfg.train.iters_surrogate = *iters_surrogate;
    if (iters_recognizer) cfg.train.iters_recognizer = *iters_recognizer;
    cfg.train.validate();
    return cfg;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Filtered learned edit-distance post-tuning for a toy sequence recognizer"};
  app.require_subcommand(1);

  ConfigFlags gen_flags, base_flags, tune_flags;
  std::string out, data, init, checkpoint, baseline, split = "test", log;
  std::size_t first = 1, last = 1;
  double scatter_lambda = 0.25;

  auto* gen = app.add_subcommand("gen-data", "render a synthetic corpus to disk");
  gen_flags.attach(gen, false);
  gen->add_option("--out", out, "output dataset directory")->required();

  auto* base = app.add_subcommand("train-baseline", "pre-train the recognizer with cross-entropy");
  base_flags.attach(base, false);
  base->add_option("--data", data, "dataset directory")->required()->check(CLI::ExistingDirectory);
  base->add_option("--out", out, "output directory")->required();

  auto* tune = app.add_subcommand("tune", "post-tune a pre-trained recognizer");
  tune_flags.attach(tune, true);
  tune->add_option("--data", data, "dataset directory")->required()->check(CLI::ExistingDirectory);
  tune->add_option("--init", init, "pre-trained recognizer checkpoint")->required()->check(CLI::ExistingFile);
  tune->add_option("--out", out, "output directory")->required();

  auto* eval = app.add_subcommand("evaluate", "report Acc, NED and TED on a split");
  eval->add_option("--checkpoint", checkpoint, "recognizer checkpoint")->required();
  eval->add_option("--data", data, "dataset directory")->required();
  eval->add_option("--split", split, "train, val or test")->check(CLI::IsMember({"train", "val", "test"}));
  eval->add_option("--baseline", baseline, "baseline checkpoint for the relative TED line");
  eval->add_option("--out", out, "output directory")->required();

  auto* scatter = app.add_subcommand("scatter", "export e vs e_hat rows from a tuning log");
  scatter->add_option("--log", log, "log.csv written by tune")->required();
  scatter->add_option("--first", first, "first epoch (inclusive)");
  scatter->add_option("--last", last, "last epoch (inclusive)");
  scatter->add_option("--lambda", scatter_lambda, "gate band half-width");
  scatter->add_option("--out", out, "output CSV path")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      feds::command_gen_data(gen_flags.resolve(), out);
      std::cout << "wrote dataset to " << out << '\n';
    } else if (*base) {
      auto report = feds::command_train_baseline(base_flags.resolve(), data, out);
      std::cout << feds::summary_text(report);
    } else if (*tune) {
      feds::command_tune(tune_flags.resolve(), data, init, out);
      std::cout << "wrote " << (fs::path(out) / "log.csv").string() << '\n';
    } else if (*eval) {
      std::optional<fs::path> base_ckpt;
      if (!baseline.empty()) base_ckpt = baseline;
      auto report = feds::command_evaluate(checkpoint, data, split, out, base_ckpt);
      std::optional<feds::MetricsReport> base_report;
      if (base_ckpt) base_report = feds::evaluate_model(*base_ckpt, data, split);
      std::cout << feds::summary_text(report, base_report);
    } else if (*scatter) {
      auto s = feds::command_scatter(log, first, last, scatter_lambda, out);
      std::cout << "rows: " << s.rows.size() << "\nin_band_fraction: " << feds::in_band_fraction(s) << '\n';
    }
  } catch (const feds::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
