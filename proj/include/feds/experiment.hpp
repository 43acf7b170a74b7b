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

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "feds/recognizer.hpp"
#include "feds/synth_data.hpp"
#include "feds/text_metrics.hpp"
#include "feds/trainer.hpp"

namespace feds {

// Everything a CLI run needs. One seed drives data, initialisation and
// sampling.
struct ExperimentConfig {
  DatasetConfig data;
  TrainConfig train;
  std::size_t recognizer_channels = 24;
  std::uint64_t seed = 0;

  void set_seed(std::uint64_t s);
  RecognizerConfig recognizer_config() const;
};

// Reads the keys present in `j` on top of `base`; unknown keys are an error.
ExperimentConfig config_from_json(const nlohmann::json& j, ExperimentConfig base = {});
ExperimentConfig load_config(const std::filesystem::path& path);
nlohmann::json config_to_json(const ExperimentConfig& cfg);

MetricsReport evaluate_model(const RecognizerNet& net, const Corpus& corpus, const std::string& split);
// Loads both from disk; neither is modified.
MetricsReport evaluate_model(const std::filesystem::path& checkpoint, const std::filesystem::path& dataset_dir,
                             const std::string& split);

// (ted_base - ted_tuned) / ted_base; 0 when the baseline TED is already 0.
double relative_ted_improvement(std::size_t ted_base, std::size_t ted_tuned);

// Columns: sample_index, gt, pred, ed.
void write_metrics_csv(std::ostream& out, const MetricsReport& report);
void write_metrics_csv(const std::filesystem::path& path, const MetricsReport& report);
std::vector<SampleRow> read_metrics_csv(const std::filesystem::path& path);
std::string summary_text(const MetricsReport& report, const std::optional<MetricsReport>& baseline = std::nullopt);

struct ScatterRow {
  std::size_t epoch = 0;
  std::size_t iteration = 0;
  std::size_t sample_index = 0;
  double e = 0.0;
  double e_hat = 0.0;
  bool gate_open = false;

  bool operator==(const ScatterRow&) const = default;
};

struct Scatter {
  double lambda = 0.25;
  std::size_t first_epoch = 0;
  std::size_t last_epoch = 0;
  std::vector<ScatterRow> rows;

  bool operator==(const Scatter&) const = default;
};

// Recognizer-phase records with first_epoch <= epoch <= last_epoch.
Scatter export_scatter(std::span<const PhaseLogRecord> logs, std::size_t first_epoch, std::size_t last_epoch,
                       double lambda);
// Fraction of rows with |e_hat - e| < lambda.
double in_band_fraction(const Scatter& scatter);
double in_band_fraction(std::span<const PhaseLogRecord> logs, std::size_t first_epoch, std::size_t last_epoch,
                        double lambda);

// A "# lambda=..." metadata line, then columns epoch, iteration,
// sample_index, e, e_hat, gate_open, band_lo, band_hi.
void write_scatter_csv(std::ostream& out, const Scatter& scatter);
void write_scatter_csv(const std::filesystem::path& path, const Scatter& scatter);
Scatter read_scatter_csv(std::istream& in);

// CLI subcommands. Each writes its outputs under `out_dir`.
void command_gen_data(const ExperimentConfig& cfg, const std::filesystem::path& out_dir);
MetricsReport command_train_baseline(const ExperimentConfig& cfg, const std::filesystem::path& data_dir,
                                     const std::filesystem::path& out_dir);
void command_tune(const ExperimentConfig& cfg, const std::filesystem::path& data_dir,
                  const std::filesystem::path& init_checkpoint, const std::filesystem::path& out_dir);
MetricsReport command_evaluate(const std::filesystem::path& checkpoint, const std::filesystem::path& data_dir,
                               const std::string& split, const std::filesystem::path& out_dir,
                               const std::optional<std::filesystem::path>& baseline_checkpoint = std::nullopt);
Scatter command_scatter(const std::filesystem::path& log_csv, std::size_t first_epoch, std::size_t last_epoch,
                        double lambda, const std::filesystem::path& out_csv);

}  // namespace feds
