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
#include <functional>
#include <iosfwd>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "feds/autodiff.hpp"
#include "feds/optim.hpp"
#include "feds/recognizer.hpp"
#include "feds/surrogate.hpp"
#include "feds/synth_data.hpp"

namespace feds {

enum class TrainMode { kFeds, kLsed, kBaseline };
enum class GateMode { kGated, kLiteral };

TrainMode parse_train_mode(const std::string& s);
std::string to_string(TrainMode m);
GateMode parse_gate_mode(const std::string& s);
std::string to_string(GateMode m);

struct TrainConfig {
  std::size_t iters_surrogate = 500;    // I_a
  std::size_t iters_recognizer = 500;   // I_b
  std::size_t epochs = 10;              // E
  double lr_surrogate = 1.0;            // eta_a
  double lr_recognizer = 1.0;           // eta_b
  double lambda = 0.25;
  std::size_t batch_size = 32;
  TrainMode mode = TrainMode::kFeds;
  GateMode gate_mode = GateMode::kGated;
  SurrogateLossWeights weights;
  OptimizerConfig optimizer;
  std::uint64_t seed = 0;

  // CE pre-training of the recognizer.
  std::size_t baseline_iterations = 2000;
  double lr_baseline = 20.0;

  void validate() const;
};

// min(|e_hat - e|, lambda).
double filter_value(double e, double e_hat, double lambda);
ad::Var filter_value(double e, const ad::Var& e_hat, double lambda);

// Strict inequality: |e_hat - e| == lambda keeps the gate closed.
bool gate_open(double e, double e_hat, double lambda);

struct FilteredLossResult {
  ad::Var loss;  // batch mean, [1,1]
  std::vector<double> e_hat;
  std::vector<double> sample_loss;
  std::vector<bool> gate_open;
};

// Recognizer objective under a frozen surrogate. `z_rows` is the recognizer
// output ([batch * L, |A|], connected to Theta); `e` holds the true edit
// distances of the decoded predictions and is constant.
//   gated:   e_hat * 1[|e_hat - e| < lambda], indicator constant
//   literal: min(|e_hat - e|, lambda) differentiated as written
// Pass lambda = +inf for the unfiltered objective.
FilteredLossResult filtered_str_loss_rows(const ad::Var& z_rows, const ad::Var& y_rows, std::span<const double> e,
                                          const SurrogateNet& net, double lambda, GateMode gate_mode);

struct PhaseLogRecord {
  enum class Phase { kSurrogate, kRecognizer };
  std::size_t epoch = 0;
  Phase phase = Phase::kSurrogate;
  std::size_t iteration = 0;
  std::size_t sample_index = 0;
  double e = 0.0;
  double e_hat = 0.0;
  double loss = 0.0;
  bool gate_open = false;

  bool operator==(const PhaseLogRecord&) const = default;
};

std::string to_string(PhaseLogRecord::Phase p);

// CSV columns: epoch, phase, iteration, sample_index, e, e_hat, loss, gate_open.
// Reals are printed with 17 significant digits so parsing is lossless.
void write_log_csv(std::ostream& out, std::span<const PhaseLogRecord> records);
void write_log_csv(const std::filesystem::path& path, std::span<const PhaseLogRecord> records);
std::vector<PhaseLogRecord> read_log_csv(std::istream& in);
std::vector<PhaseLogRecord> read_log_csv(const std::filesystem::path& path);

// Mutable training state shared by both phases: the two networks, their
// optimizer states, and the sampling stream.
class Trainer {
 public:
  Trainer(TrainConfig cfg, const Corpus& corpus, RecognizerNet recognizer, SurrogateNet surrogate);

  const TrainConfig& config() const { return cfg_; }
  const RecognizerNet& recognizer() const { return recognizer_; }
  const SurrogateNet& surrogate() const { return surrogate_; }
  RecognizerNet& recognizer() { return recognizer_; }
  SurrogateNet& surrogate() { return surrogate_; }

  // I_a steps on the surrogate loss with Theta frozen. In LS-ED mode every
  // batch is extended with generator pairs. Returns one record per corpus
  // sample seen.
  std::vector<PhaseLogRecord> train_surrogate_phase(std::size_t epoch);
  // I_b steps on the filtered recognizer loss with Phi frozen.
  std::vector<PhaseLogRecord> tune_recognizer_phase(std::size_t epoch);

  // Mean |e_hat - e| of the current surrogate on recognizer outputs for
  // `indices`.
  double surrogate_abs_error(std::span<const std::size_t> indices) const;

 private:
  std::vector<std::size_t> draw_batch();
  std::vector<const WordImage*> images(std::span<const std::size_t> batch) const;
  ad::Var target_rows(std::span<const std::size_t> batch) const;
  std::vector<double> decoded_distances(const ad::Var& z_rows, std::span<const std::size_t> batch) const;

  TrainConfig cfg_;
  const Corpus& corpus_;
  RecognizerNet recognizer_;
  SurrogateNet surrogate_;
  Optimizer surrogate_opt_;
  Optimizer recognizer_opt_;
  std::mt19937_64 rng_;
  std::mt19937_64 pair_rng_;
};

SurrogateConfig surrogate_config_for(const DatasetConfig& data, std::uint64_t seed);

// CE pre-training; returns the mean CE of the final iteration.
double train_baseline(RecognizerNet& net, const Corpus& corpus, const TrainConfig& cfg);

struct PostTuningResult {
  RecognizerNet recognizer;
  SurrogateNet surrogate;
  std::vector<PhaseLogRecord> logs;
};

// E alternations of surrogate learning and filtered recognizer tuning,
// starting from the pre-trained recognizer and a randomly initialised
// surrogate. With `checkpoint_dir`, both networks are saved after every epoch.
PostTuningResult run_post_tuning(const TrainConfig& cfg, const Corpus& corpus, const RecognizerNet& pretrained,
                                 const std::optional<std::filesystem::path>& checkpoint_dir = std::nullopt,
                                 const std::function<void(std::size_t epoch)>& on_epoch = nullptr);

}  // namespace feds
