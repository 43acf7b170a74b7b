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

#include "feds/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "feds/errors.hpp"

namespace feds {

namespace {

constexpr std::uint64_t kBatchStream = 0xba7c4ULL;
constexpr std::uint64_t kPairStream = 0x9a125ULL;
constexpr std::uint64_t kBaselineStream = 0xce0ULL;
constexpr double kOpen = std::numeric_limits<double>::infinity();

std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

TrainMode parse_train_mode(const std::string& s) {
  if (s == "feds") return TrainMode::kFeds;
  if (s == "lsed") return TrainMode::kLsed;
  if (s == "baseline") return TrainMode::kBaseline;
  throw ConfigError("unknown mode '" + s + "' (expected feds, lsed or baseline)");
}

std::string to_string(TrainMode m) {
  switch (m) {
    case TrainMode::kFeds: return "feds";
    case TrainMode::kLsed: return "lsed";
    case TrainMode::kBaseline: return "baseline";
  }
  return "?";
}

GateMode parse_gate_mode(const std::string& s) {
  if (s == "gated") return GateMode::kGated;
  if (s == "literal") return GateMode::kLiteral;
  throw ConfigError("unknown gate mode '" + s + "' (expected gated or literal)");
}

std::string to_string(GateMode m) { return m == GateMode::kGated ? "gated" : "literal"; }

std::string to_string(PhaseLogRecord::Phase p) {
  return p == PhaseLogRecord::Phase::kSurrogate ? "surrogate" : "recognizer";
}

void TrainConfig::validate() const {
  if (!(lambda > 0.0)) throw ConfigError("lambda must be positive");
  if (iters_surrogate < 1 || iters_recognizer < 1 || epochs < 1) {
    throw ConfigError("iteration and epoch counts must be at least 1");
  }
  if (batch_size < 1) throw ConfigError("batch_size must be at least 1");
  if (!(lr_surrogate > 0.0) || !(lr_recognizer > 0.0) || !(lr_baseline > 0.0)) {
    throw ConfigError("learning rates must be positive");
  }
  if (!(optimizer.rho > 0.0 && optimizer.rho < 1.0) || !(optimizer.eps > 0.0)) {
    throw ConfigError("ADADELTA needs 0 < rho < 1 and eps > 0");
  }
  weights.validate();
}

double filter_value(double e, double e_hat, double lambda) {
  if (!(lambda > 0.0)) throw ConfigError("lambda must be positive");
  return std::min(std::abs(e_hat - e), lambda);
}

ad::Var filter_value(double e, const ad::Var& e_hat, double lambda) {
  if (!(lambda > 0.0)) throw ConfigError("lambda must be positive");
  return ad::min_const(ad::abs(ad::add_scalar(e_hat, -e)), lambda);
}

bool gate_open(double e, double e_hat, double lambda) { return std::abs(e_hat - e) < lambda; }

FilteredLossResult filtered_str_loss_rows(const ad::Var& z_rows, const ad::Var& y_rows, std::span<const double> e,
                                          const SurrogateNet& net, double lambda, GateMode gate_mode) {
  if (!(lambda > 0.0)) throw ConfigError("lambda must be positive");
  ad::Var e_hat = surrogate_distance_rows(z_rows, y_rows, net, /*frozen=*/true);
  const std::size_t batch = e_hat.rows();
  if (e.size() != batch) throw InputError("one edit distance per sample is required");

  FilteredLossResult out;
  out.e_hat = e_hat.value();
  out.gate_open.resize(batch);
  std::vector<double> indicator(batch);
  for (std::size_t b = 0; b < batch; ++b) {
    out.gate_open[b] = gate_open(e[b], out.e_hat[b], lambda);
    indicator[b] = out.gate_open[b] ? 1.0 : 0.0;
  }

  ad::Var per_sample;
  if (gate_mode == GateMode::kGated) {
    per_sample = ad::mul_const(e_hat, std::move(indicator));
  } else {
    ad::Var target = ad::constant({batch, 1}, std::vector<double>(e.begin(), e.end()));
    per_sample = ad::min_const(ad::abs(ad::sub(e_hat, target)), lambda);
  }
  out.sample_loss = per_sample.value();
  out.loss = ad::mean(per_sample);
  return out;
}

void write_log_csv(std::ostream& out, std::span<const PhaseLogRecord> records) {
  out << "epoch,phase,iteration,sample_index,e,e_hat,loss,gate_open\n";
  for (const auto& r : records) {
    out << r.epoch << ',' << to_string(r.phase) << ',' << r.iteration << ',' << r.sample_index << ','
        << format_real(r.e) << ',' << format_real(r.e_hat) << ',' << format_real(r.loss) << ','
        << (r.gate_open ? 1 : 0) << '\n';
  }
}

void write_log_csv(const std::filesystem::path& path, std::span<const PhaseLogRecord> records) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  write_log_csv(out, records);
  if (!out) throw IoError("failed writing " + path.string());
}

std::vector<PhaseLogRecord> read_log_csv(std::istream& in) {
  std::vector<PhaseLogRecord> out;
  std::string line;
  if (!std::getline(in, line) || line.rfind("epoch,phase,", 0) != 0) throw IoError("log CSV lacks its header");
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::vector<std::string> f;
    std::string cell;
    while (std::getline(fields, cell, ',')) f.push_back(cell);
    if (f.size() != 8) throw IoError("log CSV line " + std::to_string(line_no) + " has " + std::to_string(f.size()) + " fields");
    PhaseLogRecord r;
    try {
      r.epoch = std::stoul(f[0]);
      if (f[1] == "surrogate") {
        r.phase = PhaseLogRecord::Phase::kSurrogate;
      } else if (f[1] == "recognizer") {
        r.phase = PhaseLogRecord::Phase::kRecognizer;
      } else {
        throw IoError("unknown phase '" + f[1] + "'");
      }
      r.iteration = std::stoul(f[2]);
      r.sample_index = std::stoul(f[3]);
      r.e = std::stod(f[4]);
      r.e_hat = std::stod(f[5]);
      r.loss = std::stod(f[6]);
      r.gate_open = f[7] == "1";
    } catch (const std::logic_error&) {
      throw IoError("malformed log CSV line " + std::to_string(line_no));
    }
    out.push_back(r);
  }
  return out;
}

std::vector<PhaseLogRecord> read_log_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return read_log_csv(in);
}

SurrogateConfig surrogate_config_for(const DatasetConfig& data, std::uint64_t seed) {
  SurrogateConfig cfg;
  cfg.alphabet_size = data.alphabet.size();
  cfg.length_capacity = data.length_capacity;
  cfg.seed = seed;
  return cfg;
}

Trainer::Trainer(TrainConfig cfg, const Corpus& corpus, RecognizerNet recognizer, SurrogateNet surrogate)
    : cfg_(std::move(cfg)),
      corpus_(corpus),
      recognizer_(std::move(recognizer)),
      surrogate_(std::move(surrogate)),
      surrogate_opt_(cfg_.optimizer, cfg_.lr_surrogate, surrogate_.params()),
      recognizer_opt_(cfg_.optimizer, cfg_.lr_recognizer, recognizer_.params()),
      rng_(sample_rng(cfg_.seed, 0, kBatchStream)),
      pair_rng_(sample_rng(cfg_.seed, 0, kPairStream)) {
  cfg_.validate();
  if (corpus_.train.empty()) throw ConfigError("training split is empty");
  const auto& rc = recognizer_.config();
  const auto& sc = surrogate_.config();
  if (rc.alphabet_size != corpus_.config.alphabet.size() || sc.alphabet_size != rc.alphabet_size ||
      rc.length_capacity != corpus_.config.length_capacity || sc.length_capacity != rc.length_capacity) {
    throw ConfigError("recognizer, surrogate and dataset disagree on |A| or L");
  }
}

std::vector<std::size_t> Trainer::draw_batch() {
  std::uniform_int_distribution<std::size_t> pick(0, corpus_.train.size() - 1);
  std::vector<std::size_t> batch(cfg_.batch_size);
  for (auto& i : batch) i = corpus_.train[pick(rng_)];
  return batch;
}

std::vector<const WordImage*> Trainer::images(std::span<const std::size_t> batch) const {
  std::vector<const WordImage*> out;
  out.reserve(batch.size());
  for (std::size_t i : batch) out.push_back(&corpus_.samples[i]);
  return out;
}

ad::Var Trainer::target_rows(std::span<const std::size_t> batch) const {
  std::vector<CharGrid> grids;
  grids.reserve(batch.size());
  for (std::size_t i : batch) {
    grids.push_back(encode_one_hot(corpus_.samples[i].label, corpus_.config.alphabet, corpus_.config.length_capacity));
  }
  return grids_to_rows(grids);
}

std::vector<double> Trainer::decoded_distances(const ad::Var& z_rows, std::span<const std::size_t> batch) const {
  std::vector<double> e(batch.size());
  for (std::size_t b = 0; b < batch.size(); ++b) {
    std::string pred = decode_greedy(rows_to_grid(z_rows, b, corpus_.config.length_capacity), corpus_.config.alphabet);
    e[b] = static_cast<double>(edit_distance(pred, corpus_.samples[batch[b]].label));
  }
  return e;
}

std::vector<PhaseLogRecord> Trainer::train_surrogate_phase(std::size_t epoch) {
  std::vector<PhaseLogRecord> logs;
  logs.reserve(cfg_.iters_surrogate * cfg_.batch_size);
  const bool lsed = cfg_.mode == TrainMode::kLsed;
  for (std::size_t it = 1; it <= cfg_.iters_surrogate; ++it) {
    auto batch = draw_batch();
    ad::Var z;
    {
      ad::NoGradGuard frozen_recognizer;
      z = recognizer_.forward(images(batch));
    }
    std::vector<double> e = decoded_distances(z, batch);
    std::vector<double> z_values = z.value();
    ad::Var y = target_rows(batch);

    if (lsed) {
      std::vector<double> y_values = y.value();
      for (std::size_t k = 0; k < cfg_.batch_size; ++k) {
        PairSample pair = random_pair_generator(corpus_.config, pair_rng_);
        z_values.insert(z_values.end(), pair.grid_a.values().begin(), pair.grid_a.values().end());
        y_values.insert(y_values.end(), pair.grid_b.values().begin(), pair.grid_b.values().end());
        e.push_back(static_cast<double>(pair.ed));
      }
      y = ad::constant({y.rows() * 2, y.cols()}, std::move(y_values));
    }

    SurrogateLossResult res = surrogate_loss_rows(z_values, y, e, surrogate_, cfg_.weights);
    auto params = surrogate_.params().vars();
    auto grads = ad::backward(res.loss, params);
    surrogate_opt_.step(surrogate_.params(), grads);

    for (std::size_t b = 0; b < batch.size(); ++b) {
      PhaseLogRecord r;
      r.epoch = epoch;
      r.phase = PhaseLogRecord::Phase::kSurrogate;
      r.iteration = it;
      r.sample_index = batch[b];
      r.e = e[b];
      r.e_hat = res.e_hat[b];
      r.loss = res.sample_loss[b];
      r.gate_open = lsed || gate_open(r.e, r.e_hat, cfg_.lambda);
      logs.push_back(r);
    }
  }
  return logs;
}

std::vector<PhaseLogRecord> Trainer::tune_recognizer_phase(std::size_t epoch) {
  std::vector<PhaseLogRecord> logs;
  logs.reserve(cfg_.iters_recognizer * cfg_.batch_size);
  const double lambda = cfg_.mode == TrainMode::kFeds ? cfg_.lambda : kOpen;
  const std::size_t length = corpus_.config.length_capacity;
  for (std::size_t it = 1; it <= cfg_.iters_recognizer; ++it) {
    auto batch = draw_batch();
    ad::Var z = recognizer_.forward(images(batch));
    std::vector<double> e = decoded_distances(z, batch);
    ad::Var y = target_rows(batch);

    ad::Var loss;
    std::vector<double> e_hat;
    std::vector<double> sample_loss(batch.size());
    std::vector<bool> open(batch.size(), true);
    if (cfg_.mode == TrainMode::kBaseline) {
      loss = ce_loss_rows(z, y, length);
      ad::NoGradGuard no_grad;
      e_hat = surrogate_distance_rows(z, y, surrogate_, true).value();
      std::fill(sample_loss.begin(), sample_loss.end(), loss.item());
    } else {
      FilteredLossResult res = filtered_str_loss_rows(z, y, e, surrogate_, lambda, cfg_.gate_mode);
      loss = res.loss;
      e_hat = std::move(res.e_hat);
      sample_loss = std::move(res.sample_loss);
      open = std::move(res.gate_open);
    }
    auto params = recognizer_.params().vars();
    auto grads = ad::backward(loss, params);
    recognizer_opt_.step(recognizer_.params(), grads);

    for (std::size_t b = 0; b < batch.size(); ++b) {
      PhaseLogRecord r;
      r.epoch = epoch;
      r.phase = PhaseLogRecord::Phase::kRecognizer;
      r.iteration = it;
      r.sample_index = batch[b];
      r.e = e[b];
      r.e_hat = e_hat[b];
      r.loss = sample_loss[b];
      r.gate_open = open[b];
      logs.push_back(r);
    }
  }
  return logs;
}

double Trainer::surrogate_abs_error(std::span<const std::size_t> indices) const {
  if (indices.empty()) throw InputError("no samples to probe");
  ad::NoGradGuard no_grad;
  double total = 0.0;
  constexpr std::size_t kChunk = 256;
  for (std::size_t start = 0; start < indices.size(); start += kChunk) {
    auto chunk = indices.subspan(start, std::min(kChunk, indices.size() - start));
    ad::Var z = recognizer_.forward(images(chunk));
    std::vector<double> e = decoded_distances(z, chunk);
    ad::Var e_hat = surrogate_distance_rows(z, target_rows(chunk), surrogate_, true);
    for (std::size_t b = 0; b < chunk.size(); ++b) total += std::abs(e_hat.value()[b] - e[b]);
  }
  return total / static_cast<double>(indices.size());
}

double train_baseline(RecognizerNet& net, const Corpus& corpus, const TrainConfig& cfg) {
  cfg.validate();
  if (corpus.train.empty()) throw ConfigError("training split is empty");
  Optimizer opt(cfg.optimizer, cfg.lr_baseline, net.params());
  auto rng = sample_rng(cfg.seed, 0, kBaselineStream);
  std::uniform_int_distribution<std::size_t> pick(0, corpus.train.size() - 1);
  const std::size_t length = corpus.config.length_capacity;
  double last = 0.0;
  for (std::size_t it = 0; it < cfg.baseline_iterations; ++it) {
    std::vector<const WordImage*> batch;
    std::vector<CharGrid> targets;
    for (std::size_t b = 0; b < cfg.batch_size; ++b) {
      const WordImage& img = corpus.samples[corpus.train[pick(rng)]];
      batch.push_back(&img);
      targets.push_back(encode_one_hot(img.label, corpus.config.alphabet, length));
    }
    ad::Var loss = ce_loss_rows(net.forward(batch), grids_to_rows(targets), length);
    auto params = net.params().vars();
    opt.step(net.params(), ad::backward(loss, params));
    last = loss.item();
  }
  return last;
}

PostTuningResult run_post_tuning(const TrainConfig& cfg, const Corpus& corpus, const RecognizerNet& pretrained,
                                 const std::optional<std::filesystem::path>& checkpoint_dir,
                                 const std::function<void(std::size_t epoch)>& on_epoch) {
  cfg.validate();
  SurrogateNet surrogate(surrogate_config_for(corpus.config, cfg.seed));
  Trainer trainer(cfg, corpus, pretrained, std::move(surrogate));
  std::vector<PhaseLogRecord> logs;
  if (checkpoint_dir) std::filesystem::create_directories(*checkpoint_dir);
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    auto a = trainer.train_surrogate_phase(epoch);
    logs.insert(logs.end(), a.begin(), a.end());
    auto b = trainer.tune_recognizer_phase(epoch);
    logs.insert(logs.end(), b.begin(), b.end());
    if (checkpoint_dir) {
      trainer.recognizer().save(*checkpoint_dir / ("recognizer_epoch" + std::to_string(epoch) + ".bin"));
      trainer.surrogate().save(*checkpoint_dir / ("surrogate_epoch" + std::to_string(epoch) + ".bin"));
    }
    if (on_epoch) on_epoch(epoch);
  }
  return {trainer.recognizer(), trainer.surrogate(), std::move(logs)};
}

}  // namespace feds
