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

#include "feds/experiment.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <nlohmann/json.hpp>

#include "feds/errors.hpp"

namespace feds {

using nlohmann::json;

namespace {

std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

template <typename T>
void read_key(const json& obj, const char* key, T& field) {
  if (obj.contains(key)) field = obj.at(key).get<T>();
}

void reject_unknown(const json& obj, std::initializer_list<const char*> known, const std::string& where) {
  for (const auto& [key, _] : obj.items()) {
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    if (!ok) throw ConfigError("unknown config key '" + where + key + "'");
  }
}

void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
}

}  // namespace

void ExperimentConfig::set_seed(std::uint64_t s) {
  seed = s;
  data.seed = s;
  train.seed = s;
}

RecognizerConfig ExperimentConfig::recognizer_config() const {
  RecognizerConfig rc = RecognizerConfig::for_dataset(data, seed);
  rc.channels = recognizer_channels;
  return rc;
}

ExperimentConfig config_from_json(const json& j, ExperimentConfig cfg) {
  try {
    reject_unknown(j, {"seed", "data", "recognizer", "train"}, "");
    if (j.contains("data")) {
      const json& d = j.at("data");
      reject_unknown(d,
                     {"alphabet", "length_capacity", "height", "glyph_width", "width", "corpus_size", "noise_std",
                      "shift_range"},
                     "data.");
      if (d.contains("alphabet")) cfg.data.alphabet = Alphabet(d.at("alphabet").get<std::string>());
      read_key(d, "length_capacity", cfg.data.length_capacity);
      read_key(d, "height", cfg.data.height);
      read_key(d, "glyph_width", cfg.data.glyph_width);
      cfg.data.width = cfg.data.length_capacity * cfg.data.glyph_width;
      read_key(d, "width", cfg.data.width);
      read_key(d, "corpus_size", cfg.data.corpus_size);
      read_key(d, "noise_std", cfg.data.noise_std);
      read_key(d, "shift_range", cfg.data.shift_range);
    }
    if (j.contains("recognizer")) {
      const json& r = j.at("recognizer");
      reject_unknown(r, {"channels"}, "recognizer.");
      read_key(r, "channels", cfg.recognizer_channels);
    }
    if (j.contains("train")) {
      const json& t = j.at("train");
      reject_unknown(t,
                     {"iters_surrogate", "iters_recognizer", "epochs", "lr_surrogate", "lr_recognizer", "lambda",
                      "batch_size", "mode", "gate_mode", "w1", "w2", "optimizer", "rho", "eps",
                      "baseline_iterations", "lr_baseline"},
                     "train.");
      auto& tc = cfg.train;
      read_key(t, "iters_surrogate", tc.iters_surrogate);
      read_key(t, "iters_recognizer", tc.iters_recognizer);
      read_key(t, "epochs", tc.epochs);
      read_key(t, "lr_surrogate", tc.lr_surrogate);
      read_key(t, "lr_recognizer", tc.lr_recognizer);
      read_key(t, "lambda", tc.lambda);
      read_key(t, "batch_size", tc.batch_size);
      if (t.contains("mode")) tc.mode = parse_train_mode(t.at("mode").get<std::string>());
      if (t.contains("gate_mode")) tc.gate_mode = parse_gate_mode(t.at("gate_mode").get<std::string>());
      read_key(t, "w1", tc.weights.w1);
      read_key(t, "w2", tc.weights.w2);
      if (t.contains("optimizer")) {
        auto name = t.at("optimizer").get<std::string>();
        if (name == "adadelta") {
          tc.optimizer.kind = OptimizerConfig::Kind::kAdadelta;
        } else if (name == "sgd") {
          tc.optimizer.kind = OptimizerConfig::Kind::kSgd;
        } else {
          throw ConfigError("unknown optimizer '" + name + "'");
        }
      }
      read_key(t, "rho", tc.optimizer.rho);
      read_key(t, "eps", tc.optimizer.eps);
      read_key(t, "baseline_iterations", tc.baseline_iterations);
      read_key(t, "lr_baseline", tc.lr_baseline);
    }
    std::uint64_t seed = cfg.seed;
    read_key(j, "seed", seed);
    cfg.set_seed(seed);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad config value: ") + e.what());
  }
  cfg.data.validate();
  cfg.train.validate();
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("malformed config " + path.string() + ": " + e.what());
  }
  return config_from_json(j);
}

json config_to_json(const ExperimentConfig& cfg) {
  const auto& d = cfg.data;
  const auto& t = cfg.train;
  nlohmann::ordered_json j;
  j["seed"] = cfg.seed;
  j["data"] = {{"alphabet", d.alphabet.chars()}, {"length_capacity", d.length_capacity},
               {"height", d.height},               {"glyph_width", d.glyph_width},
               {"width", d.width},                 {"corpus_size", d.corpus_size},
               {"noise_std", d.noise_std},         {"shift_range", d.shift_range}};
  j["recognizer"] = {{"channels", cfg.recognizer_channels}};
  j["train"] = {{"iters_surrogate", t.iters_surrogate},
                {"iters_recognizer", t.iters_recognizer},
                {"epochs", t.epochs},
                {"lr_surrogate", t.lr_surrogate},
                {"lr_recognizer", t.lr_recognizer},
                {"lambda", t.lambda},
                {"batch_size", t.batch_size},
                {"mode", to_string(t.mode)},
                {"gate_mode", to_string(t.gate_mode)},
                {"w1", t.weights.w1},
                {"w2", t.weights.w2},
                {"optimizer", t.optimizer.kind == OptimizerConfig::Kind::kAdadelta ? "adadelta" : "sgd"},
                {"rho", t.optimizer.rho},
                {"eps", t.optimizer.eps},
                {"baseline_iterations", t.baseline_iterations},
                {"lr_baseline", t.lr_baseline}};
  return j;
}

MetricsReport evaluate_model(const RecognizerNet& net, const Corpus& corpus, const std::string& split) {
  const auto& indices = corpus.split(split);
  if (indices.empty()) throw InputError("split '" + split + "' is empty");
  if (net.config().alphabet_size != corpus.config.alphabet.size() ||
      net.config().length_capacity != corpus.config.length_capacity) {
    throw ConfigError("checkpoint alphabet or length capacity does not match the dataset");
  }
  std::vector<std::string> preds = predict(net, corpus, indices);
  std::vector<std::string> gts;
  gts.reserve(indices.size());
  for (std::size_t i : indices) gts.push_back(corpus.samples[i].label);
  MetricsReport report = evaluate_set(preds, gts);
  for (std::size_t k = 0; k < indices.size(); ++k) report.rows[k].index = indices[k];
  report.dataset_id = split;
  return report;
}

MetricsReport evaluate_model(const std::filesystem::path& checkpoint, const std::filesystem::path& dataset_dir,
                             const std::string& split) {
  RecognizerNet net = RecognizerNet::load(checkpoint);
  Corpus corpus = read_dataset(dataset_dir);
  MetricsReport report = evaluate_model(net, corpus, split);
  report.dataset_id = dataset_dir.filename().string() + ":" + split;
  return report;
}

double relative_ted_improvement(std::size_t ted_base, std::size_t ted_tuned) {
  if (ted_base == 0) return 0.0;
  return (static_cast<double>(ted_base) - static_cast<double>(ted_tuned)) / static_cast<double>(ted_base);
}

void write_metrics_csv(std::ostream& out, const MetricsReport& report) {
  out << "sample_index,gt,pred,ed\n";
  for (const auto& r : report.rows) out << r.index << ',' << r.gt << ',' << r.pred << ',' << r.ed << '\n';
}

void write_metrics_csv(const std::filesystem::path& path, const MetricsReport& report) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  write_metrics_csv(out, report);
}

std::vector<SampleRow> read_metrics_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  std::getline(in, line);
  if (line != "sample_index,gt,pred,ed") throw IoError(path.string() + " is not a metrics CSV");
  std::vector<SampleRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string idx, gt, pred, ed;
    std::getline(fields, idx, ',');
    std::getline(fields, gt, ',');
    std::getline(fields, pred, ',');
    std::getline(fields, ed);
    rows.push_back({std::stoul(idx), gt, pred, std::stoul(ed)});
  }
  return rows;
}

std::string summary_text(const MetricsReport& report, const std::optional<MetricsReport>& baseline) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(4);
  s << "dataset: " << report.dataset_id << '\n';
  s << "samples: " << report.n_samples << '\n';
  s << "accuracy: " << report.accuracy << '\n';
  s << "ned: " << report.ned << '\n';
  s << "ted: " << report.ted << '\n';
  if (baseline) {
    s << "baseline_accuracy: " << baseline->accuracy << '\n';
    s << "baseline_ted: " << baseline->ted << '\n';
    s << "relative_ted_improvement: " << std::showpos << 100.0 * relative_ted_improvement(baseline->ted, report.ted)
      << std::noshowpos << "%\n";
  }
  return s.str();
}

Scatter export_scatter(std::span<const PhaseLogRecord> logs, std::size_t first_epoch, std::size_t last_epoch,
                       double lambda) {
  if (!(lambda > 0.0)) throw ConfigError("lambda must be positive");
  if (first_epoch > last_epoch) throw InputError("empty epoch range");
  Scatter s;
  s.lambda = lambda;
  s.first_epoch = first_epoch;
  s.last_epoch = last_epoch;
  for (const auto& r : logs) {
    if (r.phase != PhaseLogRecord::Phase::kRecognizer || r.epoch < first_epoch || r.epoch > last_epoch) continue;
    s.rows.push_back({r.epoch, r.iteration, r.sample_index, r.e, r.e_hat, r.gate_open});
  }
  if (s.rows.empty()) {
    throw InputError("no recognizer-phase records in epochs " + std::to_string(first_epoch) + ".." +
                     std::to_string(last_epoch));
  }
  return s;
}

double in_band_fraction(const Scatter& scatter) {
  if (scatter.rows.empty()) throw InputError("empty scatter");
  std::size_t in = 0;
  for (const auto& r : scatter.rows) in += gate_open(r.e, r.e_hat, scatter.lambda) ? 1 : 0;
  return static_cast<double>(in) / static_cast<double>(scatter.rows.size());
}

double in_band_fraction(std::span<const PhaseLogRecord> logs, std::size_t first_epoch, std::size_t last_epoch,
                        double lambda) {
  return in_band_fraction(export_scatter(logs, first_epoch, last_epoch, lambda));
}

void write_scatter_csv(std::ostream& out, const Scatter& scatter) {
  out << "# lambda=" << format_real(scatter.lambda) << " epochs=" << scatter.first_epoch << '-' << scatter.last_epoch
      << '\n';
  out << "epoch,iteration,sample_index,e,e_hat,gate_open,band_lo,band_hi\n";
  for (const auto& r : scatter.rows) {
    out << r.epoch << ',' << r.iteration << ',' << r.sample_index << ',' << format_real(r.e) << ','
        << format_real(r.e_hat) << ',' << (r.gate_open ? 1 : 0) << ',' << format_real(r.e - scatter.lambda) << ','
        << format_real(r.e + scatter.lambda) << '\n';
  }
}

void write_scatter_csv(const std::filesystem::path& path, const Scatter& scatter) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  write_scatter_csv(out, scatter);
}

Scatter read_scatter_csv(std::istream& in) {
  Scatter s;
  std::string line;
  if (!std::getline(in, line) ||
      std::sscanf(line.c_str(), "# lambda=%lf epochs=%zu-%zu", &s.lambda, &s.first_epoch, &s.last_epoch) != 3) {
    throw IoError("scatter CSV lacks its metadata line");
  }
  std::getline(in, line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::vector<std::string> f;
    std::string cell;
    while (std::getline(fields, cell, ',')) f.push_back(cell);
    if (f.size() != 8) throw IoError("malformed scatter row: " + line);
    s.rows.push_back({std::stoul(f[0]), std::stoul(f[1]), std::stoul(f[2]), std::stod(f[3]), std::stod(f[4]),
                      f[5] == "1"});
  }
  return s;
}

void command_gen_data(const ExperimentConfig& cfg, const std::filesystem::path& out_dir) {
  ensure_dir(out_dir);
  write_dataset(out_dir, sample_corpus(cfg.data));
}

MetricsReport command_train_baseline(const ExperimentConfig& cfg, const std::filesystem::path& data_dir,
                                     const std::filesystem::path& out_dir) {
  Corpus corpus = read_dataset(data_dir);
  ExperimentConfig run = cfg;
  run.data = corpus.config;
  RecognizerNet net(run.recognizer_config());
  train_baseline(net, corpus, run.train);
  ensure_dir(out_dir);
  net.save(out_dir / "recognizer.bin");
  MetricsReport report = evaluate_model(net, corpus, "val");
  write_metrics_csv(out_dir / "baseline_val_metrics.csv", report);
  std::ofstream(out_dir / "baseline_summary.txt", std::ios::binary | std::ios::trunc) << summary_text(report);
  return report;
}

void command_tune(const ExperimentConfig& cfg, const std::filesystem::path& data_dir,
                  const std::filesystem::path& init_checkpoint, const std::filesystem::path& out_dir) {
  Corpus corpus = read_dataset(data_dir);
  RecognizerNet pretrained = RecognizerNet::load(init_checkpoint);
  ensure_dir(out_dir);
  PostTuningResult result = run_post_tuning(cfg.train, corpus, pretrained, out_dir / "checkpoints");
  write_log_csv(out_dir / "log.csv", result.logs);
  result.recognizer.save(out_dir / "recognizer.bin");
  result.surrogate.save(out_dir / "surrogate.bin");
}

MetricsReport command_evaluate(const std::filesystem::path& checkpoint, const std::filesystem::path& data_dir,
                               const std::string& split, const std::filesystem::path& out_dir,
                               const std::optional<std::filesystem::path>& baseline_checkpoint) {
  MetricsReport report = evaluate_model(checkpoint, data_dir, split);
  std::optional<MetricsReport> baseline;
  if (baseline_checkpoint) baseline = evaluate_model(*baseline_checkpoint, data_dir, split);
  ensure_dir(out_dir);
  write_metrics_csv(out_dir / "metrics.csv", report);
  std::ofstream summary(out_dir / "summary.txt", std::ios::binary | std::ios::trunc);
  summary << summary_text(report, baseline);
  if (!summary) throw IoError("cannot write " + (out_dir / "summary.txt").string());
  return report;
}

Scatter command_scatter(const std::filesystem::path& log_csv, std::size_t first_epoch, std::size_t last_epoch,
                        double lambda, const std::filesystem::path& out_csv) {
  auto logs = read_log_csv(log_csv);
  Scatter s = export_scatter(logs, first_epoch, last_epoch, lambda);
  if (out_csv.has_parent_path()) ensure_dir(out_csv.parent_path());
  write_scatter_csv(out_csv, s);
  return s;
}

}  // namespace feds
