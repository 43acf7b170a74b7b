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

// Acceptance harness: prints one PASS/FAIL line per criterion, with indented
// detail lines, and exits non-zero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include "feds/errors.hpp"
#include "feds/experiment.hpp"
#include "support/gradcheck.hpp"
#include "support/oracles.hpp"

namespace ad = feds::ad;
namespace fs = std::filesystem;

namespace {

// Sizes of the end-to-end desk runs.
constexpr std::size_t kSurrogateFitIters = 500;
constexpr std::size_t kTuneEpochs = 5;
constexpr std::size_t kTuneIters = 200;
constexpr std::size_t kLsedEpochs = 2;
constexpr std::size_t kSeeds = 5;
constexpr double kLambda = 0.25;
constexpr double kMinBaselineAccuracy = 0.60;
constexpr double kEdTimeLimit = 10.0;
constexpr double kFitTimeLimit = 300.0;

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

int failures = 0;

void verdict(int id, bool pass, const std::string& what) {
  std::printf("[%s] criterion %d: %s\n", pass ? "PASS" : "FAIL", id, what.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

void detail(const std::string& line) {
  std::printf("    %s\n", line.c_str());
  std::fflush(stdout);
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), f, v);
  return buf;
}

// Runs `body`; an exception counts as a failure of criterion `id`.
void guarded(int id, const std::string& name, const std::function<void()>& body) {
  try {
    body();
  } catch (const std::exception& e) {
    verdict(id, false, name + " threw: " + e.what());
  }
}

void criterion_edit_distance() {
  Stopwatch t;
  auto words = feds::testing::all_strings("ab", 5);
  std::size_t pairs = 0, mismatches = 0;
  for (const auto& x : words) {
    for (const auto& y : words) {
      ++pairs;
      if (feds::edit_distance(x, y) != feds::testing::recursive_edit_distance(x, y)) ++mismatches;
    }
  }
  double s = t.seconds();
  verdict(1, mismatches == 0 && s < kEdTimeLimit,
          "DP edit distance equals exhaustive recursion over {a,b}^<=5: " + std::to_string(pairs) + " pairs, " +
              std::to_string(mismatches) + " mismatches, " + fmt("%.2f s", s) + " (limit 10 s)");
}

feds::SurrogateConfig tiny_surrogate() {
  feds::SurrogateConfig cfg;
  cfg.alphabet_size = 3;
  cfg.length_capacity = 4;
  cfg.embedding_dim = 8;
  cfg.conv_channels = 5;
  cfg.fc_hidden = 6;
  // Seed 1 puts a LeakyReLU pre-activation within 1e-5 of zero, where central
  // differences straddle the kink.
  cfg.seed = 4;
  return cfg;
}

void criterion_gradients() {
  using feds::testing::check_gradients;
  using feds::testing::random_grid_rows;
  struct Item {
    std::string name;
    feds::testing::GradCheckReport report;
  };
  std::vector<Item> items;

  // ce_loss through a tiny recognizer (|A|=3, L=4).
  {
    feds::RecognizerConfig rc;
    rc.alphabet_size = 3;
    rc.length_capacity = 4;
    rc.height = 3;
    rc.glyph_width = 2;
    rc.channels = 3;
    rc.seed = 1;
    feds::RecognizerNet net(rc);
    feds::WordImage a{3, 8, feds::testing::uniform_values(24, 1, 0.0, 1.0), ""};
    feds::WordImage b{3, 8, feds::testing::uniform_values(24, 2, 0.0, 1.0), ""};
    std::vector<const feds::WordImage*> batch{&a, &b};
    feds::Alphabet alpha("ab");
    auto y0 = feds::encode_one_hot("ab", alpha, 4).values();
    auto y1 = feds::encode_one_hot("bba", alpha, 4).values();
    y0.insert(y0.end(), y1.begin(), y1.end());
    ad::Var y = ad::constant({8, 3}, y0);
    items.push_back({"ce_loss d/dTheta", check_gradients(net.params(), [&] {
                       return feds::ce_loss_rows(net.forward(batch), y, 4);
                     })});
  }

  // Surrogate pieces on |A|=3, L=4, d=8.
  feds::SurrogateNet net(tiny_surrogate());
  std::vector<double> z = random_grid_rows(2, 4, 3, 3);
  ad::Var y = ad::constant({8, 3}, random_grid_rows(2, 4, 3, 4));
  std::vector<double> e{0.0, 2.0};
  items.push_back({"surrogate_distance d/dPhi", check_gradients(net.params(), [&] {
                     return ad::sum(feds::surrogate_distance_rows(ad::constant({8, 3}, z), y, net));
                   })});
  feds::ParamStore grid;
  grid.add("z_hat", {8, 3}, z);
  items.push_back({"surrogate_distance d/dz_hat", check_gradients(grid, [&] {
                     return ad::sum(feds::surrogate_distance_rows(grid.get("z_hat"), y, net));
                   })});
  items.push_back({"surrogate_loss fit term d/dPhi", check_gradients(net.params(), [&] {
                     return feds::surrogate_loss_rows(z, y, e, net, {1.0, 0.0}).loss;
                   })});
  items.push_back({"surrogate_loss penalty term d/dPhi (second order)", check_gradients(net.params(), [&] {
                     return feds::surrogate_loss_rows(z, y, e, net, {1e-12, 1.0}).loss;
                   })});

  bool ok = true;
  std::size_t coords = 0;
  for (const auto& it : items) {
    ok = ok && it.report.ok();
    coords += it.report.checked;
    detail(it.name + ": " + std::to_string(it.report.checked) + " coords, " + std::to_string(it.report.failed) +
           " outside tolerance, worst abs " + fmt("%.2e", it.report.worst_abs) +
           (it.report.first_failure.empty() ? "" : ", first: " + it.report.first_failure));
  }
  verdict(2, ok,
          "analytic gradients match central differences within max(1e-7 abs, 1e-3 rel): " + std::to_string(coords) +
              " coordinates over " + std::to_string(items.size()) + " checks");
}

double max_abs(const std::vector<ad::Var>& grads) {
  double m = 0.0;
  for (const auto& g : grads)
    for (double v : g.value()) m = std::max(m, std::abs(v));
  return m;
}

void criterion_gate_zeroing() {
  feds::DatasetConfig data;
  data.corpus_size = 20;
  feds::Corpus corpus = feds::sample_corpus(data);
  feds::RecognizerConfig rc = feds::RecognizerConfig::for_dataset(data, 0);
  rc.channels = 8;
  feds::RecognizerNet recognizer(rc);
  feds::SurrogateNet surrogate(feds::surrogate_config_for(data, 0));

  std::vector<const feds::WordImage*> images;
  std::vector<feds::CharGrid> targets;
  for (std::size_t i = 0; i < 4; ++i) {
    images.push_back(&corpus.samples[i]);
    targets.push_back(feds::encode_one_hot(corpus.samples[i].label, data.alphabet, data.length_capacity));
  }
  ad::Var y = feds::grids_to_rows(targets);
  std::vector<double> e_hat = feds::surrogate_distance_rows(recognizer.forward(images), y, surrogate, true).value();

  auto grads = [&](const std::vector<double>& e, feds::GateMode mode) {
    auto res = feds::filtered_str_loss_rows(recognizer.forward(images), y, e, surrogate, kLambda, mode);
    return ad::backward(res.loss, recognizer.params().vars());
  };

  // Closed: offsets at and beyond lambda on both sides. Open: strictly inside.
  std::vector<double> closed{e_hat[0] + 1.0, e_hat[1] - 0.5, e_hat[2] + 2.0, e_hat[3] - 0.25 - 1e-6};
  std::vector<double> open{e_hat[0] + 0.1, e_hat[1] - 0.1, e_hat[2] + 0.2, e_hat[3] - 0.2};
  bool ok = true;
  for (feds::GateMode mode : {feds::GateMode::kGated, feds::GateMode::kLiteral}) {
    double closed_max = max_abs(grads(closed, mode));
    double open_max = max_abs(grads(open, mode));
    ok = ok && closed_max == 0.0 && open_max > 0.0;
    detail(feds::to_string(mode) + ": max |dL/dTheta| closed = " + fmt("%.3g", closed_max) +
           ", open = " + fmt("%.3g", open_max));
  }
  verdict(3, ok, "closed gates give exactly zero Theta-gradient and open gates a nonzero one, in both modes");
}

struct SeedRun {
  feds::MetricsReport baseline;
  feds::MetricsReport tuned;
  std::vector<feds::PhaseLogRecord> logs;
};

feds::ExperimentConfig desk_config(std::uint64_t seed) {
  feds::ExperimentConfig cfg;
  cfg.set_seed(seed);
  cfg.train.lambda = kLambda;
  return cfg;
}

void criterion_surrogate_fit(const feds::Corpus& corpus, const feds::RecognizerNet& baseline) {
  feds::TrainConfig tc = desk_config(0).train;
  tc.iters_surrogate = kSurrogateFitIters;
  feds::Trainer trainer(tc, corpus, baseline, feds::SurrogateNet(feds::surrogate_config_for(corpus.config, 0)));
  double before = trainer.surrogate_abs_error(corpus.val);
  Stopwatch t;
  trainer.train_surrogate_phase(1);
  double s = t.seconds();
  double after = trainer.surrogate_abs_error(corpus.val);
  verdict(4, after <= 0.5 && after < before && s <= kFitTimeLimit,
          "held-out mean |e_hat - e| after I_a=500: " + fmt("%.4f", after) + " (init " + fmt("%.4f", before) +
              ", limit 0.5), phase time " + fmt("%.1f s", s) + " (limit 300 s)");
}

void criteria_end_to_end() {
  std::vector<SeedRun> runs;
  feds::Corpus corpus0;
  feds::RecognizerNet baseline0{feds::RecognizerConfig{}};
  bool fit_done = false;

  for (std::uint64_t seed = 0; seed < kSeeds; ++seed) {
    Stopwatch t;
    feds::ExperimentConfig cfg = desk_config(seed);
    feds::Corpus corpus = feds::sample_corpus(cfg.data);
    feds::RecognizerNet net(cfg.recognizer_config());
    feds::train_baseline(net, corpus, cfg.train);
    SeedRun run;
    run.baseline = feds::evaluate_model(net, corpus, "test");

    if (seed == 0) {
      guarded(4, "surrogate fit", [&] { criterion_surrogate_fit(corpus, net); });
      fit_done = true;
      corpus0 = corpus;
      baseline0 = net;
    }

    feds::TrainConfig tc = cfg.train;
    tc.epochs = kTuneEpochs;
    tc.iters_surrogate = kTuneIters;
    tc.iters_recognizer = kTuneIters;
    auto result = feds::run_post_tuning(tc, corpus, net);
    run.tuned = feds::evaluate_model(result.recognizer, corpus, "test");
    run.logs = std::move(result.logs);
    detail("seed " + std::to_string(seed) + ": baseline acc " + fmt("%.3f", run.baseline.accuracy) + " TED " +
           std::to_string(run.baseline.ted) + " -> FEDS acc " + fmt("%.3f", run.tuned.accuracy) + " TED " +
           std::to_string(run.tuned.ted) + ", in-band e1 " + fmt("%.3f", feds::in_band_fraction(run.logs, 1, 1, kLambda)) +
           " e4-5 " + fmt("%.3f", feds::in_band_fraction(run.logs, 4, 5, kLambda)) + " (" + fmt("%.0f s", t.seconds()) +
           ")");
    runs.push_back(std::move(run));
  }
  if (!fit_done) verdict(4, false, "surrogate fit did not run");

  // Criterion 5 on the seed-0 desk run.
  {
    double early = feds::in_band_fraction(runs[0].logs, 1, 1, kLambda);
    double late = feds::in_band_fraction(runs[0].logs, 4, 5, kLambda);
    verdict(5, late > early,
            "in-band fraction |e_hat - e| < 0.25 in epochs 4-5 = " + fmt("%.4f", late) + " vs epoch 1 = " +
                fmt("%.4f", early));
  }

  // Criterion 6 over all seeds.
  {
    std::size_t wins = 0;
    double rel_sum = 0.0;
    bool baselines_ok = true;
    for (const auto& r : runs) {
      wins += r.tuned.ted <= r.baseline.ted ? 1 : 0;
      rel_sum += feds::relative_ted_improvement(r.baseline.ted, r.tuned.ted);
      baselines_ok = baselines_ok && r.baseline.accuracy >= kMinBaselineAccuracy;
    }
    double mean_rel = rel_sum / static_cast<double>(runs.size());
    verdict(6, baselines_ok && wins >= 4 && mean_rel > 0.0,
            "FEDS test TED <= baseline in " + std::to_string(wins) + "/" + std::to_string(runs.size()) +
                " seeds (need 4), mean relative TED improvement " + fmt("%+.2f%%", 100.0 * mean_rel) +
                " (need > 0), all baselines >= 60% accuracy: " + (baselines_ok ? "yes" : "no"));
  }

  // Criterion 7: LS-ED arm from the seed-0 pretrained recognizer.
  guarded(7, "LS-ED arm", [&] {
    feds::TrainConfig tc = desk_config(0).train;
    tc.epochs = kLsedEpochs;
    tc.iters_surrogate = kTuneIters;
    tc.iters_recognizer = kTuneIters;
    tc.mode = feds::TrainMode::kLsed;
    auto lsed = feds::run_post_tuning(tc, corpus0, baseline0);
    std::size_t recog = 0, open = 0;
    for (const auto& r : lsed.logs) {
      if (r.phase != feds::PhaseLogRecord::Phase::kRecognizer) continue;
      ++recog;
      open += r.gate_open ? 1 : 0;
    }
    // Same-length prefix of the FEDS run with the same seed.
    std::vector<feds::PhaseLogRecord> feds_prefix;
    for (const auto& r : runs[0].logs)
      if (r.epoch <= kLsedEpochs) feds_prefix.push_back(r);
    bool differ = feds_prefix != lsed.logs;
    auto report = feds::evaluate_model(lsed.recognizer, corpus0, "test");
    detail("LS-ED seed 0, E=" + std::to_string(kLsedEpochs) + ": test TED " + std::to_string(report.ted) +
           " (baseline " + std::to_string(runs[0].baseline.ted) + ")");
    verdict(7, recog > 0 && open == recog && differ,
            "LS-ED gate-open fraction " + fmt("%.4f", static_cast<double>(open) / static_cast<double>(recog)) +
                " over " + std::to_string(recog) + " recognizer samples (need 1), logs differ from FEDS: " +
                (differ ? "yes" : "no"));
  });
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw feds::IoError("missing output " + p.string());
  return {std::istreambuf_iterator<char>(in), {}};
}

int run_cli(const std::string& args) {
  std::string cmd = std::string(FEDS_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  return std::system(cmd.c_str());
}

void criterion_cli_determinism(const fs::path& config) {
  fs::path root = fs::temp_directory_path() / "feds_acceptance_cli";
  fs::remove_all(root);
  const std::string cfg = "--config " + config.string() + " --seed 11";
  auto run_all = [&](const fs::path& dir) {
    std::string d = dir.string();
    int rc = 0;
    rc |= run_cli("gen-data " + cfg + " --out " + d + "/data");
    rc |= run_cli("train-baseline " + cfg + " --data " + d + "/data --out " + d + "/base");
    rc |= run_cli("tune " + cfg + " --mode feds --lambda 0.25 --epochs 2 --data " + d + "/data --init " + d +
                  "/base/recognizer.bin --out " + d + "/tune");
    rc |= run_cli("evaluate --checkpoint " + d + "/tune/recognizer.bin --baseline " + d + "/base/recognizer.bin --data " +
                  d + "/data --split test --out " + d + "/eval");
    rc |= run_cli("scatter --log " + d + "/tune/log.csv --first 1 --last 2 --lambda 0.25 --out " + d + "/scatter.csv");
    return rc;
  };
  int rc = run_all(root / "a") | run_all(root / "b");
  const std::vector<std::string> outputs{"data/labels.tsv",        "base/baseline_val_metrics.csv",
                                         "tune/log.csv",           "eval/metrics.csv",
                                         "scatter.csv",            "eval/summary.txt",
                                         "base/recognizer.bin",    "tune/recognizer.bin",
                                         "tune/surrogate.bin",     "data/images/000000.pgm"};
  std::size_t same = 0;
  for (const auto& o : outputs) {
    bool eq = slurp(root / "a" / o) == slurp(root / "b" / o);
    same += eq ? 1 : 0;
    if (!eq) detail("differs: " + o);
  }
  fs::remove_all(root);
  verdict(8, rc == 0 && same == outputs.size(),
          "repeated CLI runs (gen-data, train-baseline, tune, evaluate, scatter) give byte-identical outputs: " +
              std::to_string(same) + "/" + std::to_string(outputs.size()) + " files, exit codes " +
              (rc == 0 ? "ok" : "nonzero"));
}

}  // namespace

int main(int argc, char** argv) {
  fs::path cli_config = argc > 1 ? fs::path(argv[1]) : fs::path(FEDS_SMOKE_CONFIG);
  Stopwatch total;
  guarded(1, "edit distance oracle", criterion_edit_distance);
  guarded(2, "gradient checks", criterion_gradients);
  guarded(3, "gate zeroing", criterion_gate_zeroing);
  guarded(5, "end-to-end desk runs", criteria_end_to_end);
  guarded(8, "CLI determinism", [&] { criterion_cli_determinism(cli_config); });
  std::printf("acceptance: %d failing criteria, %.0f s total\n", failures, total.seconds());
  return failures == 0 ? 0 : 1;
}
