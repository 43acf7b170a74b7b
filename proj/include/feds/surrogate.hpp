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
#include <span>
#include <vector>

#include "feds/autodiff.hpp"
#include "feds/params.hpp"
#include "feds/text_metrics.hpp"

namespace feds {

struct SurrogateConfig {
  std::size_t alphabet_size = 37;
  std::size_t length_capacity = 8;
  std::size_t embedding_dim = 128;
  std::size_t conv_channels = 64;
  std::size_t conv_layers = 5;
  std::size_t kernel = 3;
  std::size_t fc_hidden = 128;
  // Weight init bound is init_gain * sqrt(1/fan_in); biases use gain 1.
  // The default is the He-uniform bound sqrt(6/fan_in).
  double init_gain = 2.449489742783178;
  double slope = 0.01;
  std::uint64_t seed = 0;

  // 1024-d embedding for full-scale runs.
  static SurrogateConfig full_scale(std::size_t alphabet_size, std::size_t length_capacity);
};

struct SurrogateLossWeights {
  double w1 = 1.0;
  double w2 = 0.1;

  void validate() const;
};

// Char-CNN h: five 1-D convolutions over the length axis (|A| input channels),
// LeakyReLU after each, average pooling over length, then two FC layers.
class SurrogateNet {
 public:
  explicit SurrogateNet(const SurrogateConfig& cfg);
  SurrogateNet(const SurrogateConfig& cfg, ParamStore params);

  const SurrogateConfig& config() const { return cfg_; }
  ParamStore& params() { return params_; }
  const ParamStore& params() const { return params_; }

  // rows: [batch * L, |A|], i.e. concatenated CharGrid storage.
  // With `frozen` the parameters enter the graph as constants.
  ad::Var embed_rows(const ad::Var& rows, bool frozen = false) const;

  void save(const std::filesystem::path& path) const;
  static SurrogateNet load(const std::filesystem::path& path);

 private:
  void check_rows(const ad::Var& rows) const;

  SurrogateConfig cfg_;
  ParamStore params_;
};

// Stacks grids into a [batch * L, |A|] constant.
ad::Var grids_to_rows(std::span<const CharGrid> grids);
CharGrid rows_to_grid(const ad::Var& rows, std::size_t sample, std::size_t length_capacity);

// Embedding of a single grid as a [1, embedding_dim] node.
ad::Var embed(const CharGrid& grid, const SurrogateNet& net);

// Per-sample ||h(z) - h(y)||_2 as a [batch, 1] node.
ad::Var surrogate_distance_rows(const ad::Var& z_rows, const ad::Var& y_rows, const SurrogateNet& net,
                                bool frozen = false);
ad::Var surrogate_distance(const CharGrid& z_hat, const CharGrid& y_hat, const SurrogateNet& net);

struct SurrogateLossResult {
  ad::Var loss;                     // batch mean, [1,1]
  std::vector<double> e_hat;        // per sample
  std::vector<double> grad_norm;    // per sample ||d e_hat / d z_hat||
  std::vector<double> sample_loss;  // per sample
};

// w1 (e_hat - e)^2 + w2 (||d e_hat / d z_hat||_2 - 1)^2, averaged over the
// batch. The inner gradient is taken w.r.t. z_hat only and recorded, so the
// result can be differentiated w.r.t. the surrogate parameters.
SurrogateLossResult surrogate_loss_rows(const std::vector<double>& z_values, const ad::Var& y_rows,
                                        std::span<const double> e, const SurrogateNet& net,
                                        const SurrogateLossWeights& w);
ad::Var surrogate_loss(const CharGrid& z_hat, const CharGrid& y_hat, std::size_t e, const SurrogateNet& net,
                       const SurrogateLossWeights& w);

}  // namespace feds
