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
#include <string>
#include <vector>

#include "feds/autodiff.hpp"
#include "feds/params.hpp"
#include "feds/synth_data.hpp"
#include "feds/text_metrics.hpp"

namespace feds {

struct RecognizerConfig {
  std::size_t alphabet_size = 37;
  std::size_t length_capacity = 8;
  std::size_t height = 8;
  std::size_t glyph_width = 4;
  std::size_t channels = 24;
  std::size_t kernel = 3;
  double slope = 0.01;
  std::uint64_t seed = 0;

  std::size_t width() const { return length_capacity * glyph_width; }
  static RecognizerConfig for_dataset(const DatasetConfig& data, std::uint64_t seed);
};

// Treats an image as a sequence of W pixel columns (H channels each): two
// conv1d + LeakyReLU layers, average pooling with stride glyph_width down to
// L positions, and a linear head to |A| logits per position.
class RecognizerNet {
 public:
  explicit RecognizerNet(const RecognizerConfig& cfg);
  RecognizerNet(const RecognizerConfig& cfg, ParamStore params);

  const RecognizerConfig& config() const { return cfg_; }
  ParamStore& params() { return params_; }
  const ParamStore& params() const { return params_; }

  // Soft-max grids for a batch, as [batch * L, |A|] rows.
  ad::Var forward(std::span<const WordImage* const> images) const;

  void save(const std::filesystem::path& path) const;
  static RecognizerNet load(const std::filesystem::path& path);

 private:
  ad::Var columns(std::span<const WordImage* const> images) const;

  RecognizerConfig cfg_;
  ParamStore params_;
};

CharGrid recognize(const WordImage& image, const RecognizerNet& net);

// -(1 / (L |A|)) sum y log z per sample (log clamped at 1e-12), averaged over
// the batch. Rows are [batch * L, |A|].
ad::Var ce_loss_rows(const ad::Var& z_rows, const ad::Var& y_rows, std::size_t length_capacity);
ad::Var ce_loss(const ad::Var& z_hat, const CharGrid& y_hat);

// Greedy transcriptions for every sample in `indices`, batched.
std::vector<std::string> predict(const RecognizerNet& net, const Corpus& corpus, std::span<const std::size_t> indices,
                                 std::size_t batch_size = 256);

}  // namespace feds
