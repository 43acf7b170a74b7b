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
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "feds/text_metrics.hpp"

namespace feds {

struct DatasetConfig {
  Alphabet alphabet = Alphabet::default_alphabet();
  std::size_t length_capacity = 8;
  std::size_t height = 8;
  std::size_t glyph_width = 4;
  std::size_t width = 32;
  std::size_t corpus_size = 5000;
  double noise_std = 0.35;
  std::size_t shift_range = 1;
  std::uint64_t seed = 0;

  void validate() const;
};

// Row-major H x W pixels in [0, 1].
struct WordImage {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> pixels;
  std::string label;

  double at(std::size_t row, std::size_t col) const { return pixels[row * width + col]; }
  bool operator==(const WordImage&) const = default;
};

// One fixed binary H x glyph_width pattern per non-padding symbol, drawn
// from the dataset seed. Patterns are pairwise distinct.
class GlyphBank {
 public:
  explicit GlyphBank(const DatasetConfig& cfg);
  const std::vector<double>& glyph(std::size_t symbol) const { return glyphs_.at(symbol); }

 private:
  std::vector<std::vector<double>> glyphs_;
};

// Glyphs composed left to right from column `shift`, then Gaussian pixel
// noise, clamping to [0, 1] and quantisation to 8 bits (so images survive a
// round trip through PGM files unchanged).
WordImage render_word(std::string_view word, const DatasetConfig& cfg, const GlyphBank& glyphs, std::mt19937_64& rng);
WordImage render_word(std::string_view word, const DatasetConfig& cfg, std::mt19937_64& rng);

// Noise-free composition at a given shift.
WordImage compose_glyphs(std::string_view word, const DatasetConfig& cfg, const GlyphBank& glyphs, int shift);

struct Corpus {
  DatasetConfig config;
  std::vector<WordImage> samples;
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
  std::vector<std::size_t> test;

  const std::vector<std::size_t>& split(std::string_view name) const;
};

// 80/10/10 split by index.
void assign_splits(Corpus& corpus);

// Per-sample generator seeded from (seed, index, stream), so samples can be
// produced independently and in any order.
std::mt19937_64 sample_rng(std::uint64_t seed, std::uint64_t index, std::uint64_t stream);

std::string sample_word(const DatasetConfig& cfg, std::mt19937_64& rng);

Corpus sample_corpus(const DatasetConfig& cfg);

struct PairSample {
  CharGrid grid_a;
  CharGrid grid_b;
  std::size_t ed = 0;
  std::size_t edits_applied = 0;
};

// Base word plus k random edits (k uniform in [0, L/2]); the label is the
// true edit distance of the resulting pair, which may be below k.
PairSample random_pair_generator(const DatasetConfig& cfg, std::mt19937_64& rng);
PairSample random_pair_with_edits(const DatasetConfig& cfg, std::size_t k, std::mt19937_64& rng);

// On-disk layout: images/NNNNNN.pgm (binary P5, 8-bit), labels.tsv
// (index, filename, transcription) and dataset.json (config and splits).
void write_dataset(const std::filesystem::path& dir, const Corpus& corpus);
Corpus read_dataset(const std::filesystem::path& dir);

void write_pgm(const std::filesystem::path& path, const WordImage& image);
WordImage read_pgm(const std::filesystem::path& path);

}  // namespace feds
