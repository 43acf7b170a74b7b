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

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace feds {

// Ordered character set. Row 0 is always the padding symbol, which has no
// printable character; rows 1..size()-1 map to `chars()`.
class Alphabet {
 public:
  static constexpr std::size_t kPadIndex = 0;

  // `chars` are the non-padding symbols, in row order starting at row 1.
  explicit Alphabet(std::string chars);

  // 26 lowercase letters followed by 10 digits, plus padding (|A| = 37).
  static Alphabet default_alphabet();

  std::size_t size() const { return chars_.size() + 1; }
  std::size_t pad_index() const { return kPadIndex; }
  const std::string& chars() const { return chars_; }

  bool contains(char c) const;
  // Throws EncodingError for characters outside the alphabet.
  std::size_t index_of(char c) const;
  // Throws EncodingError for the padding row or an out-of-range row.
  char char_at(std::size_t index) const;

  bool operator==(const Alphabet& other) const { return chars_ == other.chars_; }

 private:
  std::string chars_;
  int lookup_[256];
};

// An |A| x L matrix whose columns are distributions over the alphabet.
// Storage is position-major: value(symbol, pos) lives at pos * |A| + symbol.
class CharGrid {
 public:
  CharGrid() = default;
  CharGrid(std::size_t alphabet_size, std::size_t length_capacity);
  CharGrid(std::size_t alphabet_size, std::size_t length_capacity, std::vector<double> values);

  std::size_t alphabet_size() const { return alphabet_size_; }
  std::size_t length_capacity() const { return length_capacity_; }

  double at(std::size_t symbol, std::size_t pos) const {
    return values_[pos * alphabet_size_ + symbol];
  }
  double& at(std::size_t symbol, std::size_t pos) { return values_[pos * alphabet_size_ + symbol]; }

  std::span<const double> column(std::size_t pos) const {
    return {values_.data() + pos * alphabet_size_, alphabet_size_};
  }
  const std::vector<double>& values() const { return values_; }

  // Every column sums to one within `tol` and has entries in [0, 1].
  bool is_column_stochastic(double tol = 1e-6) const;
  bool is_one_hot() const;

  bool operator==(const CharGrid& other) const = default;

 private:
  std::size_t alphabet_size_ = 0;
  std::size_t length_capacity_ = 0;
  std::vector<double> values_;
};

CharGrid encode_one_hot(std::string_view word, const Alphabet& alphabet, std::size_t length_capacity);

// Per-column argmax (lowest row wins ties) with padding rows dropped.
std::string decode_greedy(const CharGrid& grid, const Alphabet& alphabet);

// Levenshtein distance with unit insertion, deletion and substitution costs.
std::size_t edit_distance(std::string_view a, std::string_view b);

struct SampleRow {
  std::size_t index = 0;
  std::string gt;
  std::string pred;
  std::size_t ed = 0;
};

struct MetricsReport {
  std::string dataset_id;
  std::size_t n_samples = 0;
  double accuracy = 0.0;
  double ned = 0.0;
  std::size_t ted = 0;
  std::vector<SampleRow> rows;
};

// Acc is the exact-match fraction, TED the summed edit distance, and NED the
// mean of 1 - ED / max(|pred|, |gt|, 1).
MetricsReport evaluate_set(std::span<const std::string> preds, std::span<const std::string> gts);

}  // namespace feds
