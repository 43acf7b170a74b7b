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

#include "feds/text_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "feds/errors.hpp"

namespace feds {

Alphabet::Alphabet(std::string chars) : chars_(std::move(chars)) {
  std::fill(std::begin(lookup_), std::end(lookup_), -1);
  if (chars_.empty()) throw ConfigError("alphabet needs at least one non-padding symbol");
  for (std::size_t i = 0; i < chars_.size(); ++i) {
    auto slot = static_cast<unsigned char>(chars_[i]);
    if (lookup_[slot] != -1) throw ConfigError(std::string("duplicate alphabet symbol '") + chars_[i] + "'");
    lookup_[slot] = static_cast<int>(i + 1);
  }
}

Alphabet Alphabet::default_alphabet() { return Alphabet("abcdefghijklmnopqrstuvwxyz0123456789"); }

bool Alphabet::contains(char c) const { return lookup_[static_cast<unsigned char>(c)] != -1; }

std::size_t Alphabet::index_of(char c) const {
  int idx = lookup_[static_cast<unsigned char>(c)];
  if (idx < 0) throw EncodingError(std::string("character '") + c + "' is not in the alphabet");
  return static_cast<std::size_t>(idx);
}

char Alphabet::char_at(std::size_t index) const {
  if (index == kPadIndex || index >= size()) {
    throw EncodingError("row " + std::to_string(index) + " has no character");
  }
  return chars_[index - 1];
}

CharGrid::CharGrid(std::size_t alphabet_size, std::size_t length_capacity)
    : alphabet_size_(alphabet_size),
      length_capacity_(length_capacity),
      values_(alphabet_size * length_capacity, 0.0) {}

CharGrid::CharGrid(std::size_t alphabet_size, std::size_t length_capacity, std::vector<double> values)
    : alphabet_size_(alphabet_size), length_capacity_(length_capacity), values_(std::move(values)) {
  if (values_.size() != alphabet_size_ * length_capacity_) {
    throw ShapeError("grid values do not match |A| x L");
  }
}

bool CharGrid::is_column_stochastic(double tol) const {
  for (std::size_t p = 0; p < length_capacity_; ++p) {
    auto col = column(p);
    double sum = 0.0;
    for (double v : col) {
      if (!(v >= -tol && v <= 1.0 + tol)) return false;
      sum += v;
    }
    if (std::abs(sum - 1.0) > tol) return false;
  }
  return true;
}

bool CharGrid::is_one_hot() const {
  for (std::size_t p = 0; p < length_capacity_; ++p) {
    std::size_t ones = 0;
    for (double v : column(p)) {
      if (v == 1.0) {
        ++ones;
      } else if (v != 0.0) {
        return false;
      }
    }
    if (ones != 1) return false;
  }
  return true;
}

CharGrid encode_one_hot(std::string_view word, const Alphabet& alphabet, std::size_t length_capacity) {
  if (word.size() > length_capacity) {
    throw CapacityError("word of length " + std::to_string(word.size()) + " exceeds capacity " +
                        std::to_string(length_capacity));
  }
  CharGrid grid(alphabet.size(), length_capacity);
  for (std::size_t p = 0; p < length_capacity; ++p) {
    std::size_t row = p < word.size() ? alphabet.index_of(word[p]) : alphabet.pad_index();
    grid.at(row, p) = 1.0;
  }
  return grid;
}

std::string decode_greedy(const CharGrid& grid, const Alphabet& alphabet) {
  if (grid.alphabet_size() != alphabet.size()) throw ConfigError("grid rows do not match alphabet size");
  std::string out;
  for (std::size_t p = 0; p < grid.length_capacity(); ++p) {
    auto col = grid.column(p);
    // max_element returns the first maximum, which is the lowest row.
    auto row = static_cast<std::size_t>(std::max_element(col.begin(), col.end()) - col.begin());
    if (row != alphabet.pad_index()) out.push_back(alphabet.char_at(row));
  }
  return out;
}

std::size_t edit_distance(std::string_view a, std::string_view b) {
  if (a.size() < b.size()) std::swap(a, b);
  std::vector<std::size_t> row(b.size() + 1);
  std::iota(row.begin(), row.end(), std::size_t{0});
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      std::size_t up = row[j];
      std::size_t sub = diag + (a[i - 1] == b[j - 1] ? 0 : 1);
      row[j] = std::min({up + 1, row[j - 1] + 1, sub});
      diag = up;
    }
  }
  return row[b.size()];
}

MetricsReport evaluate_set(std::span<const std::string> preds, std::span<const std::string> gts) {
  if (preds.size() != gts.size()) {
    throw InputError("prediction count " + std::to_string(preds.size()) + " != ground truth count " +
                     std::to_string(gts.size()));
  }
  if (preds.empty()) throw InputError("cannot evaluate an empty set");

  MetricsReport report;
  report.n_samples = preds.size();
  report.rows.reserve(preds.size());
  std::size_t exact = 0;
  double ned_sum = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    std::size_t ed = edit_distance(preds[i], gts[i]);
    std::size_t denom = std::max<std::size_t>({preds[i].size(), gts[i].size(), 1});
    if (ed == 0) ++exact;
    ned_sum += 1.0 - static_cast<double>(ed) / static_cast<double>(denom);
    report.ted += ed;
    report.rows.push_back({i, gts[i], preds[i], ed});
  }
  report.accuracy = static_cast<double>(exact) / static_cast<double>(preds.size());
  report.ned = ned_sum / static_cast<double>(preds.size());
  return report;
}

}  // namespace feds
