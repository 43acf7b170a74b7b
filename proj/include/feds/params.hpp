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
#include <vector>

#include "feds/autodiff.hpp"

namespace feds {

// Named parameter tensors in insertion order. Updating a parameter swaps in a
// fresh leaf node; graph nodes built from the old value are unaffected.
class ParamStore {
 public:
  struct Entry {
    std::string name;
    ad::Var var;
  };

  void add(const std::string& name, ad::Shape shape, std::vector<double> values);
  // Uniform in +-gain * sqrt(1/fan_in).
  void add_uniform(const std::string& name, ad::Shape shape, std::size_t fan_in, std::mt19937_64& rng,
                   double gain = 1.0);

  bool contains(const std::string& name) const;
  const ad::Var& get(const std::string& name) const;
  // Replaces the values of an existing parameter; the shape must not change.
  void set(const std::string& name, std::vector<double> values);

  const std::vector<Entry>& entries() const { return entries_; }
  std::vector<ad::Var> vars() const;
  std::size_t size() const { return entries_.size(); }
  std::size_t scalar_count() const;

  std::uint64_t iteration() const { return iteration_; }
  void set_iteration(std::uint64_t it) { iteration_ = it; }
  void bump_iteration() { ++iteration_; }

  // Bitwise equality of names, shapes and values.
  bool same_values(const ParamStore& other) const;

 private:
  std::size_t index_of(const std::string& name) const;

  std::vector<Entry> entries_;
  std::uint64_t iteration_ = 0;
};

// Checkpoint header. Recognizer checkpoints store embedding_dim = 0.
struct CheckpointHeader {
  static constexpr std::uint32_t kVersion = 1;
  std::uint32_t version = kVersion;
  std::uint32_t alphabet_size = 0;
  std::uint32_t length_capacity = 0;
  std::uint32_t embedding_dim = 0;
};

// Binary layout, all integers little-endian:
//   "FEDS" | u32 version | u32 |A| | u32 L | u32 embedding_dim | u32 count
//   count x ( u32 name_len | name bytes | u32 ndim | ndim x u64 dim |
//             prod(dims) x f64 )
void save_checkpoint(const std::filesystem::path& path, const CheckpointHeader& header, const ParamStore& params);
ParamStore load_checkpoint(const std::filesystem::path& path, CheckpointHeader* header = nullptr);

}  // namespace feds
