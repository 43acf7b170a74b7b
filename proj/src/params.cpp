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

#include "feds/params.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include "feds/errors.hpp"

namespace feds {

void ParamStore::add(const std::string& name, ad::Shape shape, std::vector<double> values) {
  if (contains(name)) throw ConfigError("duplicate parameter name '" + name + "'");
  entries_.push_back({name, ad::parameter(shape, std::move(values))});
}

void ParamStore::add_uniform(const std::string& name, ad::Shape shape, std::size_t fan_in, std::mt19937_64& rng,
                             double gain) {
  double bound = gain * std::sqrt(1.0 / static_cast<double>(fan_in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  std::vector<double> values(shape.size());
  for (double& v : values) v = dist(rng);
  add(name, shape, std::move(values));
}

bool ParamStore::contains(const std::string& name) const {
  for (const auto& e : entries_)
    if (e.name == name) return true;
  return false;
}

std::size_t ParamStore::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < entries_.size(); ++i)
    if (entries_[i].name == name) return i;
  throw ConfigError("unknown parameter '" + name + "'");
}

const ad::Var& ParamStore::get(const std::string& name) const { return entries_[index_of(name)].var; }

void ParamStore::set(const std::string& name, std::vector<double> values) {
  auto& entry = entries_[index_of(name)];
  if (values.size() != entry.var.size()) throw ShapeError("parameter '" + name + "' changed size");
  entry.var = ad::parameter(entry.var.shape(), std::move(values));
}

std::vector<ad::Var> ParamStore::vars() const {
  std::vector<ad::Var> out;
  out.reserve(entries_.size());
  for (const auto& e : entries_) out.push_back(e.var);
  return out;
}

std::size_t ParamStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.var.size();
  return n;
}

bool ParamStore::same_values(const ParamStore& other) const {
  if (entries_.size() != other.entries_.size()) return false;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const auto& a = entries_[i];
    const auto& b = other.entries_[i];
    if (a.name != b.name || a.var.shape() != b.var.shape()) return false;
    if (std::memcmp(a.var.value().data(), b.var.value().data(), a.var.size() * sizeof(double)) != 0) return false;
  }
  return true;
}

namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint IO assumes a little-endian host");

template <typename T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T take(std::istream& in, const std::filesystem::path& path) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(T))) throw IoError("truncated checkpoint " + path.string());
  return v;
}

constexpr char kMagic[4] = {'F', 'E', 'D', 'S'};

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const CheckpointHeader& header, const ParamStore& params) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(kMagic, 4);
  put<std::uint32_t>(out, header.version);
  put<std::uint32_t>(out, header.alphabet_size);
  put<std::uint32_t>(out, header.length_capacity);
  put<std::uint32_t>(out, header.embedding_dim);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(params.size()));
  for (const auto& e : params.entries()) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(e.name.size()));
    out.write(e.name.data(), static_cast<std::streamsize>(e.name.size()));
    put<std::uint32_t>(out, 2);
    put<std::uint64_t>(out, e.var.rows());
    put<std::uint64_t>(out, e.var.cols());
    out.write(reinterpret_cast<const char*>(e.var.value().data()),
              static_cast<std::streamsize>(e.var.size() * sizeof(double)));
  }
  if (!out) throw IoError("failed writing " + path.string());
}

ParamStore load_checkpoint(const std::filesystem::path& path, CheckpointHeader* header) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) {
    throw IoError(path.string() + " is not a FEDS checkpoint");
  }
  CheckpointHeader h;
  h.version = take<std::uint32_t>(in, path);
  if (h.version != CheckpointHeader::kVersion) {
    throw IoError("unsupported checkpoint version " + std::to_string(h.version));
  }
  h.alphabet_size = take<std::uint32_t>(in, path);
  h.length_capacity = take<std::uint32_t>(in, path);
  h.embedding_dim = take<std::uint32_t>(in, path);
  auto count = take<std::uint32_t>(in, path);

  ParamStore store;
  for (std::uint32_t t = 0; t < count; ++t) {
    auto name_len = take<std::uint32_t>(in, path);
    std::string name(name_len, '\0');
    if (!in.read(name.data(), name_len)) throw IoError("truncated checkpoint " + path.string());
    auto ndim = take<std::uint32_t>(in, path);
    if (ndim == 0 || ndim > 2) throw IoError("tensor '" + name + "' has unsupported rank");
    std::vector<std::uint64_t> dims(ndim);
    for (auto& d : dims) d = take<std::uint64_t>(in, path);
    ad::Shape shape = ndim == 1 ? ad::Shape{1, dims[0]} : ad::Shape{dims[0], dims[1]};
    std::vector<double> values(shape.size());
    if (!in.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(values.size() * sizeof(double)))) {
      throw IoError("truncated checkpoint " + path.string());
    }
    store.add(name, shape, std::move(values));
  }
  if (header) *header = h;
  return store;
}

}  // namespace feds
