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

#include "feds/synth_data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "feds/errors.hpp"

namespace feds {

namespace {

constexpr std::uint64_t kGlyphStream = 0x676c797068ULL;
constexpr std::uint64_t kSampleStream = 1;

double quantize(double v) { return std::round(std::clamp(v, 0.0, 1.0) * 255.0) / 255.0; }

}  // namespace

void DatasetConfig::validate() const {
  if (length_capacity == 0 || height == 0 || glyph_width == 0) throw ConfigError("dataset dimensions must be positive");
  if (width < length_capacity * glyph_width) throw ConfigError("image width must be at least L * glyph_width");
  if (!(noise_std >= 0.0)) throw ConfigError("noise_std must be non-negative");
  if (corpus_size == 0) throw ConfigError("corpus_size must be positive");
}

GlyphBank::GlyphBank(const DatasetConfig& cfg) {
  cfg.validate();
  auto rng = sample_rng(cfg.seed, 0, kGlyphStream);
  std::bernoulli_distribution bit(0.5);
  std::set<std::vector<double>> seen;
  glyphs_.resize(cfg.alphabet.size());
  glyphs_[cfg.alphabet.pad_index()] = std::vector<double>(cfg.height * cfg.glyph_width, 0.0);
  seen.insert(glyphs_[cfg.alphabet.pad_index()]);
  for (std::size_t s = 1; s < cfg.alphabet.size(); ++s) {
    std::vector<double> g(cfg.height * cfg.glyph_width);
    do {
      for (double& v : g) v = bit(rng) ? 1.0 : 0.0;
    } while (!seen.insert(g).second);
    glyphs_[s] = std::move(g);
  }
}

WordImage compose_glyphs(std::string_view word, const DatasetConfig& cfg, const GlyphBank& glyphs, int shift) {
  if (word.size() > cfg.length_capacity) {
    throw CapacityError("word of length " + std::to_string(word.size()) + " exceeds capacity " +
                        std::to_string(cfg.length_capacity));
  }
  WordImage img;
  img.height = cfg.height;
  img.width = cfg.width;
  img.pixels.assign(cfg.height * cfg.width, 0.0);
  img.label = std::string(word);
  for (std::size_t i = 0; i < word.size(); ++i) {
    const auto& g = glyphs.glyph(cfg.alphabet.index_of(word[i]));
    for (std::size_t c = 0; c < cfg.glyph_width; ++c) {
      auto col = static_cast<long>(i * cfg.glyph_width + c) + shift;
      if (col < 0 || col >= static_cast<long>(cfg.width)) continue;
      for (std::size_t r = 0; r < cfg.height; ++r) {
        img.pixels[r * cfg.width + static_cast<std::size_t>(col)] = g[r * cfg.glyph_width + c];
      }
    }
  }
  return img;
}

WordImage render_word(std::string_view word, const DatasetConfig& cfg, const GlyphBank& glyphs, std::mt19937_64& rng) {
  auto range = static_cast<int>(cfg.shift_range);
  std::uniform_int_distribution<int> shift_dist(-range, range);
  int shift = shift_dist(rng);
  WordImage img = compose_glyphs(word, cfg, glyphs, shift);
  if (cfg.noise_std > 0.0) {
    std::normal_distribution<double> noise(0.0, cfg.noise_std);
    for (double& p : img.pixels) p += noise(rng);
  }
  for (double& p : img.pixels) p = quantize(p);
  return img;
}

WordImage render_word(std::string_view word, const DatasetConfig& cfg, std::mt19937_64& rng) {
  return render_word(word, cfg, GlyphBank(cfg), rng);
}

const std::vector<std::size_t>& Corpus::split(std::string_view name) const {
  if (name == "train") return train;
  if (name == "val") return val;
  if (name == "test") return test;
  throw InputError("unknown split '" + std::string(name) + "' (expected train, val or test)");
}

void assign_splits(Corpus& corpus) {
  std::size_t n = corpus.samples.size();
  std::size_t n_train = n * 8 / 10;
  std::size_t n_val = n / 10;
  corpus.train.clear();
  corpus.val.clear();
  corpus.test.clear();
  for (std::size_t i = 0; i < n; ++i) {
    if (i < n_train) {
      corpus.train.push_back(i);
    } else if (i < n_train + n_val) {
      corpus.val.push_back(i);
    } else {
      corpus.test.push_back(i);
    }
  }
}

std::mt19937_64 sample_rng(std::uint64_t seed, std::uint64_t index, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return std::mt19937_64(seq);
}

std::string sample_word(const DatasetConfig& cfg, std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> len_dist(1, cfg.length_capacity);
  std::uniform_int_distribution<std::size_t> char_dist(0, cfg.alphabet.chars().size() - 1);
  std::size_t len = len_dist(rng);
  std::string word(len, '\0');
  for (char& c : word) c = cfg.alphabet.chars()[char_dist(rng)];
  return word;
}

Corpus sample_corpus(const DatasetConfig& cfg) {
  cfg.validate();
  GlyphBank glyphs(cfg);
  Corpus corpus;
  corpus.config = cfg;
  corpus.samples.reserve(cfg.corpus_size);
  for (std::size_t i = 0; i < cfg.corpus_size; ++i) {
    auto rng = sample_rng(cfg.seed, i, kSampleStream);
    std::string word = sample_word(cfg, rng);
    corpus.samples.push_back(render_word(word, cfg, glyphs, rng));
  }
  assign_splits(corpus);
  return corpus;
}

PairSample random_pair_with_edits(const DatasetConfig& cfg, std::size_t k, std::mt19937_64& rng) {
  const std::string& chars = cfg.alphabet.chars();
  std::uniform_int_distribution<std::size_t> char_dist(0, chars.size() - 1);
  std::string base = sample_word(cfg, rng);
  std::string edited = base;
  for (std::size_t step = 0; step < k; ++step) {
    // 0 = substitute, 1 = insert, 2 = delete; restricted to edits that fit.
    std::vector<int> kinds;
    if (!edited.empty() && chars.size() > 1) kinds.push_back(0);
    if (edited.size() < cfg.length_capacity) kinds.push_back(1);
    if (!edited.empty()) kinds.push_back(2);
    if (kinds.empty()) break;
    int kind = kinds[std::uniform_int_distribution<std::size_t>(0, kinds.size() - 1)(rng)];
    if (kind == 0) {
      std::size_t pos = std::uniform_int_distribution<std::size_t>(0, edited.size() - 1)(rng);
      char c;
      do {
        c = chars[char_dist(rng)];
      } while (c == edited[pos]);
      edited[pos] = c;
    } else if (kind == 1) {
      std::size_t pos = std::uniform_int_distribution<std::size_t>(0, edited.size())(rng);
      edited.insert(edited.begin() + static_cast<std::ptrdiff_t>(pos), chars[char_dist(rng)]);
    } else {
      std::size_t pos = std::uniform_int_distribution<std::size_t>(0, edited.size() - 1)(rng);
      edited.erase(edited.begin() + static_cast<std::ptrdiff_t>(pos));
    }
  }
  PairSample out;
  out.grid_a = encode_one_hot(edited, cfg.alphabet, cfg.length_capacity);
  out.grid_b = encode_one_hot(base, cfg.alphabet, cfg.length_capacity);
  out.ed = edit_distance(edited, base);
  out.edits_applied = k;
  return out;
}

PairSample random_pair_generator(const DatasetConfig& cfg, std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> k_dist(0, cfg.length_capacity / 2);
  return random_pair_with_edits(cfg, k_dist(rng), rng);
}

void write_pgm(const std::filesystem::path& path, const WordImage& image) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << "P5\n" << image.width << ' ' << image.height << "\n255\n";
  std::string bytes(image.pixels.size(), '\0');
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    bytes[i] = static_cast<char>(static_cast<unsigned char>(std::lround(std::clamp(image.pixels[i], 0.0, 1.0) * 255.0)));
  }
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing " + path.string());
}

WordImage read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::string magic;
  std::size_t w = 0, h = 0, maxval = 0;
  in >> magic >> w >> h >> maxval;
  if (magic != "P5" || maxval != 255 || w == 0 || h == 0) throw IoError(path.string() + " is not an 8-bit P5 graymap");
  in.get();
  std::string bytes(w * h, '\0');
  if (!in.read(bytes.data(), static_cast<std::streamsize>(bytes.size()))) throw IoError("truncated " + path.string());
  WordImage img;
  img.width = w;
  img.height = h;
  img.pixels.resize(w * h);
  for (std::size_t i = 0; i < bytes.size(); ++i) img.pixels[i] = static_cast<unsigned char>(bytes[i]) / 255.0;
  return img;
}

namespace {

std::string image_name(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%06zu.pgm", index);
  return buf;
}

}  // namespace

void write_dataset(const std::filesystem::path& dir, const Corpus& corpus) {
  namespace fs = std::filesystem;
  fs::create_directories(dir / "images");
  std::ofstream labels(dir / "labels.tsv", std::ios::binary | std::ios::trunc);
  if (!labels) throw IoError("cannot write " + (dir / "labels.tsv").string());
  labels << "index\tfilename\ttranscription\n";
  for (std::size_t i = 0; i < corpus.samples.size(); ++i) {
    std::string name = image_name(i);
    write_pgm(dir / "images" / name, corpus.samples[i]);
    labels << i << '\t' << "images/" << name << '\t' << corpus.samples[i].label << '\n';
  }

  const auto& c = corpus.config;
  nlohmann::ordered_json meta;
  meta["alphabet"] = c.alphabet.chars();
  meta["length_capacity"] = c.length_capacity;
  meta["height"] = c.height;
  meta["glyph_width"] = c.glyph_width;
  meta["width"] = c.width;
  meta["corpus_size"] = c.corpus_size;
  meta["noise_std"] = c.noise_std;
  meta["shift_range"] = c.shift_range;
  meta["seed"] = c.seed;
  meta["splits"] = {{"train", corpus.train}, {"val", corpus.val}, {"test", corpus.test}};
  std::ofstream out(dir / "dataset.json", std::ios::binary | std::ios::trunc);
  out << meta.dump(2) << '\n';
  if (!out) throw IoError("cannot write " + (dir / "dataset.json").string());
}

Corpus read_dataset(const std::filesystem::path& dir) {
  std::ifstream meta_in(dir / "dataset.json");
  if (!meta_in) throw IoError("missing " + (dir / "dataset.json").string());
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(meta_in);
  } catch (const nlohmann::json::exception& e) {
    throw IoError("malformed dataset.json: " + std::string(e.what()));
  }

  Corpus corpus;
  auto& c = corpus.config;
  try {
    c.alphabet = Alphabet(meta.at("alphabet").get<std::string>());
    c.length_capacity = meta.at("length_capacity").get<std::size_t>();
    c.height = meta.at("height").get<std::size_t>();
    c.glyph_width = meta.at("glyph_width").get<std::size_t>();
    c.width = meta.at("width").get<std::size_t>();
    c.corpus_size = meta.at("corpus_size").get<std::size_t>();
    c.noise_std = meta.at("noise_std").get<double>();
    c.shift_range = meta.at("shift_range").get<std::size_t>();
    c.seed = meta.at("seed").get<std::uint64_t>();
    corpus.train = meta.at("splits").at("train").get<std::vector<std::size_t>>();
    corpus.val = meta.at("splits").at("val").get<std::vector<std::size_t>>();
    corpus.test = meta.at("splits").at("test").get<std::vector<std::size_t>>();
  } catch (const nlohmann::json::exception& e) {
    throw IoError("malformed dataset.json: " + std::string(e.what()));
  }

  std::ifstream labels(dir / "labels.tsv");
  if (!labels) throw IoError("missing " + (dir / "labels.tsv").string());
  std::string line;
  std::getline(labels, line);  // header
  while (std::getline(labels, line)) {
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string index, file, text;
    std::getline(fields, index, '\t');
    std::getline(fields, file, '\t');
    std::getline(fields, text);
    if (std::stoul(index) != corpus.samples.size()) throw IoError("labels.tsv indices are not consecutive");
    WordImage img = read_pgm(dir / file);
    if (img.height != c.height || img.width != c.width) throw IoError(file + " does not match dataset dimensions");
    for (char ch : text) c.alphabet.index_of(ch);
    img.label = text;
    corpus.samples.push_back(std::move(img));
  }
  if (corpus.samples.size() != c.corpus_size) throw IoError("labels.tsv does not list corpus_size samples");
  for (const auto* split : {&corpus.train, &corpus.val, &corpus.test})
    for (std::size_t i : *split)
      if (i >= corpus.samples.size()) throw IoError("split index out of range");
  return corpus;
}

}  // namespace feds
