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

#include "feds/recognizer.hpp"

#include <random>

#include "feds/errors.hpp"
#include "feds/surrogate.hpp"

namespace feds {

RecognizerConfig RecognizerConfig::for_dataset(const DatasetConfig& data, std::uint64_t seed) {
  RecognizerConfig cfg;
  cfg.alphabet_size = data.alphabet.size();
  cfg.length_capacity = data.length_capacity;
  cfg.height = data.height;
  cfg.glyph_width = data.glyph_width;
  cfg.seed = seed;
  if (data.width != cfg.width()) throw ConfigError("recognizer expects image width L * glyph_width");
  return cfg;
}

RecognizerNet::RecognizerNet(const RecognizerConfig& cfg) : cfg_(cfg) {
  if (cfg.alphabet_size < 2 || cfg.length_capacity == 0 || cfg.height == 0 || cfg.glyph_width == 0 ||
      cfg.channels == 0 || cfg.kernel % 2 == 0) {
    throw ConfigError("invalid recognizer configuration");
  }
  std::mt19937_64 rng(cfg.seed ^ 0x5eedULL);
  std::size_t fan0 = cfg.kernel * cfg.height;
  std::size_t fan1 = cfg.kernel * cfg.channels;
  params_.add_uniform("conv0.weight", {fan0, cfg.channels}, fan0, rng);
  params_.add_uniform("conv0.bias", {1, cfg.channels}, fan0, rng);
  params_.add_uniform("conv1.weight", {fan1, cfg.channels}, fan1, rng);
  params_.add_uniform("conv1.bias", {1, cfg.channels}, fan1, rng);
  params_.add_uniform("head.weight", {cfg.channels, cfg.alphabet_size}, cfg.channels, rng);
  params_.add_uniform("head.bias", {1, cfg.alphabet_size}, cfg.channels, rng);
  // Geometry that cannot be inferred from tensor shapes.
  params_.add("meta.geometry", {1, 2},
              {static_cast<double>(cfg.length_capacity), static_cast<double>(cfg.glyph_width)});
}

RecognizerNet::RecognizerNet(const RecognizerConfig& cfg, ParamStore params) : RecognizerNet(cfg) {
  for (const auto& e : params_.entries()) {
    if (!params.contains(e.name) || params.get(e.name).shape() != e.var.shape()) {
      throw ConfigError("recognizer parameters do not match configuration at '" + e.name + "'");
    }
  }
  if (params.size() != params_.size()) throw ConfigError("recognizer checkpoint has extra tensors");
  params_ = std::move(params);
}

ad::Var RecognizerNet::columns(std::span<const WordImage* const> images) const {
  if (images.empty()) throw InputError("empty image batch");
  const std::size_t w = cfg_.width(), h = cfg_.height;
  std::vector<double> rows(images.size() * w * h);
  for (std::size_t b = 0; b < images.size(); ++b) {
    const WordImage& img = *images[b];
    if (img.height != h || img.width != w) {
      throw ConfigError("image " + std::to_string(img.height) + "x" + std::to_string(img.width) +
                        " does not match recognizer " + std::to_string(h) + "x" + std::to_string(w));
    }
    for (std::size_t col = 0; col < w; ++col)
      for (std::size_t r = 0; r < h; ++r) rows[(b * w + col) * h + r] = img.pixels[r * w + col];
  }
  return ad::constant({images.size() * w, h}, std::move(rows));
}

ad::Var RecognizerNet::forward(std::span<const WordImage* const> images) const {
  const std::size_t pad = cfg_.kernel / 2;
  const std::size_t w = cfg_.width();
  ad::Var x = columns(images);
  x = ad::leaky_relu(ad::conv1d(x, params_.get("conv0.weight"), params_.get("conv0.bias"), w, cfg_.kernel, pad),
                     cfg_.slope);
  x = ad::leaky_relu(ad::conv1d(x, params_.get("conv1.weight"), params_.get("conv1.bias"), w, cfg_.kernel, pad),
                     cfg_.slope);
  x = ad::scale(ad::group_sum(x, cfg_.glyph_width), 1.0 / static_cast<double>(cfg_.glyph_width));
  return ad::softmax_rows(ad::linear(x, params_.get("head.weight"), params_.get("head.bias")));
}

void RecognizerNet::save(const std::filesystem::path& path) const {
  CheckpointHeader h;
  h.alphabet_size = static_cast<std::uint32_t>(cfg_.alphabet_size);
  h.length_capacity = static_cast<std::uint32_t>(cfg_.length_capacity);
  h.embedding_dim = 0;
  save_checkpoint(path, h, params_);
}

RecognizerNet RecognizerNet::load(const std::filesystem::path& path) {
  CheckpointHeader h;
  ParamStore params = load_checkpoint(path, &h);
  if (h.embedding_dim != 0 || !params.contains("meta.geometry")) {
    throw ConfigError(path.string() + " is not a recognizer checkpoint");
  }
  RecognizerConfig cfg;
  cfg.alphabet_size = h.alphabet_size;
  cfg.length_capacity = h.length_capacity;
  cfg.glyph_width = static_cast<std::size_t>(params.get("meta.geometry").value()[1]);
  const auto& w0 = params.get("conv0.weight").shape();
  cfg.channels = w0.cols;
  cfg.kernel = params.get("conv1.weight").rows() / cfg.channels;
  cfg.height = w0.rows / cfg.kernel;
  return RecognizerNet(cfg, std::move(params));
}

CharGrid recognize(const WordImage& image, const RecognizerNet& net) {
  ad::NoGradGuard no_grad;
  const WordImage* ptr = &image;
  ad::Var rows = net.forward(std::span<const WordImage* const>(&ptr, 1));
  return rows_to_grid(rows, 0, net.config().length_capacity);
}

ad::Var ce_loss_rows(const ad::Var& z_rows, const ad::Var& y_rows, std::size_t length_capacity) {
  if (z_rows.shape() != y_rows.shape()) {
    throw InputError("ce_loss: shape mismatch " + ad::to_string(z_rows.shape()) + " vs " +
                     ad::to_string(y_rows.shape()));
  }
  if (length_capacity == 0 || z_rows.rows() % length_capacity != 0) throw InputError("ce_loss: bad length capacity");
  double batch = static_cast<double>(z_rows.rows() / length_capacity);
  double norm = batch * static_cast<double>(length_capacity) * static_cast<double>(z_rows.cols());
  return ad::scale(ad::sum(ad::mul(y_rows, ad::log_clamped(z_rows, 1e-12))), -1.0 / norm);
}

ad::Var ce_loss(const ad::Var& z_hat, const CharGrid& y_hat) {
  return ce_loss_rows(z_hat, grids_to_rows(std::span<const CharGrid>(&y_hat, 1)), y_hat.length_capacity());
}

std::vector<std::string> predict(const RecognizerNet& net, const Corpus& corpus, std::span<const std::size_t> indices,
                                 std::size_t batch_size) {
  ad::NoGradGuard no_grad;
  const std::size_t length = net.config().length_capacity;
  std::vector<std::string> out;
  out.reserve(indices.size());
  for (std::size_t start = 0; start < indices.size(); start += batch_size) {
    std::size_t end = std::min(indices.size(), start + batch_size);
    std::vector<const WordImage*> batch;
    for (std::size_t i = start; i < end; ++i) batch.push_back(&corpus.samples.at(indices[i]));
    ad::Var rows = net.forward(batch);
    for (std::size_t b = 0; b < batch.size(); ++b) {
      out.push_back(decode_greedy(rows_to_grid(rows, b, length), corpus.config.alphabet));
    }
  }
  return out;
}

}  // namespace feds
