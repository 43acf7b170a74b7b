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

#include "feds/surrogate.hpp"

#include <random>
#include <string>

#include "feds/errors.hpp"

namespace feds {

namespace {

constexpr double kNormEps = 1e-12;

std::string conv_name(std::size_t i, const char* what) { return "conv" + std::to_string(i) + "." + what; }

}  // namespace

SurrogateConfig SurrogateConfig::full_scale(std::size_t alphabet_size, std::size_t length_capacity) {
  SurrogateConfig cfg;
  cfg.alphabet_size = alphabet_size;
  cfg.length_capacity = length_capacity;
  cfg.embedding_dim = 1024;
  return cfg;
}

void SurrogateLossWeights::validate() const {
  if (!(w1 > 0.0)) throw ConfigError("surrogate loss weight w1 must be positive");
  if (!(w2 >= 0.0)) throw ConfigError("surrogate loss weight w2 must be non-negative");
}

SurrogateNet::SurrogateNet(const SurrogateConfig& cfg) : cfg_(cfg) {
  if (cfg.alphabet_size < 2 || cfg.length_capacity == 0 || cfg.embedding_dim == 0 || cfg.conv_layers == 0 ||
      cfg.kernel % 2 == 0) {
    throw ConfigError("invalid surrogate configuration");
  }
  std::mt19937_64 rng(cfg.seed);
  std::size_t in = cfg.alphabet_size;
  for (std::size_t i = 0; i < cfg.conv_layers; ++i) {
    std::size_t fan_in = cfg.kernel * in;
    params_.add_uniform(conv_name(i, "weight"), {fan_in, cfg.conv_channels}, fan_in, rng, cfg.init_gain);
    params_.add_uniform(conv_name(i, "bias"), {1, cfg.conv_channels}, fan_in, rng);
    in = cfg.conv_channels;
  }
  params_.add_uniform("fc0.weight", {in, cfg.fc_hidden}, in, rng, cfg.init_gain);
  params_.add_uniform("fc0.bias", {1, cfg.fc_hidden}, in, rng);
  params_.add_uniform("fc1.weight", {cfg.fc_hidden, cfg.embedding_dim}, cfg.fc_hidden, rng, cfg.init_gain);
  params_.add_uniform("fc1.bias", {1, cfg.embedding_dim}, cfg.fc_hidden, rng);
}

SurrogateNet::SurrogateNet(const SurrogateConfig& cfg, ParamStore params) : SurrogateNet(cfg) {
  for (const auto& e : params_.entries()) {
    if (!params.contains(e.name) || params.get(e.name).shape() != e.var.shape()) {
      throw ConfigError("surrogate parameters do not match configuration at '" + e.name + "'");
    }
  }
  if (params.size() != params_.size()) throw ConfigError("surrogate checkpoint has extra tensors");
  params_ = std::move(params);
}

void SurrogateNet::check_rows(const ad::Var& rows) const {
  if (rows.cols() != cfg_.alphabet_size || rows.rows() == 0 || rows.rows() % cfg_.length_capacity != 0) {
    throw ConfigError("grid batch " + ad::to_string(rows.shape()) + " does not match |A|=" +
                      std::to_string(cfg_.alphabet_size) + ", L=" + std::to_string(cfg_.length_capacity));
  }
}

ad::Var SurrogateNet::embed_rows(const ad::Var& rows, bool frozen) const {
  check_rows(rows);
  auto p = [&](const std::string& name) {
    const ad::Var& v = params_.get(name);
    return frozen ? ad::constant(v.shape(), v.value()) : v;
  };
  const std::size_t pad = cfg_.kernel / 2;
  ad::Var h = rows;
  for (std::size_t i = 0; i < cfg_.conv_layers; ++i) {
    h = ad::leaky_relu(
        ad::conv1d(h, p(conv_name(i, "weight")), p(conv_name(i, "bias")), cfg_.length_capacity, cfg_.kernel, pad),
        cfg_.slope);
  }
  h = ad::scale(ad::group_sum(h, cfg_.length_capacity), 1.0 / static_cast<double>(cfg_.length_capacity));
  h = ad::leaky_relu(ad::linear(h, p("fc0.weight"), p("fc0.bias")), cfg_.slope);
  return ad::linear(h, p("fc1.weight"), p("fc1.bias"));
}

void SurrogateNet::save(const std::filesystem::path& path) const {
  CheckpointHeader h;
  h.alphabet_size = static_cast<std::uint32_t>(cfg_.alphabet_size);
  h.length_capacity = static_cast<std::uint32_t>(cfg_.length_capacity);
  h.embedding_dim = static_cast<std::uint32_t>(cfg_.embedding_dim);
  save_checkpoint(path, h, params_);
}

SurrogateNet SurrogateNet::load(const std::filesystem::path& path) {
  CheckpointHeader h;
  ParamStore params = load_checkpoint(path, &h);
  if (h.embedding_dim == 0) throw ConfigError(path.string() + " is not a surrogate checkpoint");
  SurrogateConfig cfg;
  cfg.alphabet_size = h.alphabet_size;
  cfg.length_capacity = h.length_capacity;
  cfg.embedding_dim = h.embedding_dim;
  std::size_t layers = 0;
  while (params.contains(conv_name(layers, "weight"))) ++layers;
  if (layers == 0 || !params.contains("fc0.weight")) throw ConfigError(path.string() + " lacks surrogate tensors");
  cfg.conv_layers = layers;
  const auto& w0 = params.get(conv_name(0, "weight")).shape();
  cfg.conv_channels = w0.cols;
  cfg.kernel = w0.rows / cfg.alphabet_size;
  cfg.fc_hidden = params.get("fc0.weight").cols();
  return SurrogateNet(cfg, std::move(params));
}

ad::Var grids_to_rows(std::span<const CharGrid> grids) {
  if (grids.empty()) throw InputError("empty grid batch");
  std::size_t a = grids.front().alphabet_size(), l = grids.front().length_capacity();
  std::vector<double> values;
  values.reserve(grids.size() * a * l);
  for (const auto& g : grids) {
    if (g.alphabet_size() != a || g.length_capacity() != l) throw ShapeError("grids in a batch differ in shape");
    values.insert(values.end(), g.values().begin(), g.values().end());
  }
  return ad::constant({grids.size() * l, a}, std::move(values));
}

CharGrid rows_to_grid(const ad::Var& rows, std::size_t sample, std::size_t length_capacity) {
  std::size_t a = rows.cols();
  auto begin = rows.value().begin() + static_cast<std::ptrdiff_t>(sample * length_capacity * a);
  return CharGrid(a, length_capacity, std::vector<double>(begin, begin + static_cast<std::ptrdiff_t>(length_capacity * a)));
}

ad::Var embed(const CharGrid& grid, const SurrogateNet& net) {
  return net.embed_rows(grids_to_rows(std::span<const CharGrid>(&grid, 1)));
}

ad::Var surrogate_distance_rows(const ad::Var& z_rows, const ad::Var& y_rows, const SurrogateNet& net, bool frozen) {
  if (z_rows.shape() != y_rows.shape()) throw ConfigError("prediction and target grid batches differ in shape");
  return ad::l2_norm_rows(ad::sub(net.embed_rows(z_rows, frozen), net.embed_rows(y_rows, frozen)), kNormEps);
}

ad::Var surrogate_distance(const CharGrid& z_hat, const CharGrid& y_hat, const SurrogateNet& net) {
  return surrogate_distance_rows(grids_to_rows(std::span<const CharGrid>(&z_hat, 1)),
                                 grids_to_rows(std::span<const CharGrid>(&y_hat, 1)), net);
}

SurrogateLossResult surrogate_loss_rows(const std::vector<double>& z_values, const ad::Var& y_rows,
                                        std::span<const double> e, const SurrogateNet& net,
                                        const SurrogateLossWeights& w) {
  w.validate();
  const std::size_t length = net.config().length_capacity;
  const std::size_t batch = y_rows.rows() / length;
  if (z_values.size() != y_rows.size()) throw ConfigError("prediction and target grid batches differ in shape");
  if (e.size() != batch) throw InputError("one edit distance per sample is required");

  // z_hat enters as its own leaf so the penalty can differentiate w.r.t. it.
  ad::Var z = ad::parameter(y_rows.shape(), z_values);
  ad::Var e_hat = surrogate_distance_rows(z, y_rows, net);

  // Samples are independent, so d(sum e_hat)/dz holds every per-sample gradient.
  ad::Var dz = ad::grad(ad::sum(e_hat), z, /*create_graph=*/true);
  ad::Var grad_norm = ad::sqrt(ad::add_scalar(ad::sum_cols(ad::group_sum(ad::square(dz), length)), kNormEps));

  ad::Var target = ad::constant({batch, 1}, std::vector<double>(e.begin(), e.end()));
  ad::Var fit = ad::scale(ad::square(ad::sub(e_hat, target)), w.w1);
  ad::Var penalty = ad::scale(ad::square(ad::add_scalar(grad_norm, -1.0)), w.w2);
  ad::Var per_sample = ad::add(fit, penalty);

  SurrogateLossResult out;
  out.loss = ad::mean(per_sample);
  out.e_hat = e_hat.value();
  out.grad_norm = grad_norm.value();
  out.sample_loss = per_sample.value();
  return out;
}

ad::Var surrogate_loss(const CharGrid& z_hat, const CharGrid& y_hat, std::size_t e, const SurrogateNet& net,
                       const SurrogateLossWeights& w) {
  double target = static_cast<double>(e);
  return surrogate_loss_rows(z_hat.values(), grids_to_rows(std::span<const CharGrid>(&y_hat, 1)),
                             std::span<const double>(&target, 1), net, w)
      .loss;
}

}  // namespace feds
