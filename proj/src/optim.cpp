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

#include "feds/optim.hpp"

#include <cmath>

#include "feds/errors.hpp"

namespace feds {

AdadeltaState AdadeltaState::zeros_like(const ParamStore& params) {
  AdadeltaState s;
  for (const auto& e : params.entries()) {
    s.sq_grad.emplace_back(e.var.size(), 0.0);
    s.sq_update.emplace_back(e.var.size(), 0.0);
  }
  return s;
}

namespace {

void check_grads(const ParamStore& params, std::span<const ad::Var> grads) {
  if (grads.size() != params.size()) throw ShapeError("gradient count does not match parameter count");
  for (std::size_t i = 0; i < grads.size(); ++i) {
    if (grads[i].shape() != params.entries()[i].var.shape()) {
      throw ShapeError("gradient shape mismatch for '" + params.entries()[i].name + "'");
    }
  }
}

}  // namespace

void adadelta_step(ParamStore& params, std::span<const ad::Var> grads, AdadeltaState& state, double rho, double eps,
                   double lr) {
  check_grads(params, grads);
  if (state.sq_grad.size() != params.size() || state.sq_update.size() != params.size()) {
    throw ShapeError("optimizer state does not match parameters");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& entry = params.entries()[i];
    auto& eg2 = state.sq_grad[i];
    auto& edx2 = state.sq_update[i];
    if (eg2.size() != entry.var.size() || edx2.size() != entry.var.size()) {
      throw ShapeError("optimizer state shape mismatch for '" + entry.name + "'");
    }
    const auto& g = grads[i].value();
    std::vector<double> x = entry.var.value();
    for (std::size_t j = 0; j < x.size(); ++j) {
      eg2[j] = rho * eg2[j] + (1.0 - rho) * g[j] * g[j];
      double dx = -std::sqrt(edx2[j] + eps) / std::sqrt(eg2[j] + eps) * g[j];
      edx2[j] = rho * edx2[j] + (1.0 - rho) * dx * dx;
      x[j] += lr * dx;
    }
    params.set(entry.name, std::move(x));
  }
  params.bump_iteration();
}

void sgd_step(ParamStore& params, std::span<const ad::Var> grads, double lr) {
  check_grads(params, grads);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& entry = params.entries()[i];
    const auto& g = grads[i].value();
    std::vector<double> x = entry.var.value();
    for (std::size_t j = 0; j < x.size(); ++j) x[j] -= lr * g[j];
    params.set(entry.name, std::move(x));
  }
  params.bump_iteration();
}

Optimizer::Optimizer(const OptimizerConfig& cfg, double lr, const ParamStore& params)
    : cfg_(cfg), lr_(lr), state_(AdadeltaState::zeros_like(params)) {}

void Optimizer::step(ParamStore& params, std::span<const ad::Var> grads) {
  if (cfg_.kind == OptimizerConfig::Kind::kAdadelta) {
    adadelta_step(params, grads, state_, cfg_.rho, cfg_.eps, lr_);
  } else {
    sgd_step(params, grads, lr_);
  }
}

}  // namespace feds
