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

#include <span>
#include <string>
#include <vector>

#include "feds/autodiff.hpp"
#include "feds/params.hpp"

namespace feds {

struct OptimizerConfig {
  enum class Kind { kAdadelta, kSgd };
  Kind kind = Kind::kAdadelta;
  double rho = 0.95;
  double eps = 1e-6;
};

// Running averages E[g^2] and E[dx^2], one buffer per parameter.
struct AdadeltaState {
  std::vector<std::vector<double>> sq_grad;
  std::vector<std::vector<double>> sq_update;

  static AdadeltaState zeros_like(const ParamStore& params);
};

// One ADADELTA update (Zeiler 2012). The computed step is scaled by `lr`.
void adadelta_step(ParamStore& params, std::span<const ad::Var> grads, AdadeltaState& state, double rho, double eps,
                   double lr = 1.0);

void sgd_step(ParamStore& params, std::span<const ad::Var> grads, double lr);

// Owns the state for whichever update rule the config selects.
class Optimizer {
 public:
  Optimizer(const OptimizerConfig& cfg, double lr, const ParamStore& params);

  void step(ParamStore& params, std::span<const ad::Var> grads);
  const AdadeltaState& adadelta_state() const { return state_; }

 private:
  OptimizerConfig cfg_;
  double lr_;
  AdadeltaState state_;
};

}  // namespace feds
