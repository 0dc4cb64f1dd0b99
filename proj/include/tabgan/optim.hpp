/*
 * Copyright 2026 The tabgan-ts Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "tabgan/autodiff.hpp"
#include "tabgan/tensor.hpp"

namespace tabgan {

/// Named parameters, iterated in lexicographic order of their paths.
using ParameterStore = std::map<std::string, Tensor>;
using ParamVars = std::map<std::string, ad::Var>;
using GradientMap = std::map<std::string, Tensor>;

ParamVars as_variables(const ParameterStore& store);
ParamVars as_constants(const ParameterStore& store);
/// Gradient of a scalar loss with respect to every entry of `vars`.
GradientMap gradients(const ad::Var& loss, const ParamVars& vars);

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.0;
  double beta2 = 0.9;
  double eps = 1e-8;

  friend bool operator==(const AdamConfig&, const AdamConfig&) = default;
};

struct AdamState {
  std::uint64_t step = 0;
  ParameterStore m;
  ParameterStore v;
};

/// One bias-corrected Adam update. Throws std::invalid_argument when a
/// parameter has no gradient or a shape disagrees.
void adam_step(ParameterStore& params, const GradientMap& grads, AdamState& state,
               const AdamConfig& config);

}  // namespace tabgan
