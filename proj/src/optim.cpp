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

#include "tabgan/optim.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace tabgan {

ParamVars as_variables(const ParameterStore& store) {
  ParamVars vars;
  for (const auto& [name, value] : store) vars.emplace(name, ad::variable(value));
  return vars;
}

ParamVars as_constants(const ParameterStore& store) {
  ParamVars vars;
  for (const auto& [name, value] : store) vars.emplace(name, ad::constant(value));
  return vars;
}

GradientMap gradients(const ad::Var& loss, const ParamVars& vars) {
  std::vector<ad::Var> wrt;
  wrt.reserve(vars.size());
  for (const auto& [name, v] : vars) wrt.push_back(v);
  const auto grads = ad::grad(loss, wrt, {.build_graph = false, .allow_unused = true});
  GradientMap out;
  std::size_t i = 0;
  for (const auto& [name, v] : vars) out.emplace(name, grads[i++].value());
  return out;
}

void adam_step(ParameterStore& params, const GradientMap& grads, AdamState& state,
               const AdamConfig& config) {
  for (const auto& [name, p] : params) {
    auto it = grads.find(name);
    if (it == grads.end()) throw std::invalid_argument("adam_step: missing gradient for " + name);
    if (it->second.shape() != p.shape())
      throw std::invalid_argument("adam_step: gradient shape " + shape_string(it->second.shape()) +
                                  " for parameter " + name + " " + shape_string(p.shape()));
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(config.beta1, t);
  const double bc2 = 1.0 - std::pow(config.beta2, t);
  for (auto& [name, p] : params) {
    const Tensor& g = grads.at(name);
    auto [mit, m_new] = state.m.try_emplace(name, Tensor(p.shape(), 0.0));
    auto [vit, v_new] = state.v.try_emplace(name, Tensor(p.shape(), 0.0));
    Tensor& m = mit->second;
    Tensor& v = vit->second;
    if (m.shape() != p.shape() || v.shape() != p.shape())
      throw std::invalid_argument("adam_step: moment shape mismatch for " + name);
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = config.beta1 * m[i] + (1.0 - config.beta1) * g[i];
      v[i] = config.beta2 * v[i] + (1.0 - config.beta2) * g[i] * g[i];
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      p[i] -= config.lr * mhat / (std::sqrt(vhat) + config.eps);
    }
  }
}

}  // namespace tabgan
