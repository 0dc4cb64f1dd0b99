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

// Central finite-difference oracle for gradient tests. Independent of the
// backward rules it checks: it only evaluates the forward function.

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "tabgan/autodiff.hpp"
#include "tabgan/rng.hpp"

namespace tabgan::testing {

using Objective = std::function<ad::Var(const std::vector<ad::Var>&)>;

inline Tensor random_tensor(const Shape& shape, Rng& rng, double scale = 1.0) {
  Tensor t(shape);
  for (auto& v : t.data()) v = scale * rng.uniform(-1.0, 1.0);
  return t;
}

inline std::vector<Tensor> numeric_gradients(const Objective& f, const std::vector<Tensor>& inputs,
                                             double h = 1e-5) {
  // Inputs enter as constants; grad stays enabled so objectives that take an
  // inner gradient still evaluate.
  auto eval = [&](const std::vector<Tensor>& xs) {
    std::vector<ad::Var> vars;
    for (const auto& x : xs) vars.push_back(ad::constant(x));
    return f(vars).item();
  };
  std::vector<Tensor> grads;
  std::vector<Tensor> work = inputs;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    Tensor g(inputs[k].shape());
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double orig = work[k][i];
      work[k][i] = orig + h;
      const double fp = eval(work);
      work[k][i] = orig - h;
      const double fm = eval(work);
      work[k][i] = orig;
      g[i] = (fp - fm) / (2.0 * h);
    }
    grads.push_back(std::move(g));
  }
  return grads;
}

inline std::vector<Tensor> analytic_gradients(const Objective& f, const std::vector<Tensor>& inputs) {
  std::vector<ad::Var> vars;
  for (const auto& x : inputs) vars.push_back(ad::variable(x));
  const auto grads = ad::grad(f(vars), vars, {.build_graph = false, .allow_unused = true});
  std::vector<Tensor> out;
  for (const auto& g : grads) out.push_back(g.value());
  return out;
}

/// ||a - n|| / max(||a||, ||n||, floor), over one tensor.
inline double relative_error(const Tensor& a, const Tensor& n, double floor = 1e-7) {
  double diff = 0.0, na = 0.0, nn = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - n[i]) * (a[i] - n[i]);
    na += a[i] * a[i];
    nn += n[i] * n[i];
  }
  return std::sqrt(diff) / std::max({std::sqrt(na), std::sqrt(nn), floor});
}

/// Largest per-input relative error between analytic and numeric gradients.
/// Inputs whose true gradient vanishes (a bias feeding batch norm) are
/// measured against the largest gradient norm, since their numeric estimate
/// is pure cancellation noise.
inline double max_gradient_error(const Objective& f, const std::vector<Tensor>& inputs, double h = 1e-5) {
  const auto a = analytic_gradients(f, inputs);
  const auto n = numeric_gradients(f, inputs, h);
  double largest = 0.0;
  for (const auto& g : n) {
    double s = 0.0;
    for (double v : g.values()) s += v * v;
    largest = std::max(largest, std::sqrt(s));
  }
  const double floor = std::max(1e-7, 1e-4 * largest);
  double worst = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) worst = std::max(worst, relative_error(a[k], n[k], floor));
  return worst;
}

}  // namespace tabgan::testing
