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

// Finite-difference cases shared by the unit and acceptance tests: one per
// differentiable op, and the full WGAN-GP critic loss on a miniature critic.

#include <functional>
#include <string>
#include <vector>

#include "fd_oracle.hpp"
#include "tabgan/gan.hpp"

namespace tabgan::testing {

// Random values bounded away from zero so LeakyReLU kinks and sqrt/div poles
// stay outside the finite-difference stencil.
inline Tensor away_from_zero(const Shape& shape, Rng& rng) {
  Tensor t(shape);
  for (auto& v : t.data()) v = (rng.bernoulli(0.5) ? 1.0 : -1.0) * rng.uniform(0.1, 1.0);
  return t;
}

inline Tensor positive(const Shape& shape, Rng& rng) {
  Tensor t(shape);
  for (auto& v : t.data()) v = rng.uniform(0.5, 2.0);
  return t;
}

struct OpCase {
  const char* name;
  std::function<std::vector<Tensor>(Rng&)> make_inputs;
  Objective f;
};

inline std::vector<OpCase> op_cases() {
  // Each objective contracts the op's output with a fixed random weight so
  // every output element contributes.
  static const auto weighted = [](const ad::Var& y, std::uint64_t salt) {
    Rng r(salt);
    return ad::sum(ad::mul(y, ad::constant(random_tensor(y.shape(), r))));
  };
  return {
      {"add", [](Rng& r) { return std::vector{random_tensor({3, 4}, r), random_tensor({3, 4}, r)}; },
       [=](auto& v) { return weighted(ad::add(v[0], v[1]), 1); }},
      {"add scalar", [](Rng& r) { return std::vector{random_tensor({3, 4}, r), random_tensor({1}, r)}; },
       [=](auto& v) { return weighted(ad::add(v[0], v[1]), 1); }},
      {"sub", [](Rng& r) { return std::vector{random_tensor({5}, r), random_tensor({5}, r)}; },
       [=](auto& v) { return weighted(ad::sub(v[0], v[1]), 2); }},
      {"mul", [](Rng& r) { return std::vector{random_tensor({2, 3}, r), random_tensor({2, 3}, r)}; },
       [=](auto& v) { return weighted(ad::mul(v[0], v[1]), 3); }},
      {"mul scalar", [](Rng& r) { return std::vector{random_tensor({1}, r), random_tensor({2, 3}, r)}; },
       [=](auto& v) { return weighted(ad::mul(v[0], v[1]), 3); }},
      {"div", [](Rng& r) { return std::vector{random_tensor({4}, r), positive({4}, r)}; },
       [=](auto& v) { return weighted(ad::div(v[0], v[1]), 4); }},
      {"neg", [](Rng& r) { return std::vector{random_tensor({4}, r)}; },
       [=](auto& v) { return weighted(ad::neg(v[0]), 5); }},
      {"scale/shift", [](Rng& r) { return std::vector{random_tensor({4}, r)}; },
       [=](auto& v) { return weighted(ad::shift(ad::scale(v[0], -1.7), 0.3), 6); }},
      {"leaky_relu", [](Rng& r) { return std::vector{away_from_zero({3, 3}, r)}; },
       [=](auto& v) { return weighted(ad::leaky_relu(v[0], 0.2), 7); }},
      {"tanh", [](Rng& r) { return std::vector{random_tensor({6}, r, 2.0)}; },
       [=](auto& v) { return weighted(ad::tanh(v[0]), 8); }},
      {"sigmoid", [](Rng& r) { return std::vector{random_tensor({6}, r, 3.0)}; },
       [=](auto& v) { return weighted(ad::sigmoid(v[0]), 9); }},
      {"softplus", [](Rng& r) { return std::vector{random_tensor({6}, r, 3.0)}; },
       [=](auto& v) { return weighted(ad::softplus(v[0]), 10); }},
      {"square", [](Rng& r) { return std::vector{random_tensor({6}, r)}; },
       [=](auto& v) { return weighted(ad::square(v[0]), 11); }},
      {"sqrt", [](Rng& r) { return std::vector{positive({6}, r)}; },
       [=](auto& v) { return weighted(ad::sqrt(v[0]), 12); }},
      {"sum/mean", [](Rng& r) { return std::vector{random_tensor({3, 2}, r)}; },
       [](auto& v) { return ad::mul(ad::sum(ad::square(v[0])), ad::mean(v[0])); }},
      {"sum_rows", [](Rng& r) { return std::vector{random_tensor({3, 2, 2}, r)}; },
       [=](auto& v) { return weighted(ad::square(ad::sum_rows(v[0])), 13); }},
      {"sum_channels", [](Rng& r) { return std::vector{random_tensor({2, 2, 3}, r)}; },
       [=](auto& v) { return weighted(ad::square(ad::sum_channels(v[0])), 14); }},
      {"broadcast_channels", [](Rng& r) { return std::vector{random_tensor({3}, r)}; },
       [=](auto& v) { return weighted(ad::square(ad::broadcast_channels(v[0], {2, 2, 3})), 15); }},
      {"add_bias", [](Rng& r) { return std::vector{random_tensor({2, 4}, r), random_tensor({4}, r)}; },
       [=](auto& v) { return weighted(ad::square(ad::add_bias(v[0], v[1])), 16); }},
      {"matmul", [](Rng& r) { return std::vector{random_tensor({3, 4}, r), random_tensor({4, 2}, r)}; },
       [=](auto& v) { return weighted(ad::matmul(v[0], v[1]), 17); }},
      {"transpose/reshape", [](Rng& r) { return std::vector{random_tensor({3, 4}, r)}; },
       [=](auto& v) { return weighted(ad::square(ad::reshape(ad::transpose(v[0]), {2, 6})), 18); }},
      {"concat/slice", [](Rng& r) { return std::vector{random_tensor({2, 3, 2}, r), random_tensor({2, 3, 1}, r)}; },
       [=](auto& v) { return weighted(ad::square(ad::slice_last(ad::concat_last(v[0], v[1]), 1, 2)), 19); }},
      {"embed_last", [](Rng& r) { return std::vector{random_tensor({2, 2}, r)}; },
       [=](auto& v) { return weighted(ad::square(ad::embed_last(v[0], 1, 4)), 20); }},
      {"crop/pad", [](Rng& r) { return std::vector{random_tensor({2, 3, 4, 2}, r)}; },
       [=](auto& v) { return weighted(ad::square(ad::pad2d(ad::crop2d(v[0], 2, 3), 4, 4)), 21); }},
      {"conv2d", [](Rng& r) { return std::vector{random_tensor({2, 4, 5, 2}, r), random_tensor({3, 3, 2, 3}, r)}; },
       [=](auto& v) { return weighted(ad::conv2d(v[0], v[1]), 22); }},
      {"conv2d strided valid",
       [](Rng& r) { return std::vector{random_tensor({1, 5, 6, 2}, r), random_tensor({3, 3, 2, 2}, r)}; },
       [=](auto& v) { return weighted(ad::conv2d(v[0], v[1], {2, 2, ad::Padding::valid}), 23); }},
      {"conv2d_transpose",
       [](Rng& r) { return std::vector{random_tensor({2, 2, 3, 4}, r), random_tensor({3, 3, 2, 4}, r)}; },
       [=](auto& v) { return weighted(ad::conv2d_transpose(v[0], v[1], {2, 2, ad::Padding::same}), 24); }},
      {"conv2d_filter_grad",
       [](Rng& r) { return std::vector{random_tensor({2, 3, 4, 2}, r), random_tensor({2, 3, 4, 3}, r)}; },
       [=](auto& v) { return weighted(ad::conv2d_filter_grad(v[0], v[1], 3, 3), 25); }},
  };
}

/// Network with every layer kind (conv, batch norm, LeakyReLU, dropout,
/// strided deconv, tanh, crop, flatten, dense).
inline nn::NetworkSpec all_layers_network() {
  using nn::LayerSpec;
  return {{3, 4, 2},
          {LayerSpec::conv(4), LayerSpec::batchnorm(), LayerSpec::act(nn::Activation::leaky_relu),
           LayerSpec::dropout(0.25), LayerSpec::deconv(3, 2), LayerSpec::act(nn::Activation::tanh),
           LayerSpec::crop(5, 7), LayerSpec::flatten(), LayerSpec::dense(2)}};
}

/// Largest relative gradient error of sum(y^2) through all_layers_network
/// in train mode, over the input and every parameter.
inline double all_layers_error(std::uint64_t seed) {
  const auto spec = all_layers_network();
  const ParameterStore store = nn::init_params(spec, 9);
  Rng data_rng(seed);
  std::vector<std::string> names;
  std::vector<Tensor> inputs{random_tensor({3, 3, 4, 2}, data_rng)};
  for (const auto& [name, value] : store) {
    names.push_back(name);
    inputs.push_back(value);
  }
  auto f = [&](const std::vector<ad::Var>& v) {
    ParamVars params;
    for (std::size_t i = 0; i < names.size(); ++i) params.emplace(names[i], v[i + 1]);
    Rng mask_rng(seed);  // identical dropout masks across evaluations
    auto bn = nn::init_batchnorm_state(spec);
    const auto y = nn::forward(spec, params, v[0], mask_rng, {.mode = nn::Mode::train, .bn_state = &bn});
    return ad::sum(ad::square(y));
  };
  return max_gradient_error(f, inputs);
}

struct CriticLossCase {
  std::vector<Tensor> inputs;  // critic parameters in key order
  Objective loss;
};

/// Critic loss mean C(fake) - mean C(real) + 10 * GP, differentiated with
/// respect to the critic parameters; the penalty makes this second order.
inline CriticLossCase critic_loss_case(std::uint64_t seed) {
  gan::Architecture a;
  a.critic_filters = {2, 2, 2, 2};
  a.dropout = 0.25;
  const auto spec = gan::build_critic(2, 3, a);
  const ParameterStore store = nn::init_params(spec, 100 + seed);
  std::vector<std::string> names;
  CriticLossCase c;
  for (const auto& [k, v] : store) {
    names.push_back(k);
    c.inputs.push_back(v);
  }
  Rng data_rng(seed);
  const Tensor real = random_tensor({3, 2, 3, 1}, data_rng);
  const Tensor fake = random_tensor({3, 2, 3, 1}, data_rng);
  const std::vector<double> lab{1.0, -1.0, 1.0};
  Tensor plane({3, 2, 3, 1});
  for (std::size_t i = 0; i < plane.size(); ++i) plane[i] = lab[i / 6];
  std::vector<double> eps(3);
  for (auto& e : eps) e = data_rng.uniform();
  c.loss = [=](const std::vector<ad::Var>& v) {
    ParamVars p;
    for (std::size_t i = 0; i < names.size(); ++i) p.emplace(names[i], v[i]);
    Rng mask(seed);  // identical dropout masks across evaluations
    auto critic = [&](const ad::Var& x) {
      return nn::forward(spec, p, ad::concat_last(x, ad::constant(plane)), mask, {.mode = nn::Mode::train});
    };
    const auto sr = critic(ad::constant(real));
    const auto sf = critic(ad::constant(fake));
    const auto gp = gan::gradient_penalty(critic, real, fake, eps).penalty;
    return ad::add(ad::sub(ad::mean(sf), ad::mean(sr)), ad::scale(gp, 10.0));
  };
  return c;
}

/// Largest per-tensor relative error of the critic-loss gradient.
inline double critic_loss_error(std::uint64_t seed) {
  const auto c = critic_loss_case(seed);
  const auto an = analytic_gradients(c.loss, c.inputs);
  const auto nu = numeric_gradients(c.loss, c.inputs);
  double worst = 0.0;
  for (std::size_t k = 0; k < an.size(); ++k) worst = std::max(worst, relative_error(an[k], nu[k]));
  return worst;
}

}  // namespace tabgan::testing
