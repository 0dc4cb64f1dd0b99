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

#include "doctest.h"

#include <cmath>

#include "fd_oracle.hpp"
#include "gradient_cases.hpp"
#include "tabgan/autodiff.hpp"
#include "tabgan/optim.hpp"

using namespace tabgan;
using tabgan::testing::max_gradient_error;
using tabgan::testing::random_tensor;

namespace {

double inner(const Tensor& a, const Tensor& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

TEST_CASE("elementwise examples") {
  CHECK(ad::leaky_relu(ad::constant(-1.0), 0.2).item() == doctest::Approx(-0.2).epsilon(1e-15));
  CHECK(ad::tanh(ad::constant(0.0)).item() == 0.0);
  const auto sq = ad::square(ad::constant(Tensor::from({3}, {1, 2, 3})));
  CHECK(sq.value() == Tensor::from({3}, {1, 4, 9}));
  CHECK_THROWS_AS(ad::add(ad::constant(Tensor({2})), ad::constant(Tensor({3}))), ShapeError);
  CHECK_THROWS_AS(ad::div(ad::constant(1.0), ad::constant(0.0)), NumericError);
  CHECK_THROWS_AS(ad::sqrt(ad::constant(-1.0)), NumericError);
  // scalar broadcasting in either position
  CHECK(ad::sub(ad::constant(1.0), ad::constant(Tensor::from({2}, {1, 3}))).value() == Tensor::from({2}, {0, -2}));
}

TEST_CASE("matmul examples") {
  const auto eye = ad::constant(Tensor::from({2, 2}, {1, 0, 0, 1}));
  const auto col = ad::constant(Tensor::from({2, 1}, {5, 7}));
  CHECK(ad::matmul(eye, col).value() == Tensor::from({2, 1}, {5, 7}));
  const auto a = ad::constant(Tensor::from({2, 2}, {1, 2, 3, 4}));
  const auto ones = ad::constant(Tensor::from({2, 1}, {1, 1}));
  CHECK(ad::matmul(a, ones).value() == Tensor::from({2, 1}, {3, 7}));
  CHECK(ad::matmul(ad::constant(Tensor({3, 4})), ad::constant(Tensor({4, 6}))).shape() == Shape{3, 6});
  CHECK_THROWS_AS(ad::matmul(ad::constant(Tensor({3, 4})), ad::constant(Tensor({5, 6}))), ShapeError);
}

TEST_CASE("conv2d examples") {
  Rng rng(1);
  SUBCASE("same padding preserves the spatial extent") {
    const auto x = ad::constant(random_tensor({1, 3, 14, 2}, rng));
    const auto k = ad::constant(random_tensor({3, 3, 2, 64}, rng));
    CHECK(ad::conv2d(x, k).shape() == Shape{1, 3, 14, 64});
  }
  SUBCASE("a 1x1 identity kernel is the identity") {
    const Tensor xv = random_tensor({2, 4, 5, 1}, rng);
    const auto y = ad::conv2d(ad::constant(xv), ad::constant(Tensor::from({1, 1, 1, 1}, {1})));
    CHECK(y.value() == xv);
  }
  SUBCASE("valid 2x2 against direct summation") {
    const auto x = ad::constant(Tensor::from({1, 2, 2, 1}, {1, 2, 3, 4}));
    const auto k = ad::constant(Tensor::from({2, 2, 1, 1}, {1, 0, 0, 1}));
    const auto y = ad::conv2d(x, k, {1, 1, ad::Padding::valid});
    CHECK(y.shape() == Shape{1, 1, 1, 1});
    CHECK(y.item() == 5.0);
  }
  SUBCASE("valid padding rejects a kernel larger than the input") {
    CHECK_THROWS(ad::conv2d(ad::constant(Tensor({1, 2, 2, 1})), ad::constant(Tensor({3, 3, 1, 1})),
                            {1, 1, ad::Padding::valid}));
  }
}

TEST_CASE("conv2d_transpose examples") {
  Rng rng(2);
  SUBCASE("stride two doubles the spatial extent") {
    const auto x = ad::constant(random_tensor({1, 2, 7, 256}, rng));
    const auto k = ad::constant(random_tensor({3, 3, 8, 256}, rng));
    CHECK(ad::conv2d_transpose(x, k, {2, 2, ad::Padding::same}).shape() == Shape{1, 4, 14, 8});
  }
  SUBCASE("identity kernel at stride one") {
    const Tensor xv = random_tensor({1, 3, 3, 1}, rng);
    const auto y = ad::conv2d_transpose(ad::constant(xv), ad::constant(Tensor::from({1, 1, 1, 1}, {1})));
    CHECK(y.value() == xv);
  }
}

TEST_CASE("conv2d and conv2d_transpose are adjoint") {
  struct C {
    Shape x;
    std::size_t k, cout, s;
    ad::Padding pad;
  };
  const std::vector<C> cases{{{1, 4, 4, 1}, 3, 1, 1, ad::Padding::same},
                             {{2, 4, 4, 3}, 3, 2, 2, ad::Padding::same},
                             {{1, 5, 6, 2}, 3, 4, 2, ad::Padding::valid},
                             {{1, 3, 7, 1}, 2, 3, 1, ad::Padding::valid}};
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    Rng rng(seed);
    const auto& c = cases[seed % cases.size()];
    const Tensor x = random_tensor(c.x, rng);
    const Tensor k = random_tensor({c.k, c.k, c.x[3], c.cout}, rng);
    const ad::Conv2dOptions opt{c.s, c.s, c.pad};
    const auto Ax = ad::conv2d(ad::constant(x), ad::constant(k), opt);
    const Tensor y = random_tensor(Ax.shape(), rng);
    const auto Aty = ad::conv2d_transpose(ad::constant(y), ad::constant(k), opt, c.x[1], c.x[2]);
    CHECK(std::fabs(inner(Ax.value(), y) - inner(x, Aty.value())) < 1e-10);
    // and the filter adjoint: <conv(x, k), y> = <k, filter_grad(x, y)>
    const auto Kt = ad::conv2d_filter_grad(ad::constant(x), ad::constant(y), c.k, c.k, opt);
    CHECK(std::fabs(inner(Ax.value(), y) - inner(k, Kt.value())) < 1e-10);
  }
}

TEST_CASE("backward examples") {
  SUBCASE("sum of squares") {
    const auto x = ad::variable(Tensor::from({2}, {1, 2}));
    const auto g = ad::grad(ad::sum(ad::square(x)), {x});
    CHECK(g[0].value() == Tensor::from({2}, {2, 4}));
  }
  SUBCASE("double backward of half the squared norm") {
    const auto x = ad::variable(Tensor::from({1}, {3}));
    const auto f = ad::scale(ad::sum(ad::square(x)), 0.5);
    const auto gx = ad::grad(f, {x}, {.build_graph = true})[0];
    CHECK(gx.requires_grad());
    const auto gg = ad::grad(ad::sum(ad::square(gx)), {x})[0];
    CHECK(gg.value()[0] == doctest::Approx(6.0).epsilon(1e-14));
  }
  SUBCASE("errors") {
    const auto x = ad::variable(Tensor::from({2}, {1, 2}));
    CHECK_THROWS_AS(ad::grad(ad::square(x), {x}), ShapeError);
    const auto unrelated = ad::variable(Tensor::from({1}, {1}));
    CHECK_THROWS_AS(ad::grad(ad::sum(x), {unrelated}), std::invalid_argument);
    const auto zero = ad::grad(ad::sum(x), {unrelated}, {.allow_unused = true});
    CHECK(zero[0].value() == Tensor::from({1}, {0}));
  }
}

TEST_CASE("two-layer LeakyReLU network against finite differences") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(100 + seed);
    const std::vector<Tensor> inputs{random_tensor({4, 3}, rng), random_tensor({3, 5}, rng),
                                     random_tensor({5}, rng), random_tensor({5, 1}, rng)};
    auto f = [](const std::vector<ad::Var>& v) {
      const auto h = ad::leaky_relu(ad::add_bias(ad::matmul(v[0], v[1]), v[2]), 0.2);
      return ad::sum(ad::square(ad::matmul(h, v[3])));
    };
    CHECK(max_gradient_error(f, inputs) < 1e-4);
  }
}

TEST_CASE("every differentiable op matches finite differences") {
  for (const auto& op : testing::op_cases()) {
    CAPTURE(op.name);
    double worst = 0.0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      Rng rng(1000 + seed);
      worst = std::max(worst, max_gradient_error(op.f, op.make_inputs(rng)));
    }
    CHECK(worst < 1e-4);
  }
}

TEST_CASE("second-order path through a conv critic matches finite differences") {
  // L(theta) = sum_b (||d C(x_b) / d x_b|| - 1)^2 with C a LeakyReLU conv net.
  auto penalty = [](const std::vector<ad::Var>& v) {
    const ad::Var x = ad::variable(v[0].value());
    const auto h = ad::leaky_relu(ad::conv2d(x, v[1]), 0.2);
    const auto h2 = ad::leaky_relu(ad::conv2d(h, v[2]), 0.2);
    const auto score = ad::matmul(ad::reshape(h2, {x.shape()[0], 2 * 3 * 2}), v[3]);
    const auto gx = ad::grad(ad::sum(score), {x}, {.build_graph = true})[0];
    const auto norms = ad::sqrt(ad::sum_rows(ad::square(gx)));
    return ad::sum(ad::square(ad::shift(norms, -1.0)));
  };
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(500 + seed);
    const std::vector<Tensor> inputs{random_tensor({3, 2, 3, 2}, rng), random_tensor({3, 3, 2, 2}, rng),
                                     random_tensor({3, 3, 2, 2}, rng), random_tensor({12, 1}, rng)};
    // Only the parameters (not the data) are differentiated here.
    const auto a = testing::analytic_gradients(penalty, inputs);
    const auto n = testing::numeric_gradients(penalty, inputs);
    for (std::size_t k = 1; k < inputs.size(); ++k) CHECK(testing::relative_error(a[k], n[k]) < 1e-3);
  }
}

TEST_CASE("re-evaluating a graph is bitwise reproducible") {
  Rng rng(3);
  const Tensor x = random_tensor({2, 3, 4, 2}, rng);
  const Tensor k = random_tensor({3, 3, 2, 5}, rng);
  auto run = [&] {
    const auto xv = ad::variable(x);
    const auto kv = ad::variable(k);
    const auto y = ad::sum(ad::tanh(ad::conv2d(xv, kv)));
    const auto g = ad::grad(y, {kv});
    return std::pair{y.item(), g[0].value()};
  };
  const auto a = run();
  const auto b = run();
  CHECK(a.first == b.first);
  CHECK(a.second == b.second);
}

TEST_CASE("adam examples") {
  SUBCASE("zero gradient leaves parameters unchanged") {
    ParameterStore p{{"w", Tensor::from({2}, {0.5, -1.0})}};
    AdamState state;
    state.step = 4;
    state.m["w"] = Tensor::from({2}, {0.3, 0.1});
    state.v["w"] = Tensor::from({2}, {0.2, 0.4});
    adam_step(p, {{"w", Tensor({2}, 0.0)}}, state, AdamConfig{});
    CHECK(p.at("w") == Tensor::from({2}, {0.5, -1.0}));
  }
  SUBCASE("first step with unit gradient") {
    ParameterStore p{{"w", Tensor::from({1}, {1.0})}};
    AdamState state;
    adam_step(p, {{"w", Tensor::from({1}, {1.0})}}, state, AdamConfig{.lr = 0.001, .beta1 = 0.0, .beta2 = 0.9});
    // m_hat = 1, v_hat = 1, step = lr / (1 + eps)
    CHECK(1.0 - p.at("w")[0] == doctest::Approx(0.001).epsilon(1e-6));
  }
  SUBCASE("missing gradient") {
    ParameterStore p{{"w", Tensor({1})}, {"b", Tensor({1})}};
    AdamState state;
    CHECK_THROWS_AS(adam_step(p, {{"w", Tensor({1})}}, state, AdamConfig{}), std::invalid_argument);
  }
  SUBCASE("identical runs are bitwise identical") {
    auto run = [] {
      Rng rng(9);
      ParameterStore p{{"w", random_tensor({3}, rng)}};
      AdamState state;
      for (int i = 0; i < 10; ++i) adam_step(p, {{"w", random_tensor({3}, rng)}}, state, AdamConfig{});
      return p;
    };
    CHECK(run() == run());
  }
}
