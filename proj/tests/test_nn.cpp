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
#include "tabgan/nn.hpp"

using namespace tabgan;
using namespace tabgan::nn;
using tabgan::testing::random_tensor;

namespace {

NetworkSpec small_conv_net() {
  return {{3, 4, 2},
          {LayerSpec::conv(4), LayerSpec::batchnorm(), LayerSpec::act(Activation::leaky_relu),
           LayerSpec::dropout(0.25), LayerSpec::deconv(3, 2), LayerSpec::act(Activation::tanh),
           LayerSpec::crop(5, 7), LayerSpec::flatten(), LayerSpec::dense(2)}};
}

}  // namespace

TEST_CASE("init_params is deterministic and zeroes biases") {
  const NetworkSpec spec{{10}, {LayerSpec::dense(5), LayerSpec::act(Activation::tanh)}};
  const auto a = init_params(spec, 7);
  CHECK(a == init_params(spec, 7));
  CHECK(a != init_params(spec, 8));
  CHECK(a.at("layer00.kernel").shape() == Shape{10, 5});
  CHECK(a.at("layer00.bias") == Tensor({5}, 0.0));
}

TEST_CASE("He initialization variance") {
  const NetworkSpec spec{{3, 3, 64}, {LayerSpec::conv(128), LayerSpec::act(Activation::leaky_relu)}};
  const Tensor k = init_params(spec, 11).at("layer00.kernel");
  CHECK(k.shape() == Shape{3, 3, 64, 128});
  double mean = 0.0;
  for (double v : k.values()) mean += v;
  mean /= static_cast<double>(k.size());
  double var = 0.0;
  for (double v : k.values()) var += (v - mean) * (v - mean);
  var /= static_cast<double>(k.size() - 1);
  const double expected = 2.0 / (3.0 * 3.0 * 64.0);
  CHECK(var > 0.7 * expected);
  CHECK(var < 1.3 * expected);
}

TEST_CASE("invalid specs are rejected") {
  CHECK_THROWS(propagate_shapes({{4}, {LayerSpec::conv(2)}}));
  CHECK_THROWS(propagate_shapes({{4}, {LayerSpec::dense(0)}}));
  CHECK_THROWS(propagate_shapes({{4}, {LayerSpec::dropout(1.0)}}));
  CHECK_THROWS(propagate_shapes({{2, 3, 1}, {LayerSpec::reshape({5})}}));
  CHECK_THROWS(propagate_shapes({{2, 3, 1}, {LayerSpec::crop(3, 3)}}));
}

TEST_CASE("propagated shapes match forward output shapes") {
  const auto spec = small_conv_net();
  const auto shapes = propagate_shapes(spec);
  CHECK(shapes[4] == Shape{6, 8, 3});
  CHECK(output_shape(spec) == Shape{2});
  const auto params = as_constants(init_params(spec, 1));
  auto bn = init_batchnorm_state(spec);
  Rng rng(2);
  const auto x = ad::constant(random_tensor({5, 3, 4, 2}, rng));
  for (std::size_t end = 1; end <= spec.layers.size(); ++end) {
    const auto y = forward(spec, params, x, rng, {.mode = Mode::train, .bn_state = &bn, .end_layer = end});
    Shape expected{5};
    expected.insert(expected.end(), shapes[end - 1].begin(), shapes[end - 1].end());
    CHECK(y.shape() == expected);
  }
  CHECK_THROWS_AS(forward(spec, params, ad::constant(Tensor({5, 3, 4, 1})), rng, {.bn_state = &bn}), ShapeError);
}

TEST_CASE("dropout") {
  const NetworkSpec spec{{1000}, {LayerSpec::dropout(0.25)}};
  const Tensor ones({4, 1000}, 1.0);
  Rng rng(3);
  SUBCASE("eval mode is the identity") {
    CHECK(forward(spec, {}, ad::constant(ones), rng, {}).value() == ones);
  }
  SUBCASE("train mode drops the configured fraction and rescales survivors") {
    double dropped = 0.0;
    const int draws = 20;
    for (int d = 0; d < draws; ++d) {
      const Tensor y = forward(spec, {}, ad::constant(ones), rng, {.mode = Mode::train}).value();
      for (double v : y.values()) {
        if (v == 0.0) {
          dropped += 1.0;
        } else {
          CHECK(v == doctest::Approx(1.0 / 0.75).epsilon(1e-15));
        }
      }
    }
    CHECK(std::fabs(dropped / (draws * 4000.0) - 0.25) < 0.05);
  }
}

TEST_CASE("batch norm") {
  const NetworkSpec spec{{2, 2, 3}, {LayerSpec::batchnorm()}};
  const auto params = as_constants(init_params(spec, 1));
  auto bn = init_batchnorm_state(spec);
  Rng rng(0);
  SUBCASE("a constant batch normalizes to zero") {
    const auto y = forward(spec, params, ad::constant(Tensor({4, 2, 2, 3}, 3.5)), rng,
                           {.mode = Mode::train, .bn_state = &bn});
    CHECK(y.value() == Tensor({4, 2, 2, 3}, 0.0));
  }
  SUBCASE("running statistics move toward batch statistics") {
    const auto x = random_tensor({4, 2, 2, 3}, rng);
    forward(spec, params, ad::constant(x), rng, {.mode = Mode::train, .bn_state = &bn, .update_stats = true});
    double mu0 = 0.0;
    for (std::size_t i = 0; i < x.size(); i += 3) mu0 += x[i];
    mu0 /= 16.0;
    CHECK(bn.layers.at("layer00").mean[0] == doctest::Approx(0.1 * mu0).epsilon(1e-12));
    for (double v : bn.layers.at("layer00").var.values()) CHECK(v >= 0.0);
  }
  SUBCASE("eval mode needs running statistics") {
    CHECK_THROWS(forward(spec, params, ad::constant(Tensor({1, 2, 2, 3})), rng, {}));
  }
}

TEST_CASE("tanh-terminated networks stay in range") {
  const NetworkSpec spec{{3}, {LayerSpec::dense(8), LayerSpec::act(Activation::tanh)}};
  auto store = init_params(spec, 4);
  for (auto& v : store.at("layer00.kernel").data()) v *= 50.0;
  Rng rng(5);
  const auto y = forward(spec, as_constants(store), ad::constant(random_tensor({16, 3}, rng, 10.0)), rng, {});
  for (double v : y.value().values()) {
    CHECK(v >= -1.0);
    CHECK(v <= 1.0);
  }
}

TEST_CASE("gradients through every layer kind match finite differences") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    CAPTURE(seed);
    CHECK(testing::all_layers_error(seed) < 1e-4);
  }
}

TEST_CASE("network spec JSON round trip") {
  const auto spec = small_conv_net();
  const auto j = to_json(spec);
  CHECK(network_from_json(j) == spec);
  CHECK(j.at("layers").at(0).at("kind") == "conv");
  CHECK(network_from_json(nlohmann::json::parse(j.dump())) == spec);
}
