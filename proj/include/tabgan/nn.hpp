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

// Layer stacks over NHWC tensors with a leading batch axis. Shapes in a
// NetworkSpec are per sample; the batch axis is implicit.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"

#include "tabgan/autodiff.hpp"
#include "tabgan/optim.hpp"
#include "tabgan/rng.hpp"

namespace tabgan::nn {

enum class LayerKind { dense, conv, deconv, batchnorm, dropout, activation, reshape, crop, flatten };
enum class Activation { linear, leaky_relu, tanh, sigmoid };

inline constexpr double kLeakySlope = 0.2;

struct LayerSpec {
  LayerKind kind = LayerKind::dense;
  std::size_t units = 0;  // dense units or conv/deconv filters
  std::size_t kernel_h = 3, kernel_w = 3;
  std::size_t stride_h = 1, stride_w = 1;
  ad::Padding padding = ad::Padding::same;
  double rate = 0.0;  // dropout
  Activation activation = Activation::linear;
  double alpha = kLeakySlope;
  Shape target;  // reshape target, or crop extents {h, w}

  static LayerSpec dense(std::size_t units);
  static LayerSpec conv(std::size_t filters, std::size_t stride = 1);
  static LayerSpec deconv(std::size_t filters, std::size_t stride = 1);
  static LayerSpec batchnorm();
  static LayerSpec dropout(double rate);
  static LayerSpec act(Activation a, double alpha = kLeakySlope);
  static LayerSpec reshape(Shape target);
  static LayerSpec crop(std::size_t h, std::size_t w);
  static LayerSpec flatten();

  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

struct NetworkSpec {
  Shape input_shape;
  std::vector<LayerSpec> layers;

  friend bool operator==(const NetworkSpec&, const NetworkSpec&) = default;
};

/// Per-sample shape after each layer (element i is the output of layer i).
/// Throws ShapeError or std::invalid_argument on an invalid spec.
std::vector<Shape> propagate_shapes(const NetworkSpec& spec);
Shape output_shape(const NetworkSpec& spec);

std::string layer_prefix(std::size_t index);

/// Weights uniform with He scaling (variance 2 / fan_in) when the layer feeds
/// a LeakyReLU and Glorot scaling otherwise; biases zero; batch-norm scale
/// one and shift zero.
ParameterStore init_params(const NetworkSpec& spec, std::uint64_t seed);

struct RunningStats {
  Tensor mean;
  Tensor var;
};

struct BatchNormState {
  double momentum = 0.9;
  double eps = 1e-5;
  std::map<std::string, RunningStats> layers;  // keyed by layer prefix
};

BatchNormState init_batchnorm_state(const NetworkSpec& spec);

enum class Mode { train, eval };

struct ForwardOptions {
  Mode mode = Mode::eval;
  /// Batch-norm running statistics, read in eval mode and updated in train
  /// mode when `update_stats` is set. Required only by networks with batch
  /// norm (eval mode) or when updating.
  BatchNormState* bn_state = nullptr;
  bool update_stats = false;
  /// Stop before this layer index (exclusive). Zero means run every layer.
  std::size_t end_layer = 0;
};

/// Runs the stack on a batch `input` of shape [B, input_shape...]. Train mode
/// draws dropout masks from `rng` and normalizes with batch statistics.
ad::Var forward(const NetworkSpec& spec, const ParamVars& params, const ad::Var& input, Rng& rng,
                const ForwardOptions& options);

nlohmann::json to_json(const NetworkSpec& spec);
NetworkSpec network_from_json(const nlohmann::json& j);

}  // namespace tabgan::nn
