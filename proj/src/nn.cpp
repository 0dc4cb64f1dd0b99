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

#include "tabgan/nn.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace tabgan::nn {

LayerSpec LayerSpec::dense(std::size_t units) {
  LayerSpec l;
  l.kind = LayerKind::dense;
  l.units = units;
  return l;
}

LayerSpec LayerSpec::conv(std::size_t filters, std::size_t stride) {
  LayerSpec l;
  l.kind = LayerKind::conv;
  l.units = filters;
  l.stride_h = l.stride_w = stride;
  return l;
}

LayerSpec LayerSpec::deconv(std::size_t filters, std::size_t stride) {
  LayerSpec l;
  l.kind = LayerKind::deconv;
  l.units = filters;
  l.stride_h = l.stride_w = stride;
  return l;
}

LayerSpec LayerSpec::batchnorm() {
  LayerSpec l;
  l.kind = LayerKind::batchnorm;
  return l;
}

LayerSpec LayerSpec::dropout(double rate) {
  LayerSpec l;
  l.kind = LayerKind::dropout;
  l.rate = rate;
  return l;
}

LayerSpec LayerSpec::act(Activation a, double alpha) {
  LayerSpec l;
  l.kind = LayerKind::activation;
  l.activation = a;
  l.alpha = alpha;
  return l;
}

LayerSpec LayerSpec::reshape(Shape target) {
  LayerSpec l;
  l.kind = LayerKind::reshape;
  l.target = std::move(target);
  return l;
}

LayerSpec LayerSpec::crop(std::size_t h, std::size_t w) {
  LayerSpec l;
  l.kind = LayerKind::crop;
  l.target = {h, w};
  return l;
}

LayerSpec LayerSpec::flatten() {
  LayerSpec l;
  l.kind = LayerKind::flatten;
  return l;
}

std::string layer_prefix(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "layer%02zu", index);
  return buf;
}

namespace {

std::string where(std::size_t i) { return "layer " + std::to_string(i) + ": "; }

Shape propagate_one(const LayerSpec& l, const Shape& in, std::size_t i) {
  switch (l.kind) {
    case LayerKind::dense:
      if (l.units == 0) throw std::invalid_argument(where(i) + "dense units must be positive");
      if (in.size() != 1) throw ShapeError(where(i) + "dense expects a flat input, got " + shape_string(in));
      return {l.units};
    case LayerKind::conv:
    case LayerKind::deconv: {
      if (l.units == 0) throw std::invalid_argument(where(i) + "filter count must be positive");
      if (l.kernel_h == 0 || l.kernel_w == 0 || l.stride_h == 0 || l.stride_w == 0)
        throw std::invalid_argument(where(i) + "kernel and stride extents must be positive");
      if (in.size() != 3) throw ShapeError(where(i) + "convolution expects HxWxC input, got " + shape_string(in));
      if (l.kind == LayerKind::conv) {
        const auto g = kernels::conv_geometry(1, in[0], in[1], in[2], l.kernel_h, l.kernel_w, l.units,
                                              l.stride_h, l.stride_w, l.padding);
        return {g.out_h, g.out_w, l.units};
      }
      if (l.padding == ad::Padding::same) return {in[0] * l.stride_h, in[1] * l.stride_w, l.units};
      return {(in[0] - 1) * l.stride_h + l.kernel_h, (in[1] - 1) * l.stride_w + l.kernel_w, l.units};
    }
    case LayerKind::batchnorm:
    case LayerKind::activation:
      return in;
    case LayerKind::dropout:
      if (!(l.rate >= 0.0 && l.rate < 1.0)) throw std::invalid_argument(where(i) + "dropout rate must be in [0,1)");
      return in;
    case LayerKind::reshape:
      if (l.target.empty() || numel(l.target) != numel(in))
        throw ShapeError(where(i) + "cannot reshape " + shape_string(in) + " to " + shape_string(l.target));
      return l.target;
    case LayerKind::crop:
      if (in.size() != 3 || l.target.size() != 2 || l.target[0] == 0 || l.target[1] == 0 ||
          l.target[0] > in[0] || l.target[1] > in[1])
        throw ShapeError(where(i) + "invalid crop of " + shape_string(in));
      return {l.target[0], l.target[1], in[2]};
    case LayerKind::flatten:
      return {numel(in)};
  }
  throw std::logic_error("unknown layer kind");
}

// Activation that the output of layer i feeds, looking through layers that
// do not change the scale of the signal.
Activation next_activation(const NetworkSpec& spec, std::size_t i) {
  for (std::size_t j = i + 1; j < spec.layers.size(); ++j) {
    const auto& l = spec.layers[j];
    if (l.kind == LayerKind::activation) return l.activation;
    if (l.kind == LayerKind::dense || l.kind == LayerKind::conv || l.kind == LayerKind::deconv) break;
  }
  return Activation::linear;
}

Tensor uniform_tensor(Shape shape, double bound, Rng& rng) {
  Tensor t(std::move(shape));
  for (auto& v : t.data()) v = rng.uniform(-bound, bound);
  return t;
}

}  // namespace

std::vector<Shape> propagate_shapes(const NetworkSpec& spec) {
  if (spec.input_shape.empty() || numel(spec.input_shape) == 0)
    throw std::invalid_argument("network input shape must be non-empty");
  std::vector<Shape> shapes;
  Shape cur = spec.input_shape;
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    cur = propagate_one(spec.layers[i], cur, i);
    shapes.push_back(cur);
  }
  return shapes;
}

Shape output_shape(const NetworkSpec& spec) {
  const auto shapes = propagate_shapes(spec);
  return shapes.empty() ? spec.input_shape : shapes.back();
}

ParameterStore init_params(const NetworkSpec& spec, std::uint64_t seed) {
  const auto shapes = propagate_shapes(spec);
  ParameterStore store;
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const auto& l = spec.layers[i];
    const Shape& in = i == 0 ? spec.input_shape : shapes[i - 1];
    const std::string prefix = layer_prefix(i);
    Rng rng(derive_seed(seed, i));
    std::size_t fan_in = 0, fan_out = 0;
    Shape kernel_shape;
    switch (l.kind) {
      case LayerKind::dense:
        fan_in = in[0];
        fan_out = l.units;
        kernel_shape = {in[0], l.units};
        break;
      case LayerKind::conv:
        fan_in = l.kernel_h * l.kernel_w * in[2];
        fan_out = l.kernel_h * l.kernel_w * l.units;
        kernel_shape = {l.kernel_h, l.kernel_w, in[2], l.units};
        break;
      case LayerKind::deconv:
        fan_in = l.kernel_h * l.kernel_w * in[2];
        fan_out = l.kernel_h * l.kernel_w * l.units;
        kernel_shape = {l.kernel_h, l.kernel_w, l.units, in[2]};
        break;
      case LayerKind::batchnorm:
        store.emplace(prefix + ".gamma", Tensor({in.back()}, 1.0));
        store.emplace(prefix + ".beta", Tensor({in.back()}, 0.0));
        continue;
      default:
        continue;
    }
    const bool he = next_activation(spec, i) == Activation::leaky_relu;
    const double bound = he ? std::sqrt(6.0 / static_cast<double>(fan_in))
                            : std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    store.emplace(prefix + ".kernel", uniform_tensor(kernel_shape, bound, rng));
    store.emplace(prefix + ".bias", Tensor({l.units}, 0.0));
  }
  return store;
}

BatchNormState init_batchnorm_state(const NetworkSpec& spec) {
  const auto shapes = propagate_shapes(spec);
  BatchNormState state;
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    if (spec.layers[i].kind != LayerKind::batchnorm) continue;
    const std::size_t c = shapes[i].back();
    state.layers.emplace(layer_prefix(i), RunningStats{Tensor({c}, 0.0), Tensor({c}, 1.0)});
  }
  return state;
}

namespace {

const ad::Var& param(const ParamVars& params, const std::string& name) {
  auto it = params.find(name);
  if (it == params.end()) throw std::invalid_argument("missing parameter " + name);
  return it->second;
}

ad::Var batchnorm(const ad::Var& x, const ParamVars& params, const std::string& prefix, const ForwardOptions& opt) {
  const ad::Var& gamma = param(params, prefix + ".gamma");
  const ad::Var& beta = param(params, prefix + ".beta");
  const Shape& shape = x.shape();
  const double eps = opt.bn_state ? opt.bn_state->eps : 1e-5;
  if (opt.mode == Mode::train) {
    const double count = static_cast<double>(x.size() / shape.back());
    const ad::Var mu = ad::scale(ad::sum_channels(x), 1.0 / count);
    const ad::Var centered = ad::sub(x, ad::broadcast_channels(mu, shape));
    const ad::Var var = ad::scale(ad::sum_channels(ad::square(centered)), 1.0 / count);
    const ad::Var inv_std = ad::div(ad::constant(1.0), ad::sqrt(ad::shift(var, eps)));
    const ad::Var gain = ad::mul(gamma, inv_std);
    if (opt.bn_state && opt.update_stats) {
      auto& rs = opt.bn_state->layers.at(prefix);
      const double m = opt.bn_state->momentum;
      for (std::size_t c = 0; c < rs.mean.size(); ++c) {
        rs.mean[c] = m * rs.mean[c] + (1.0 - m) * mu.value()[c];
        rs.var[c] = m * rs.var[c] + (1.0 - m) * var.value()[c];
      }
    }
    return ad::add_bias(ad::mul(centered, ad::broadcast_channels(gain, shape)), beta);
  }
  if (!opt.bn_state) throw std::invalid_argument("eval-mode batch norm needs running statistics");
  const auto& rs = opt.bn_state->layers.at(prefix);
  Tensor inv_std(rs.var.shape());
  for (std::size_t c = 0; c < inv_std.size(); ++c) inv_std[c] = 1.0 / std::sqrt(rs.var[c] + eps);
  const ad::Var centered = ad::sub(x, ad::broadcast_channels(ad::constant(rs.mean), shape));
  const ad::Var gain = ad::mul(gamma, ad::constant(inv_std));
  return ad::add_bias(ad::mul(centered, ad::broadcast_channels(gain, shape)), beta);
}

ad::Var with_batch(const ad::Var& x, const Shape& per_sample) {
  Shape s{x.shape()[0]};
  s.insert(s.end(), per_sample.begin(), per_sample.end());
  return ad::reshape(x, s);
}

}  // namespace

ad::Var forward(const NetworkSpec& spec, const ParamVars& params, const ad::Var& input, Rng& rng,
                const ForwardOptions& options) {
  const auto shapes = propagate_shapes(spec);
  const Shape& in = input.shape();
  if (in.size() != spec.input_shape.size() + 1 ||
      !std::equal(spec.input_shape.begin(), spec.input_shape.end(), in.begin() + 1))
    throw ShapeError("network input " + shape_string(spec.input_shape) + " expected per sample, got batch " +
                     shape_string(in));
  const std::size_t end = options.end_layer == 0 ? spec.layers.size() : options.end_layer;
  ad::Var x = input;
  for (std::size_t i = 0; i < end && i < spec.layers.size(); ++i) {
    const auto& l = spec.layers[i];
    const std::string prefix = layer_prefix(i);
    switch (l.kind) {
      case LayerKind::dense:
        x = ad::add_bias(ad::matmul(x, param(params, prefix + ".kernel")), param(params, prefix + ".bias"));
        break;
      case LayerKind::conv:
        x = ad::add_bias(ad::conv2d(x, param(params, prefix + ".kernel"), {l.stride_h, l.stride_w, l.padding}),
                         param(params, prefix + ".bias"));
        break;
      case LayerKind::deconv:
        x = ad::add_bias(
            ad::conv2d_transpose(x, param(params, prefix + ".kernel"), {l.stride_h, l.stride_w, l.padding}),
            param(params, prefix + ".bias"));
        break;
      case LayerKind::batchnorm:
        x = batchnorm(x, params, prefix, options);
        break;
      case LayerKind::dropout:
        if (options.mode == Mode::train && l.rate > 0.0) {
          Tensor mask(x.shape());
          const double keep = 1.0 - l.rate;
          for (auto& m : mask.data()) m = rng.uniform() < keep ? 1.0 / keep : 0.0;
          x = ad::mul(x, ad::constant(std::move(mask)));
        }
        break;
      case LayerKind::activation:
        switch (l.activation) {
          case Activation::linear: break;
          case Activation::leaky_relu: x = ad::leaky_relu(x, l.alpha); break;
          case Activation::tanh: x = ad::tanh(x); break;
          case Activation::sigmoid: x = ad::sigmoid(x); break;
        }
        break;
      case LayerKind::reshape:
      case LayerKind::flatten:
        x = with_batch(x, shapes[i]);
        break;
      case LayerKind::crop:
        x = ad::crop2d(x, l.target[0], l.target[1]);
        break;
    }
  }
  return x;
}

// ---------------------------------------------------------------------------
// JSON

namespace {

const char* kind_name(LayerKind k) {
  switch (k) {
    case LayerKind::dense: return "dense";
    case LayerKind::conv: return "conv";
    case LayerKind::deconv: return "deconv";
    case LayerKind::batchnorm: return "batchnorm";
    case LayerKind::dropout: return "dropout";
    case LayerKind::activation: return "activation";
    case LayerKind::reshape: return "reshape";
    case LayerKind::crop: return "crop";
    case LayerKind::flatten: return "flatten";
  }
  return "?";
}

const char* activation_name(Activation a) {
  switch (a) {
    case Activation::linear: return "linear";
    case Activation::leaky_relu: return "leaky_relu";
    case Activation::tanh: return "tanh";
    case Activation::sigmoid: return "sigmoid";
  }
  return "?";
}

template <typename E, std::size_t N>
E parse_enum(const std::string& s, const std::array<E, N>& values, const char* (*name)(E)) {
  for (E v : values)
    if (s == name(v)) return v;
  throw std::invalid_argument("unknown enum value '" + s + "'");
}

}  // namespace

nlohmann::json to_json(const NetworkSpec& spec) {
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& l : spec.layers) {
    nlohmann::json j{{"kind", kind_name(l.kind)}};
    switch (l.kind) {
      case LayerKind::dense:
        j["units"] = l.units;
        break;
      case LayerKind::conv:
      case LayerKind::deconv:
        j["filters"] = l.units;
        j["kernel"] = {l.kernel_h, l.kernel_w};
        j["stride"] = {l.stride_h, l.stride_w};
        j["padding"] = l.padding == ad::Padding::same ? "same" : "valid";
        break;
      case LayerKind::dropout:
        j["rate"] = l.rate;
        break;
      case LayerKind::activation:
        j["activation"] = activation_name(l.activation);
        if (l.activation == Activation::leaky_relu) j["alpha"] = l.alpha;
        break;
      case LayerKind::reshape:
        j["target"] = l.target;
        break;
      case LayerKind::crop:
        j["extents"] = l.target;
        break;
      default:
        break;
    }
    layers.push_back(std::move(j));
  }
  return {{"input_shape", spec.input_shape}, {"layers", std::move(layers)}};
}

NetworkSpec network_from_json(const nlohmann::json& j) {
  NetworkSpec spec;
  spec.input_shape = j.at("input_shape").get<Shape>();
  static const std::array<LayerKind, 9> kinds{LayerKind::dense,      LayerKind::conv,    LayerKind::deconv,
                                              LayerKind::batchnorm,  LayerKind::dropout, LayerKind::activation,
                                              LayerKind::reshape,    LayerKind::crop,    LayerKind::flatten};
  static const std::array<Activation, 4> acts{Activation::linear, Activation::leaky_relu, Activation::tanh,
                                              Activation::sigmoid};
  for (const auto& lj : j.at("layers")) {
    LayerSpec l;
    l.kind = parse_enum(lj.at("kind").get<std::string>(), kinds, kind_name);
    switch (l.kind) {
      case LayerKind::dense:
        l.units = lj.at("units").get<std::size_t>();
        break;
      case LayerKind::conv:
      case LayerKind::deconv: {
        l.units = lj.at("filters").get<std::size_t>();
        const auto k = lj.at("kernel").get<std::vector<std::size_t>>();
        const auto s = lj.at("stride").get<std::vector<std::size_t>>();
        if (k.size() != 2 || s.size() != 2) throw std::invalid_argument("kernel and stride need two extents");
        l.kernel_h = k[0];
        l.kernel_w = k[1];
        l.stride_h = s[0];
        l.stride_w = s[1];
        const auto pad = lj.at("padding").get<std::string>();
        if (pad != "same" && pad != "valid") throw std::invalid_argument("unknown padding '" + pad + "'");
        l.padding = pad == "same" ? ad::Padding::same : ad::Padding::valid;
        break;
      }
      case LayerKind::dropout:
        l.rate = lj.at("rate").get<double>();
        break;
      case LayerKind::activation:
        l.activation = parse_enum(lj.at("activation").get<std::string>(), acts, activation_name);
        if (lj.contains("alpha")) l.alpha = lj.at("alpha").get<double>();
        break;
      case LayerKind::reshape:
        l.target = lj.at("target").get<Shape>();
        break;
      case LayerKind::crop:
        l.target = lj.at("extents").get<Shape>();
        break;
      default:
        break;
    }
    spec.layers.push_back(std::move(l));
  }
  propagate_shapes(spec);
  return spec;
}

}  // namespace tabgan::nn
