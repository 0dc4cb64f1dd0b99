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

// Reverse-mode differentiation over dense tensors.
//
// Operations evaluate eagerly and record a graph. `grad` walks the graph
// backwards, and every backward rule is itself written in terms of graph
// operations, so with `build_graph` the returned gradients are ordinary
// nodes that can be differentiated again. The gradient penalty of the
// critic needs exactly that: d/dtheta of a function of d critic / d input.
//
// Broadcasting is limited to scalar-with-tensor in the binary elementwise
// operations; everything else is explicit.

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "tabgan/kernels.hpp"
#include "tabgan/tensor.hpp"

namespace tabgan::ad {

using kernels::Padding;

class Var;
struct Node;

/// Backward rule: given the node, its output gradient and which parents need
/// a gradient, return one entry per parent (empty Var when not needed).
using BackwardFn = std::function<std::vector<Var>(const Var& self, const Var& grad,
                                                  const std::vector<bool>& needs)>;

struct Node {
  std::string op;
  std::vector<Var> parents;
  Tensor value;
  bool requires_grad = false;
  BackwardFn backward;
};

class Var {
 public:
  Var() = default;
  explicit Var(std::shared_ptr<Node> node) : node_(std::move(node)) {}

  const Tensor& value() const { return node_->value; }
  const Shape& shape() const { return node_->value.shape(); }
  std::size_t size() const { return node_->value.size(); }
  bool requires_grad() const { return node_ && node_->requires_grad; }
  const std::string& op() const { return node_->op; }
  const std::shared_ptr<Node>& node() const { return node_; }
  bool defined() const { return static_cast<bool>(node_); }
  double item() const { return node_->value.item(); }

 private:
  std::shared_ptr<Node> node_;
};

/// Leaf that never receives a gradient.
Var constant(Tensor value);
Var constant(double value);
/// Leaf that gradients can be taken with respect to.
Var variable(Tensor value);
/// Copy of the value with the graph history dropped.
Var detach(const Var& v);

/// While alive, operations on this thread record no graph.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};
bool grad_enabled();

// Elementwise. Binary kinds accept equal shapes or a scalar operand.
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var div(const Var& a, const Var& b);
Var neg(const Var& a);
Var scale(const Var& a, double c);
Var shift(const Var& a, double c);
Var leaky_relu(const Var& a, double alpha);
Var tanh(const Var& a);
Var sigmoid(const Var& a);
Var softplus(const Var& a);
Var square(const Var& a);
Var sqrt(const Var& a);

inline Var operator+(const Var& a, const Var& b) { return add(a, b); }
inline Var operator-(const Var& a, const Var& b) { return sub(a, b); }
inline Var operator*(const Var& a, const Var& b) { return mul(a, b); }
inline Var operator/(const Var& a, const Var& b) { return div(a, b); }
inline Var operator-(const Var& a) { return neg(a); }

// Reductions and their broadcast duals.
Var sum(const Var& a);
Var mean(const Var& a);
Var broadcast(const Var& scalar, const Shape& shape);
/// [B, ...] -> [B]: sum over everything but the leading axis.
Var sum_rows(const Var& a);
Var broadcast_rows(const Var& v, const Shape& shape);
/// [..., C] -> [C]: sum over everything but the trailing axis.
Var sum_channels(const Var& a);
Var broadcast_channels(const Var& v, const Shape& shape);
/// x[..., C] + bias[C]
Var add_bias(const Var& x, const Var& bias);

// Structure.
Var reshape(const Var& a, const Shape& shape);
Var transpose(const Var& a);
Var matmul(const Var& a, const Var& b);
Var concat_last(const Var& a, const Var& b);
Var slice_last(const Var& a, std::size_t offset, std::size_t count);
Var embed_last(const Var& a, std::size_t offset, std::size_t total);
/// Keep the top-left h x w window of an NHWC tensor.
Var crop2d(const Var& x, std::size_t h, std::size_t w);
/// Zero-pad an NHWC tensor at the bottom/right to h x w.
Var pad2d(const Var& x, std::size_t h, std::size_t w);

struct Conv2dOptions {
  std::size_t stride_h = 1;
  std::size_t stride_w = 1;
  Padding padding = Padding::same;
};

/// Cross-correlation of NHWC input with a [kh, kw, c_in, c_out] kernel.
Var conv2d(const Var& input, const Var& kernel, Conv2dOptions opt = {});
/// Transposed convolution: the adjoint of conv2d(., kernel) applied as a
/// forward map. `kernel` is [kh, kw, c_out, c_in] from the point of view of
/// this op (i.e. the kernel of the convolution it is the adjoint of). Output
/// extents default to in * stride for same padding and (in - 1) * stride + k
/// for valid padding.
Var conv2d_transpose(const Var& input, const Var& kernel, Conv2dOptions opt = {},
                     std::size_t out_h = 0, std::size_t out_w = 0);
/// Adjoint of conv2d in the kernel argument, for kernels of extent kh x kw.
Var conv2d_filter_grad(const Var& input, const Var& output_grad, std::size_t kh, std::size_t kw,
                       Conv2dOptions opt = {});

struct GradOptions {
  /// Record the backward pass so the gradients can be differentiated again.
  bool build_graph = false;
  /// Return zeros for `wrt` entries the output does not depend on instead
  /// of throwing.
  bool allow_unused = false;
};

/// Gradients of a scalar `output` with respect to each of `wrt`.
std::vector<Var> grad(const Var& output, const std::vector<Var>& wrt, GradOptions opt = {});

}  // namespace tabgan::ad
