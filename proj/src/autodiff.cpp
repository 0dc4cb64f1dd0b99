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

#include "tabgan/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <unordered_map>
#include <unordered_set>

namespace tabgan::ad {

namespace {

thread_local bool t_grad_enabled = true;

Var make(const char* op, Tensor value, std::vector<Var> parents, BackwardFn backward) {
  if (!value.all_finite()) throw NumericError(std::string(op) + ": non-finite value");
  auto node = std::make_shared<Node>();
  node->op = op;
  node->value = std::move(value);
  bool tracked = false;
  if (t_grad_enabled)
    for (const auto& p : parents) tracked = tracked || p.requires_grad();
  if (tracked) {
    node->requires_grad = true;
    node->parents = std::move(parents);
    node->backward = std::move(backward);
  }
  return Var(std::move(node));
}

enum class Bcast { none, a_scalar, b_scalar };

Bcast broadcast_kind(const Var& a, const Var& b, const char* op) {
  if (a.shape() == b.shape()) return Bcast::none;
  if (b.size() == 1) return Bcast::b_scalar;
  if (a.size() == 1) return Bcast::a_scalar;
  throw ShapeError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                   shape_string(b.shape()));
}

// Sum a gradient down to the shape of a scalar operand when it was broadcast.
Var reduce_like(const Var& g, const Shape& target) {
  if (g.shape() == target) return g;
  return reshape(sum(g), target);
}

template <typename F>
Tensor binary_values(const Var& a, const Var& b, Bcast kind, F f) {
  const auto& av = a.value();
  const auto& bv = b.value();
  if (kind == Bcast::none) {
    Tensor out(av.shape());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(av[i], bv[i]);
    return out;
  }
  if (kind == Bcast::b_scalar) {
    Tensor out(av.shape());
    const double s = bv[0];
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(av[i], s);
    return out;
  }
  Tensor out(bv.shape());
  const double s = av[0];
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(s, bv[i]);
  return out;
}

template <typename F>
Tensor unary_values(const Tensor& a, F f) {
  Tensor out(a.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(a[i]);
  return out;
}

void require_rank(const Var& v, std::size_t rank, const char* op) {
  if (v.shape().size() != rank)
    throw ShapeError(std::string(op) + ": expected rank " + std::to_string(rank) + ", got " +
                     shape_string(v.shape()));
}

}  // namespace

NoGradGuard::NoGradGuard() : previous_(t_grad_enabled) { t_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { t_grad_enabled = previous_; }
bool grad_enabled() { return t_grad_enabled; }

Var constant(Tensor value) {
  if (!value.all_finite()) throw NumericError("constant: non-finite value");
  auto node = std::make_shared<Node>();
  node->op = "constant";
  node->value = std::move(value);
  return Var(std::move(node));
}

Var constant(double value) { return constant(Tensor::scalar(value)); }

Var variable(Tensor value) {
  if (!value.all_finite()) throw NumericError("variable: non-finite value");
  auto node = std::make_shared<Node>();
  node->op = "variable";
  node->value = std::move(value);
  node->requires_grad = true;
  return Var(std::move(node));
}

Var detach(const Var& v) { return constant(v.value()); }

// ---------------------------------------------------------------------------
// Elementwise

Var add(const Var& a, const Var& b) {
  const auto kind = broadcast_kind(a, b, "add");
  return make("add", binary_values(a, b, kind, [](double x, double y) { return x + y; }), {a, b},
              [](const Var& self, const Var& g, const std::vector<bool>& needs) {
                const auto& p = self.node()->parents;
                std::vector<Var> out(2);
                if (needs[0]) out[0] = reduce_like(g, p[0].shape());
                if (needs[1]) out[1] = reduce_like(g, p[1].shape());
                return out;
              });
}

Var sub(const Var& a, const Var& b) {
  const auto kind = broadcast_kind(a, b, "sub");
  return make("sub", binary_values(a, b, kind, [](double x, double y) { return x - y; }), {a, b},
              [](const Var& self, const Var& g, const std::vector<bool>& needs) {
                const auto& p = self.node()->parents;
                std::vector<Var> out(2);
                if (needs[0]) out[0] = reduce_like(g, p[0].shape());
                if (needs[1]) out[1] = reduce_like(neg(g), p[1].shape());
                return out;
              });
}

Var mul(const Var& a, const Var& b) {
  const auto kind = broadcast_kind(a, b, "mul");
  return make("mul", binary_values(a, b, kind, [](double x, double y) { return x * y; }), {a, b},
              [](const Var& self, const Var& g, const std::vector<bool>& needs) {
                const auto& p = self.node()->parents;
                std::vector<Var> out(2);
                if (needs[0]) out[0] = reduce_like(mul(g, p[1]), p[0].shape());
                if (needs[1]) out[1] = reduce_like(mul(g, p[0]), p[1].shape());
                return out;
              });
}

Var div(const Var& a, const Var& b) {
  const auto kind = broadcast_kind(a, b, "div");
  return make("div", binary_values(a, b, kind, [](double x, double y) { return x / y; }), {a, b},
              [](const Var& self, const Var& g, const std::vector<bool>& needs) {
                const auto& p = self.node()->parents;
                std::vector<Var> out(2);
                if (needs[0]) out[0] = reduce_like(div(g, p[1]), p[0].shape());
                if (needs[1]) out[1] = reduce_like(neg(div(mul(g, self), p[1])), p[1].shape());
                return out;
              });
}

Var neg(const Var& a) {
  return make("neg", unary_values(a.value(), [](double x) { return -x; }), {a},
              [](const Var&, const Var& g, const std::vector<bool>&) { return std::vector<Var>{neg(g)}; });
}

Var scale(const Var& a, double c) {
  return make("scale", unary_values(a.value(), [c](double x) { return c * x; }), {a},
              [c](const Var&, const Var& g, const std::vector<bool>&) {
                return std::vector<Var>{scale(g, c)};
              });
}

Var shift(const Var& a, double c) {
  return make("shift", unary_values(a.value(), [c](double x) { return x + c; }), {a},
              [](const Var&, const Var& g, const std::vector<bool>&) { return std::vector<Var>{g}; });
}

Var leaky_relu(const Var& a, double alpha) {
  return make("leaky_relu", unary_values(a.value(), [alpha](double x) { return x > 0.0 ? x : alpha * x; }),
              {a}, [alpha](const Var& self, const Var& g, const std::vector<bool>&) {
                // The slope is piecewise constant, so it enters the backward
                // graph as a constant; slope alpha is used at exactly zero.
                const auto& x = self.node()->parents[0].value();
                const Tensor slope = unary_values(x, [alpha](double v) { return v > 0.0 ? 1.0 : alpha; });
                return std::vector<Var>{mul(g, constant(slope))};
              });
}

Var tanh(const Var& a) {
  return make("tanh", unary_values(a.value(), [](double x) { return std::tanh(x); }), {a},
              [](const Var& self, const Var& g, const std::vector<bool>&) {
                return std::vector<Var>{mul(g, shift(neg(square(self)), 1.0))};
              });
}

Var sigmoid(const Var& a) {
  return make("sigmoid",
              unary_values(a.value(),
                           [](double x) {
                             if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
                             const double e = std::exp(x);
                             return e / (1.0 + e);
                           }),
              {a}, [](const Var& self, const Var& g, const std::vector<bool>&) {
                return std::vector<Var>{mul(g, mul(self, shift(neg(self), 1.0)))};
              });
}

Var softplus(const Var& a) {
  return make("softplus",
              unary_values(a.value(),
                           [](double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::fabs(x))); }),
              {a}, [](const Var& self, const Var& g, const std::vector<bool>&) {
                return std::vector<Var>{mul(g, sigmoid(self.node()->parents[0]))};
              });
}

Var square(const Var& a) {
  return make("square", unary_values(a.value(), [](double x) { return x * x; }), {a},
              [](const Var& self, const Var& g, const std::vector<bool>&) {
                return std::vector<Var>{mul(g, scale(self.node()->parents[0], 2.0))};
              });
}

Var sqrt(const Var& a) {
  for (double v : a.value().data())
    if (v < 0.0) throw NumericError("sqrt: negative argument");
  return make("sqrt", unary_values(a.value(), [](double x) { return std::sqrt(x); }), {a},
              [](const Var& self, const Var& g, const std::vector<bool>&) {
                return std::vector<Var>{div(g, scale(self, 2.0))};
              });
}

// ---------------------------------------------------------------------------
// Reductions

Var sum(const Var& a) {
  return make("sum", Tensor::scalar(compensated_sum(a.value().data())), {a},
              [](const Var& self, const Var& g, const std::vector<bool>&) {
                return std::vector<Var>{broadcast(g, self.node()->parents[0].shape())};
              });
}

Var mean(const Var& a) { return scale(sum(a), 1.0 / static_cast<double>(a.size())); }

Var broadcast(const Var& s, const Shape& shape) {
  if (s.size() != 1) throw ShapeError("broadcast: source must be scalar, got " + shape_string(s.shape()));
  return make("broadcast", Tensor(shape, s.value()[0]), {s},
              [](const Var& self, const Var& g, const std::vector<bool>&) {
                return std::vector<Var>{reshape(sum(g), self.node()->parents[0].shape())};
              });
}

Var sum_rows(const Var& a) {
  const std::size_t rows = a.shape()[0];
  const std::size_t cols = a.size() / rows;
  Tensor out({rows});
  for (std::size_t r = 0; r < rows; ++r)
    out[r] = compensated_sum(a.value().data().subspan(r * cols, cols));
  return make("sum_rows", std::move(out), {a}, [](const Var& self, const Var& g, const std::vector<bool>&) {
    return std::vector<Var>{broadcast_rows(g, self.node()->parents[0].shape())};
  });
}

Var broadcast_rows(const Var& v, const Shape& shape) {
  if (v.shape() != Shape{shape[0]})
    throw ShapeError("broadcast_rows: " + shape_string(v.shape()) + " onto " + shape_string(shape));
  Tensor out(shape);
  const std::size_t cols = out.size() / shape[0];
  for (std::size_t r = 0; r < shape[0]; ++r)
    std::fill_n(out.data().begin() + r * cols, cols, v.value()[r]);
  return make("broadcast_rows", std::move(out), {v}, [](const Var&, const Var& g, const std::vector<bool>&) {
    return std::vector<Var>{sum_rows(g)};
  });
}

Var sum_channels(const Var& a) {
  const std::size_t c = a.shape().back();
  const std::size_t rows = a.size() / c;
  Tensor out({c});
  std::vector<double> column(rows);
  for (std::size_t j = 0; j < c; ++j) {
    for (std::size_t r = 0; r < rows; ++r) column[r] = a.value()[r * c + j];
    out[j] = compensated_sum(column);
  }
  return make("sum_channels", std::move(out), {a},
              [](const Var& self, const Var& g, const std::vector<bool>&) {
                return std::vector<Var>{broadcast_channels(g, self.node()->parents[0].shape())};
              });
}

Var broadcast_channels(const Var& v, const Shape& shape) {
  if (v.shape() != Shape{shape.back()})
    throw ShapeError("broadcast_channels: " + shape_string(v.shape()) + " onto " + shape_string(shape));
  Tensor out(shape);
  const std::size_t c = shape.back();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = v.value()[i % c];
  return make("broadcast_channels", std::move(out), {v},
              [](const Var&, const Var& g, const std::vector<bool>&) {
                return std::vector<Var>{sum_channels(g)};
              });
}

Var add_bias(const Var& x, const Var& bias) {
  if (bias.shape() != Shape{x.shape().back()})
    throw ShapeError("add_bias: bias " + shape_string(bias.shape()) + " for input " + shape_string(x.shape()));
  Tensor out = x.value();
  const std::size_t c = bias.size();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += bias.value()[i % c];
  return make("add_bias", std::move(out), {x, bias},
              [](const Var&, const Var& g, const std::vector<bool>& needs) {
                std::vector<Var> res(2);
                if (needs[0]) res[0] = g;
                if (needs[1]) res[1] = sum_channels(g);
                return res;
              });
}

// ---------------------------------------------------------------------------
// Structure

Var reshape(const Var& a, const Shape& shape) {
  if (a.shape() == shape) return a;
  return make("reshape", a.value().reshaped(shape), {a},
              [](const Var& self, const Var& g, const std::vector<bool>&) {
                return std::vector<Var>{reshape(g, self.node()->parents[0].shape())};
              });
}

Var transpose(const Var& a) {
  require_rank(a, 2, "transpose");
  const std::size_t m = a.shape()[0], n = a.shape()[1];
  Tensor out({n, m});
  kernels::transpose(a.value().data(), out.data(), m, n);
  return make("transpose", std::move(out), {a}, [](const Var&, const Var& g, const std::vector<bool>&) {
    return std::vector<Var>{transpose(g)};
  });
}

Var matmul(const Var& a, const Var& b) {
  require_rank(a, 2, "matmul");
  require_rank(b, 2, "matmul");
  const std::size_t m = a.shape()[0], k = a.shape()[1], p = b.shape()[1];
  if (b.shape()[0] != k)
    throw ShapeError("matmul: inner extents differ " + shape_string(a.shape()) + " * " + shape_string(b.shape()));
  Tensor out({m, p});
  kernels::matmul(a.value().data(), b.value().data(), out.data(), m, k, p);
  return make("matmul", std::move(out), {a, b}, [](const Var& self, const Var& g, const std::vector<bool>& needs) {
    const auto& par = self.node()->parents;
    std::vector<Var> res(2);
    if (needs[0]) res[0] = matmul(g, transpose(par[1]));
    if (needs[1]) res[1] = matmul(transpose(par[0]), g);
    return res;
  });
}

Var concat_last(const Var& a, const Var& b) {
  Shape sa = a.shape(), sb = b.shape();
  const std::size_t ca = sa.back(), cb = sb.back();
  sa.pop_back();
  sb.pop_back();
  if (sa != sb) throw ShapeError("concat_last: leading extents differ " + shape_string(a.shape()) + " vs " + shape_string(b.shape()));
  Shape so = sa;
  so.push_back(ca + cb);
  Tensor out(so);
  const std::size_t rows = a.size() / ca;
  for (std::size_t r = 0; r < rows; ++r) {
    std::copy_n(a.value().data().begin() + r * ca, ca, out.data().begin() + r * (ca + cb));
    std::copy_n(b.value().data().begin() + r * cb, cb, out.data().begin() + r * (ca + cb) + ca);
  }
  return make("concat_last", std::move(out), {a, b}, [ca, cb](const Var&, const Var& g, const std::vector<bool>& needs) {
    std::vector<Var> res(2);
    if (needs[0]) res[0] = slice_last(g, 0, ca);
    if (needs[1]) res[1] = slice_last(g, ca, cb);
    return res;
  });
}

Var slice_last(const Var& a, std::size_t offset, std::size_t count) {
  const std::size_t c = a.shape().back();
  if (count == 0 || offset + count > c) throw ShapeError("slice_last: range out of bounds");
  Shape so = a.shape();
  so.back() = count;
  Tensor out(so);
  const std::size_t rows = a.size() / c;
  for (std::size_t r = 0; r < rows; ++r)
    std::copy_n(a.value().data().begin() + r * c + offset, count, out.data().begin() + r * count);
  return make("slice_last", std::move(out), {a}, [offset, c](const Var&, const Var& g, const std::vector<bool>&) {
    return std::vector<Var>{embed_last(g, offset, c)};
  });
}

Var embed_last(const Var& a, std::size_t offset, std::size_t total) {
  const std::size_t c = a.shape().back();
  if (offset + c > total) throw ShapeError("embed_last: range out of bounds");
  Shape so = a.shape();
  so.back() = total;
  Tensor out(so);
  const std::size_t rows = a.size() / c;
  for (std::size_t r = 0; r < rows; ++r)
    std::copy_n(a.value().data().begin() + r * c, c, out.data().begin() + r * total + offset);
  return make("embed_last", std::move(out), {a}, [offset, c](const Var&, const Var& g, const std::vector<bool>&) {
    return std::vector<Var>{slice_last(g, offset, c)};
  });
}

namespace {
// Copy the top-left window shared by two NHWC layouts.
void copy_window(const Tensor& src, Tensor& dst, std::size_t h, std::size_t w) {
  const auto& s = src.shape();
  const auto& d = dst.shape();
  const std::size_t c = s[3];
  for (std::size_t b = 0; b < s[0]; ++b)
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < w; ++x)
        std::copy_n(src.data().begin() + ((b * s[1] + y) * s[2] + x) * c, c,
                    dst.data().begin() + ((b * d[1] + y) * d[2] + x) * c);
}
}  // namespace

Var crop2d(const Var& x, std::size_t h, std::size_t w) {
  require_rank(x, 4, "crop2d");
  const auto& s = x.shape();
  if (h > s[1] || w > s[2] || h == 0 || w == 0)
    throw ShapeError("crop2d: window " + std::to_string(h) + "x" + std::to_string(w) + " outside " + shape_string(s));
  if (h == s[1] && w == s[2]) return x;
  Tensor out({s[0], h, w, s[3]});
  copy_window(x.value(), out, h, w);
  const std::size_t H = s[1], W = s[2];
  return make("crop2d", std::move(out), {x}, [H, W](const Var&, const Var& g, const std::vector<bool>&) {
    return std::vector<Var>{pad2d(g, H, W)};
  });
}

Var pad2d(const Var& x, std::size_t h, std::size_t w) {
  require_rank(x, 4, "pad2d");
  const auto& s = x.shape();
  if (h < s[1] || w < s[2]) throw ShapeError("pad2d: target smaller than input " + shape_string(s));
  if (h == s[1] && w == s[2]) return x;
  Tensor out({s[0], h, w, s[3]});
  copy_window(x.value(), out, s[1], s[2]);
  const std::size_t H = s[1], W = s[2];
  return make("pad2d", std::move(out), {x}, [H, W](const Var&, const Var& g, const std::vector<bool>&) {
    return std::vector<Var>{crop2d(g, H, W)};
  });
}

// ---------------------------------------------------------------------------
// Convolution family. conv2d, its input adjoint and its filter adjoint are
// bilinear and their derivatives close over the same three operations.

namespace {

kernels::ConvGeometry geometry_for(const Shape& in, std::size_t kh, std::size_t kw, std::size_t out_c,
                                   const Conv2dOptions& opt) {
  return kernels::conv_geometry(in[0], in[1], in[2], in[3], kh, kw, out_c, opt.stride_h, opt.stride_w,
                                opt.padding);
}

}  // namespace

Var conv2d(const Var& input, const Var& kernel, Conv2dOptions opt) {
  require_rank(input, 4, "conv2d");
  require_rank(kernel, 4, "conv2d kernel");
  const auto& ks = kernel.shape();
  if (ks[2] != input.shape()[3])
    throw ShapeError("conv2d: kernel " + shape_string(ks) + " expects " + std::to_string(ks[2]) +
                     " input channels, input is " + shape_string(input.shape()));
  const auto g = geometry_for(input.shape(), ks[0], ks[1], ks[3], opt);
  Tensor out({g.batch, g.out_h, g.out_w, g.out_c});
  kernels::conv2d(g, input.value().data(), kernel.value().data(), out.data());
  return make("conv2d", std::move(out), {input, kernel},
              [opt](const Var& self, const Var& gy, const std::vector<bool>& needs) {
                const auto& p = self.node()->parents;
                std::vector<Var> res(2);
                if (needs[0]) res[0] = conv2d_transpose(gy, p[1], opt, p[0].shape()[1], p[0].shape()[2]);
                if (needs[1]) res[1] = conv2d_filter_grad(p[0], gy, p[1].shape()[0], p[1].shape()[1], opt);
                return res;
              });
}

Var conv2d_transpose(const Var& input, const Var& kernel, Conv2dOptions opt, std::size_t out_h,
                     std::size_t out_w) {
  require_rank(input, 4, "conv2d_transpose");
  require_rank(kernel, 4, "conv2d_transpose kernel");
  const auto& ys = input.shape();
  const auto& ks = kernel.shape();
  if (ks[3] != ys[3])
    throw ShapeError("conv2d_transpose: kernel " + shape_string(ks) + " expects " + std::to_string(ks[3]) +
                     " input channels, input is " + shape_string(ys));
  if (out_h == 0) out_h = opt.padding == Padding::same ? ys[1] * opt.stride_h : (ys[1] - 1) * opt.stride_h + ks[0];
  if (out_w == 0) out_w = opt.padding == Padding::same ? ys[2] * opt.stride_w : (ys[2] - 1) * opt.stride_w + ks[1];
  const auto g = geometry_for({ys[0], out_h, out_w, ks[2]}, ks[0], ks[1], ks[3], opt);
  if (g.out_h != ys[1] || g.out_w != ys[2])
    throw ShapeError("conv2d_transpose: output extents " + std::to_string(out_h) + "x" + std::to_string(out_w) +
                     " inconsistent with input " + shape_string(ys));
  Tensor out({g.batch, g.in_h, g.in_w, g.in_c});
  kernels::conv2d_input_adjoint(g, input.value().data(), kernel.value().data(), out.data());
  return make("conv2d_transpose", std::move(out), {input, kernel},
              [opt](const Var& self, const Var& gx, const std::vector<bool>& needs) {
                const auto& p = self.node()->parents;
                std::vector<Var> res(2);
                if (needs[0]) res[0] = conv2d(gx, p[1], opt);
                if (needs[1]) res[1] = conv2d_filter_grad(gx, p[0], p[1].shape()[0], p[1].shape()[1], opt);
                return res;
              });
}

Var conv2d_filter_grad(const Var& input, const Var& output_grad, std::size_t kh, std::size_t kw,
                       Conv2dOptions opt) {
  require_rank(input, 4, "conv2d_filter_grad");
  require_rank(output_grad, 4, "conv2d_filter_grad");
  const auto& xs = input.shape();
  const auto& ys = output_grad.shape();
  const auto g = geometry_for(xs, kh, kw, ys[3], opt);
  if (g.batch != ys[0] || g.out_h != ys[1] || g.out_w != ys[2])
    throw ShapeError("conv2d_filter_grad: output " + shape_string(ys) + " inconsistent with input " + shape_string(xs));
  Tensor out({kh, kw, g.in_c, g.out_c});
  kernels::conv2d_filter_adjoint(g, input.value().data(), output_grad.value().data(), out.data());
  return make("conv2d_filter_grad", std::move(out), {input, output_grad},
              [opt](const Var& self, const Var& gk, const std::vector<bool>& needs) {
                const auto& p = self.node()->parents;
                std::vector<Var> res(2);
                if (needs[0]) res[0] = conv2d_transpose(p[1], gk, opt, p[0].shape()[1], p[0].shape()[2]);
                if (needs[1]) res[1] = conv2d(p[0], gk, opt);
                return res;
              });
}

// ---------------------------------------------------------------------------
// Backward pass

std::vector<Var> grad(const Var& output, const std::vector<Var>& wrt, GradOptions opt) {
  if (!output.defined() || output.size() != 1)
    throw ShapeError("grad: output must be a scalar, got " +
                     (output.defined() ? shape_string(output.shape()) : std::string("undefined")));

  // Topological order (parents before children) over nodes that carry a
  // graph, collected iteratively.
  std::vector<std::shared_ptr<Node>> order;
  std::unordered_map<Node*, std::size_t> index;
  if (output.requires_grad()) {
    std::vector<std::pair<std::shared_ptr<Node>, std::size_t>> stack{{output.node(), 0}};
    std::unordered_set<Node*> visited{output.node().get()};
    while (!stack.empty()) {
      auto& [node, next] = stack.back();
      if (next < node->parents.size()) {
        const auto& p = node->parents[next++].node();
        if (p->requires_grad && visited.insert(p.get()).second) stack.push_back({p, 0});
      } else {
        index[node.get()] = order.size();
        order.push_back(node);
        stack.pop_back();
      }
    }
  }

  std::unordered_set<Node*> targets;
  for (const auto& w : wrt) {
    if (!w.defined()) throw std::invalid_argument("grad: undefined wrt entry");
    if (!index.count(w.node().get()) && !opt.allow_unused)
      throw std::invalid_argument("grad: parameter (" + w.op() + " " + shape_string(w.shape()) +
                                  ") is not in the graph of the output");
    targets.insert(w.node().get());
  }

  // A node is relevant when some target is reachable through its parents.
  std::vector<char> relevant(order.size(), 0);
  for (std::size_t i = 0; i < order.size(); ++i) {
    Node* n = order[i].get();
    bool r = targets.count(n) > 0;
    for (const auto& p : n->parents) {
      auto it = index.find(p.node().get());
      if (it != index.end() && relevant[it->second]) r = true;
    }
    relevant[i] = r;
  }

  std::unordered_map<Node*, Var> adjoint;
  {
    std::optional<NoGradGuard> no_grad;
    if (!opt.build_graph) no_grad.emplace();

    if (!order.empty()) adjoint[order.back().get()] = constant(Tensor(output.shape(), 1.0));
    for (std::size_t i = order.size(); i-- > 0;) {
      Node* n = order[i].get();
      if (!relevant[i] || !n->backward) continue;
      auto it = adjoint.find(n);
      if (it == adjoint.end()) continue;
      std::vector<bool> needs(n->parents.size(), false);
      bool any = false;
      for (std::size_t j = 0; j < n->parents.size(); ++j) {
        auto pit = index.find(n->parents[j].node().get());
        needs[j] = pit != index.end() && relevant[pit->second];
        any = any || needs[j];
      }
      if (!any) continue;
      const Var self(order[i]);
      auto parent_grads = n->backward(self, it->second, needs);
      for (std::size_t j = 0; j < parent_grads.size(); ++j) {
        if (!needs[j] || !parent_grads[j].defined()) continue;
        Node* p = n->parents[j].node().get();
        auto pa = adjoint.find(p);
        if (pa == adjoint.end())
          adjoint.emplace(p, parent_grads[j]);
        else
          pa->second = add(pa->second, parent_grads[j]);
      }
    }
  }

  std::vector<Var> result;
  result.reserve(wrt.size());
  for (const auto& w : wrt) {
    auto it = adjoint.find(w.node().get());
    if (it == adjoint.end())
      result.push_back(constant(Tensor(w.shape(), 0.0)));
    else
      result.push_back(opt.build_graph ? it->second : detach(it->second));
  }
  return result;
}

}  // namespace tabgan::ad
