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

// Dense compute kernels behind the autodiff engine.
//
// Every kernel exists twice: an OpenMP version in `tabgan::kernels` used by
// the engine, and a plain serial version in `tabgan::kernels::reference`
// kept as the test oracle and benchmark baseline. Both accumulate each
// output element over the same index sequence, so their results are
// bitwise identical and independent of the thread count.
//
// Convolution tensors are NHWC; kernels are [kh, kw, c_in, c_out].

#include <cstddef>
#include <span>
#include <utility>

namespace tabgan::kernels {

enum class Padding { same, valid };

struct ConvGeometry {
  std::size_t batch = 0;
  std::size_t in_h = 0, in_w = 0, in_c = 0;
  std::size_t out_h = 0, out_w = 0, out_c = 0;
  std::size_t kh = 0, kw = 0;
  std::size_t sh = 1, sw = 1;
  std::size_t pad_top = 0, pad_left = 0;

  std::size_t input_size() const { return batch * in_h * in_w * in_c; }
  std::size_t output_size() const { return batch * out_h * out_w * out_c; }
  std::size_t kernel_size() const { return kh * kw * in_c * out_c; }
};

/// Geometry of a forward convolution of an [batch, in_h, in_w, in_c] input.
/// Same padding follows the usual convention: out = ceil(in / stride) with
/// the extra padding row/column placed at the bottom/right.
ConvGeometry conv_geometry(std::size_t batch, std::size_t in_h, std::size_t in_w, std::size_t in_c,
                           std::size_t kh, std::size_t kw, std::size_t out_c, std::size_t sh,
                           std::size_t sw, Padding padding);

/// out[m x p] = a[m x k] * b[k x p]
void matmul(std::span<const double> a, std::span<const double> b, std::span<double> out,
            std::size_t m, std::size_t k, std::size_t p);
/// out = transpose of a[m x n]
void transpose(std::span<const double> a, std::span<double> out, std::size_t m, std::size_t n);

/// Cross-correlation y = conv(x, k).
void conv2d(const ConvGeometry& g, std::span<const double> x, std::span<const double> k,
            std::span<double> y);
/// Adjoint of conv2d in its input: x = conv2d^T(y, k). This is the
/// transposed convolution.
void conv2d_input_adjoint(const ConvGeometry& g, std::span<const double> y,
                          std::span<const double> k, std::span<double> x);
/// Adjoint of conv2d in its kernel: k[a,b,ci,co] = sum x[.., ci] * y[.., co].
void conv2d_filter_adjoint(const ConvGeometry& g, std::span<const double> x,
                           std::span<const double> y, std::span<double> k);

namespace reference {
void matmul(std::span<const double> a, std::span<const double> b, std::span<double> out,
            std::size_t m, std::size_t k, std::size_t p);
void conv2d(const ConvGeometry& g, std::span<const double> x, std::span<const double> k,
            std::span<double> y);
void conv2d_input_adjoint(const ConvGeometry& g, std::span<const double> y,
                          std::span<const double> k, std::span<double> x);
void conv2d_filter_adjoint(const ConvGeometry& g, std::span<const double> x,
                           std::span<const double> y, std::span<double> k);
}  // namespace reference

}  // namespace tabgan::kernels
