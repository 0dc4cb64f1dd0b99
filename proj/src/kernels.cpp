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

#include "tabgan/kernels.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>
#include <vector>

namespace tabgan::kernels {

ConvGeometry conv_geometry(std::size_t batch, std::size_t in_h, std::size_t in_w, std::size_t in_c,
                           std::size_t kh, std::size_t kw, std::size_t out_c, std::size_t sh,
                           std::size_t sw, Padding padding) {
  if (sh == 0 || sw == 0) throw std::invalid_argument("convolution stride must be positive");
  ConvGeometry g;
  g.batch = batch;
  g.in_h = in_h;
  g.in_w = in_w;
  g.in_c = in_c;
  g.kh = kh;
  g.kw = kw;
  g.out_c = out_c;
  g.sh = sh;
  g.sw = sw;
  if (padding == Padding::same) {
    g.out_h = (in_h + sh - 1) / sh;
    g.out_w = (in_w + sw - 1) / sw;
    const std::size_t need_h = (g.out_h - 1) * sh + kh;
    const std::size_t need_w = (g.out_w - 1) * sw + kw;
    g.pad_top = need_h > in_h ? (need_h - in_h) / 2 : 0;
    g.pad_left = need_w > in_w ? (need_w - in_w) / 2 : 0;
  } else {
    if (kh > in_h || kw > in_w)
      throw std::invalid_argument("kernel " + std::to_string(kh) + "x" + std::to_string(kw) +
                                  " larger than padded input " + std::to_string(in_h) + "x" +
                                  std::to_string(in_w));
    g.out_h = (in_h - kh) / sh + 1;
    g.out_w = (in_w - kw) / sw + 1;
  }
  return g;
}

namespace {

// Input coordinate read by output coordinate `o` through kernel tap `t`, or
// -1 when it falls in the padding.
inline long tap(std::size_t o, std::size_t t, std::size_t stride, std::size_t pad, std::size_t extent) {
  const long i = static_cast<long>(o * stride + t) - static_cast<long>(pad);
  return (i < 0 || i >= static_cast<long>(extent)) ? -1 : i;
}

// Output coordinate that reads input coordinate `i` through tap `t`, or -1.
inline long inverse_tap(std::size_t i, std::size_t t, std::size_t stride, std::size_t pad,
                        std::size_t extent) {
  const long num = static_cast<long>(i + pad) - static_cast<long>(t);
  if (num < 0 || num % static_cast<long>(stride) != 0) return -1;
  const long o = num / static_cast<long>(stride);
  return o >= static_cast<long>(extent) ? -1 : o;
}

}  // namespace

void matmul(std::span<const double> a, std::span<const double> b, std::span<double> out,
            std::size_t m, std::size_t k, std::size_t p) {
  const double* A = a.data();
  const double* B = b.data();
  double* C = out.data();
#pragma omp parallel for schedule(static)
  for (long i = 0; i < static_cast<long>(m); ++i) {
    double* c = C + i * p;
    std::fill(c, c + p, 0.0);
    for (std::size_t kk = 0; kk < k; ++kk) {
      const double av = A[i * k + kk];
      const double* brow = B + kk * p;
      for (std::size_t j = 0; j < p; ++j) c[j] += av * brow[j];
    }
  }
}

void transpose(std::span<const double> a, std::span<double> out, std::size_t m, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[j * m + i] = a[i * n + j];
}

void conv2d(const ConvGeometry& g, std::span<const double> x, std::span<const double> k,
            std::span<double> y) {
  const double* X = x.data();
  const double* K = k.data();
  double* Y = y.data();
  const long rows = static_cast<long>(g.batch * g.out_h);
#pragma omp parallel for schedule(static)
  for (long r = 0; r < rows; ++r) {
    const std::size_t b = r / g.out_h;
    const std::size_t oy = r % g.out_h;
    for (std::size_t ox = 0; ox < g.out_w; ++ox) {
      double* out = Y + ((b * g.out_h + oy) * g.out_w + ox) * g.out_c;
      std::fill(out, out + g.out_c, 0.0);
      for (std::size_t ky = 0; ky < g.kh; ++ky) {
        const long iy = tap(oy, ky, g.sh, g.pad_top, g.in_h);
        if (iy < 0) continue;
        for (std::size_t kx = 0; kx < g.kw; ++kx) {
          const long ix = tap(ox, kx, g.sw, g.pad_left, g.in_w);
          if (ix < 0) continue;
          const double* xin = X + ((b * g.in_h + iy) * g.in_w + ix) * g.in_c;
          const double* ktap = K + (ky * g.kw + kx) * g.in_c * g.out_c;
          for (std::size_t ci = 0; ci < g.in_c; ++ci) {
            const double xv = xin[ci];
            const double* krow = ktap + ci * g.out_c;
            for (std::size_t co = 0; co < g.out_c; ++co) out[co] += xv * krow[co];
          }
        }
      }
    }
  }
}

void conv2d_input_adjoint(const ConvGeometry& g, std::span<const double> y,
                          std::span<const double> k, std::span<double> x) {
  // Kernel re-laid out as [kh, kw, c_out, c_in] so the inner loop runs over
  // contiguous input channels.
  std::vector<double> kt(g.kernel_size());
  for (std::size_t t = 0; t < g.kh * g.kw; ++t)
    for (std::size_t ci = 0; ci < g.in_c; ++ci)
      for (std::size_t co = 0; co < g.out_c; ++co)
        kt[(t * g.out_c + co) * g.in_c + ci] = k[(t * g.in_c + ci) * g.out_c + co];

  const double* Y = y.data();
  const double* KT = kt.data();
  double* X = x.data();
  const long rows = static_cast<long>(g.batch * g.in_h);
#pragma omp parallel for schedule(static)
  for (long r = 0; r < rows; ++r) {
    const std::size_t b = r / g.in_h;
    const std::size_t iy = r % g.in_h;
    for (std::size_t ix = 0; ix < g.in_w; ++ix) {
      double* acc = X + ((b * g.in_h + iy) * g.in_w + ix) * g.in_c;
      std::fill(acc, acc + g.in_c, 0.0);
      for (std::size_t ky = 0; ky < g.kh; ++ky) {
        const long oy = inverse_tap(iy, ky, g.sh, g.pad_top, g.out_h);
        if (oy < 0) continue;
        for (std::size_t kx = 0; kx < g.kw; ++kx) {
          const long ox = inverse_tap(ix, kx, g.sw, g.pad_left, g.out_w);
          if (ox < 0) continue;
          const double* yin = Y + ((b * g.out_h + oy) * g.out_w + ox) * g.out_c;
          const double* ktap = KT + (ky * g.kw + kx) * g.out_c * g.in_c;
          for (std::size_t co = 0; co < g.out_c; ++co) {
            const double yv = yin[co];
            const double* krow = ktap + co * g.in_c;
            for (std::size_t ci = 0; ci < g.in_c; ++ci) acc[ci] += yv * krow[ci];
          }
        }
      }
    }
  }
}

void conv2d_filter_adjoint(const ConvGeometry& g, std::span<const double> x,
                           std::span<const double> y, std::span<double> k) {
  const double* X = x.data();
  const double* Y = y.data();
  double* K = k.data();
  const long units = static_cast<long>(g.kh * g.kw * g.in_c);
#pragma omp parallel for schedule(static)
  for (long u = 0; u < units; ++u) {
    const std::size_t t = u / g.in_c;
    const std::size_t ci = u % g.in_c;
    const std::size_t ky = t / g.kw;
    const std::size_t kx = t % g.kw;
    double* acc = K + u * g.out_c;
    std::fill(acc, acc + g.out_c, 0.0);
    for (std::size_t b = 0; b < g.batch; ++b) {
      for (std::size_t oy = 0; oy < g.out_h; ++oy) {
        const long iy = tap(oy, ky, g.sh, g.pad_top, g.in_h);
        if (iy < 0) continue;
        for (std::size_t ox = 0; ox < g.out_w; ++ox) {
          const long ix = tap(ox, kx, g.sw, g.pad_left, g.in_w);
          if (ix < 0) continue;
          const double xv = X[((b * g.in_h + iy) * g.in_w + ix) * g.in_c + ci];
          const double* yrow = Y + ((b * g.out_h + oy) * g.out_w + ox) * g.out_c;
          for (std::size_t co = 0; co < g.out_c; ++co) acc[co] += xv * yrow[co];
        }
      }
    }
  }
}

namespace reference {

void matmul(std::span<const double> a, std::span<const double> b, std::span<double> out,
            std::size_t m, std::size_t k, std::size_t p) {
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < p; ++j) {
      double s = 0.0;
      for (std::size_t kk = 0; kk < k; ++kk) s += a[i * k + kk] * b[kk * p + j];
      out[i * p + j] = s;
    }
}

void conv2d(const ConvGeometry& g, std::span<const double> x, std::span<const double> k,
            std::span<double> y) {
  for (std::size_t b = 0; b < g.batch; ++b)
    for (std::size_t oy = 0; oy < g.out_h; ++oy)
      for (std::size_t ox = 0; ox < g.out_w; ++ox)
        for (std::size_t co = 0; co < g.out_c; ++co) {
          double s = 0.0;
          for (std::size_t ky = 0; ky < g.kh; ++ky) {
            const long iy = tap(oy, ky, g.sh, g.pad_top, g.in_h);
            if (iy < 0) continue;
            for (std::size_t kx = 0; kx < g.kw; ++kx) {
              const long ix = tap(ox, kx, g.sw, g.pad_left, g.in_w);
              if (ix < 0) continue;
              for (std::size_t ci = 0; ci < g.in_c; ++ci)
                s += x[((b * g.in_h + iy) * g.in_w + ix) * g.in_c + ci] *
                     k[((ky * g.kw + kx) * g.in_c + ci) * g.out_c + co];
            }
          }
          y[((b * g.out_h + oy) * g.out_w + ox) * g.out_c + co] = s;
        }
}

void conv2d_input_adjoint(const ConvGeometry& g, std::span<const double> y,
                          std::span<const double> k, std::span<double> x) {
  for (std::size_t b = 0; b < g.batch; ++b)
    for (std::size_t iy = 0; iy < g.in_h; ++iy)
      for (std::size_t ix = 0; ix < g.in_w; ++ix)
        for (std::size_t ci = 0; ci < g.in_c; ++ci) {
          double s = 0.0;
          for (std::size_t ky = 0; ky < g.kh; ++ky) {
            const long oy = inverse_tap(iy, ky, g.sh, g.pad_top, g.out_h);
            if (oy < 0) continue;
            for (std::size_t kx = 0; kx < g.kw; ++kx) {
              const long ox = inverse_tap(ix, kx, g.sw, g.pad_left, g.out_w);
              if (ox < 0) continue;
              for (std::size_t co = 0; co < g.out_c; ++co)
                s += y[((b * g.out_h + oy) * g.out_w + ox) * g.out_c + co] *
                     k[((ky * g.kw + kx) * g.in_c + ci) * g.out_c + co];
            }
          }
          x[((b * g.in_h + iy) * g.in_w + ix) * g.in_c + ci] = s;
        }
}

void conv2d_filter_adjoint(const ConvGeometry& g, std::span<const double> x,
                           std::span<const double> y, std::span<double> k) {
  for (std::size_t ky = 0; ky < g.kh; ++ky)
    for (std::size_t kx = 0; kx < g.kw; ++kx)
      for (std::size_t ci = 0; ci < g.in_c; ++ci)
        for (std::size_t co = 0; co < g.out_c; ++co) {
          double s = 0.0;
          for (std::size_t b = 0; b < g.batch; ++b)
            for (std::size_t oy = 0; oy < g.out_h; ++oy) {
              const long iy = tap(oy, ky, g.sh, g.pad_top, g.in_h);
              if (iy < 0) continue;
              for (std::size_t ox = 0; ox < g.out_w; ++ox) {
                const long ix = tap(ox, kx, g.sw, g.pad_left, g.in_w);
                if (ix < 0) continue;
                s += x[((b * g.in_h + iy) * g.in_w + ix) * g.in_c + ci] *
                     y[((b * g.out_h + oy) * g.out_w + ox) * g.out_c + co];
              }
            }
          k[((ky * g.kw + kx) * g.in_c + ci) * g.out_c + co] = s;
        }
}

}  // namespace reference

}  // namespace tabgan::kernels
