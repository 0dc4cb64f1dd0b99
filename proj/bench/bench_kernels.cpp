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

// Serial reference kernels against the OpenMP kernels on critic-sized layers.

#include <benchmark/benchmark.h>

#include <vector>

#include "tabgan/kernels.hpp"
#include "tabgan/rng.hpp"

namespace {

using namespace tabgan;

std::vector<double> filled(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform(-1.0, 1.0);
  return v;
}

kernels::ConvGeometry geometry(const benchmark::State& state) {
  const auto cin = static_cast<std::size_t>(state.range(0));
  return kernels::conv_geometry(16, 3, 14, cin, 3, 3, 2 * cin, 1, 1, kernels::Padding::same);
}

template <auto Kernel>
void BM_conv(benchmark::State& state) {
  const auto g = geometry(state);
  const auto x = filled(g.input_size(), 1);
  const auto k = filled(g.kernel_size(), 2);
  std::vector<double> y(g.output_size());
  for (auto _ : state) {
    Kernel(g, x, k, y);
    benchmark::DoNotOptimize(y.data());
  }
}

template <auto Kernel>
void BM_input_adjoint(benchmark::State& state) {
  const auto g = geometry(state);
  const auto y = filled(g.output_size(), 1);
  const auto k = filled(g.kernel_size(), 2);
  std::vector<double> x(g.input_size());
  for (auto _ : state) {
    Kernel(g, y, k, x);
    benchmark::DoNotOptimize(x.data());
  }
}

template <auto Kernel>
void BM_filter_adjoint(benchmark::State& state) {
  const auto g = geometry(state);
  const auto x = filled(g.input_size(), 1);
  const auto y = filled(g.output_size(), 2);
  std::vector<double> k(g.kernel_size());
  for (auto _ : state) {
    Kernel(g, x, y, k);
    benchmark::DoNotOptimize(k.data());
  }
}

template <auto Kernel>
void BM_matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = filled(n * n, 1);
  const auto b = filled(n * n, 2);
  std::vector<double> out(n * n);
  for (auto _ : state) {
    Kernel(a, b, out, n, n, n);
    benchmark::DoNotOptimize(out.data());
  }
}

}  // namespace

BENCHMARK(BM_conv<kernels::reference::conv2d>)->Arg(32)->Arg(64)->Arg(128);
BENCHMARK(BM_conv<kernels::conv2d>)->Arg(32)->Arg(64)->Arg(128);
BENCHMARK(BM_input_adjoint<kernels::reference::conv2d_input_adjoint>)->Arg(32)->Arg(64)->Arg(128);
BENCHMARK(BM_input_adjoint<kernels::conv2d_input_adjoint>)->Arg(32)->Arg(64)->Arg(128);
BENCHMARK(BM_filter_adjoint<kernels::reference::conv2d_filter_adjoint>)->Arg(32)->Arg(64)->Arg(128);
BENCHMARK(BM_filter_adjoint<kernels::conv2d_filter_adjoint>)->Arg(32)->Arg(64)->Arg(128);
BENCHMARK(BM_matmul<kernels::reference::matmul>)->Arg(64)->Arg(256);
BENCHMARK(BM_matmul<kernels::matmul>)->Arg(64)->Arg(256);

BENCHMARK_MAIN();
