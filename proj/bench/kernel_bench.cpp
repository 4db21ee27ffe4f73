// Copyright 2026 The HieraEdge Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Parallel kernels against their serial references.
//   ./kernel_bench --benchmark_filter=Gemm

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "hieraedge/kernels/dft.hpp"
#include "hieraedge/kernels/kernels.hpp"

namespace {

using hieraedge::kernels::ConvGeometry;

std::vector<double> random_buffer(size_t n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> v(n);
  for (double& x : v) x = u(rng);
  return v;
}

template <bool kReference>
void BM_Gemm(benchmark::State& state) {
  const int64_t n = state.range(0);
  auto a = random_buffer(n * n, 1), b = random_buffer(n * n, 2);
  std::vector<double> c(n * n);
  for (auto _ : state) {
    if constexpr (kReference) {
      hieraedge::kernels::reference::gemm(false, false, n, n, n, a.data(), n, b.data(), n,
                                          c.data(), n, false);
    } else {
      hieraedge::kernels::gemm(false, false, n, n, n, a.data(), n, b.data(), n, c.data(), n,
                               false);
    }
    benchmark::DoNotOptimize(c.data());
  }
  state.counters["GFLOPS"] = benchmark::Counter(2.0 * n * n * n, benchmark::Counter::kIsIterationInvariantRate,
                                                benchmark::Counter::kIs1000);
}
BENCHMARK(BM_Gemm<false>)->Name("Gemm/parallel")->Arg(64)->Arg(256)->Arg(512);
BENCHMARK(BM_Gemm<true>)->Name("Gemm/reference")->Arg(64)->Arg(256);

ConvGeometry conv_case(int64_t channels, int64_t size, int64_t kernel, bool depthwise) {
  ConvGeometry g;
  g.batch = 4;
  g.in_channels = channels;
  g.in_h = g.in_w = size;
  g.out_channels = channels;
  g.kernel_h = g.kernel_w = kernel;
  g.pad_h = g.pad_w = kernel / 2;
  g.groups = depthwise ? channels : 1;
  g.out_h = g.out_w = size;
  return g;
}

template <bool kReference>
void BM_Conv(benchmark::State& state) {
  const auto g = conv_case(state.range(0), state.range(1), state.range(2), state.range(3) != 0);
  auto x = random_buffer(g.batch * g.in_channels * g.in_h * g.in_w, 3);
  auto w = random_buffer(g.out_channels * g.in_per_group() * g.kernel_h * g.kernel_w, 4);
  std::vector<double> y(g.batch * g.out_channels * g.out_h * g.out_w);
  for (auto _ : state) {
    if constexpr (kReference) {
      hieraedge::kernels::reference::conv2d_forward(g, x.data(), w.data(), nullptr, y.data());
    } else {
      hieraedge::kernels::conv2d_forward(g, x.data(), w.data(), nullptr, y.data());
    }
    benchmark::DoNotOptimize(y.data());
  }
}
// channels, size, kernel, depthwise
BENCHMARK(BM_Conv<false>)->Name("Conv/parallel")->Args({32, 32, 3, 0})->Args({64, 16, 7, 1});
BENCHMARK(BM_Conv<true>)->Name("Conv/reference")->Args({32, 32, 3, 0})->Args({64, 16, 7, 1});

template <bool kReference>
void BM_Rfft2(benchmark::State& state) {
  const int64_t n = state.range(0);
  auto x = random_buffer(16 * n * n, 5);
  std::vector<double> s(16 * n * hieraedge::kernels::half_width(n) * 2);
  for (auto _ : state) {
    if constexpr (kReference) {
      hieraedge::kernels::reference::rfft2(16, n, n, x.data(), s.data());
    } else {
      hieraedge::kernels::rfft2(16, n, n, x.data(), s.data());
    }
    benchmark::DoNotOptimize(s.data());
  }
}
BENCHMARK(BM_Rfft2<false>)->Name("Rfft2/parallel")->Arg(16)->Arg(32);
BENCHMARK(BM_Rfft2<true>)->Name("Rfft2/reference")->Arg(16);

}  // namespace

BENCHMARK_MAIN();
