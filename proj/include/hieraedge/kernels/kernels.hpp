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

// Hot loops behind the tensor ops. Every kernel here has a serial
// counterpart in kernels::reference that the unit tests and the benchmark
// compare against. The OpenMP versions partition work so that each output
// element is produced by one thread with a fixed summation order; results do
// not depend on the thread count.

#pragma once

#include <cstdint>
#include <vector>

namespace hieraedge::kernels {

// C[m x n] (+)= op(A)[m x k] * op(B)[k x n], row-major, leading dimensions
// are row strides of the stored (untransposed) arrays.
void gemm(bool trans_a, bool trans_b, int64_t m, int64_t n, int64_t k, const double* a,
          int64_t lda, const double* b, int64_t ldb, double* c, int64_t ldc, bool accumulate);

struct ConvGeometry {
  int64_t batch = 0, in_channels = 0, in_h = 0, in_w = 0;
  int64_t out_channels = 0, kernel_h = 0, kernel_w = 0;
  int64_t stride = 1, pad_h = 0, pad_w = 0, groups = 1;
  int64_t out_h = 0, out_w = 0;

  int64_t in_per_group() const { return in_channels / groups; }
  int64_t out_per_group() const { return out_channels / groups; }
  bool depthwise() const { return groups == in_channels && out_channels == in_channels; }
  bool pointwise() const {
    return kernel_h == 1 && kernel_w == 1 && stride == 1 && pad_h == 0 && pad_w == 0;
  }
};

// Cross-correlation. `bias` may be null.
void conv2d_forward(const ConvGeometry& g, const double* x, const double* w, const double* bias,
                    double* y);
// Accumulates into whichever of dx, dw, db is non-null.
void conv2d_backward(const ConvGeometry& g, const double* x, const double* w, const double* dy,
                     double* dx, double* dw, double* db);

struct PoolGeometry {
  int64_t planes = 0, in_h = 0, in_w = 0;
  int64_t kernel = 1, stride = 1, pad = 0;
  int64_t out_h = 0, out_w = 0;
};

// Max over each window with -inf padding. `argmax` receives the in-plane
// offset of the first (row-major) maximum.
void maxpool2d_forward(const PoolGeometry& g, const double* x, double* y, int64_t* argmax);
void maxpool2d_backward(const PoolGeometry& g, const double* dy, const int64_t* argmax,
                        double* dx);

namespace reference {

void gemm(bool trans_a, bool trans_b, int64_t m, int64_t n, int64_t k, const double* a,
          int64_t lda, const double* b, int64_t ldb, double* c, int64_t ldc, bool accumulate);
void conv2d_forward(const ConvGeometry& g, const double* x, const double* w, const double* bias,
                    double* y);
void conv2d_backward(const ConvGeometry& g, const double* x, const double* w, const double* dy,
                     double* dx, double* dw, double* db);
void maxpool2d_forward(const PoolGeometry& g, const double* x, double* y, int64_t* argmax);

}  // namespace reference

int max_threads();

}  // namespace hieraedge::kernels
