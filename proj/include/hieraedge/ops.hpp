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

// Differentiable tensor operations. All take and return NCHW feature maps
// unless stated; every op records a backward node when any input needs a
// gradient and recording is enabled.

#pragma once

#include <cstdint>
#include <vector>

#include "hieraedge/tensor.hpp"

namespace hieraedge {

struct Conv2dOptions {
  int64_t stride = 1;
  int64_t pad_h = 0;
  int64_t pad_w = 0;
  int64_t groups = 1;
};

// Cross-correlation; weight is (O, C/groups, kh, kw); bias may be undefined.
Tensor conv2d(const Tensor& x, const Tensor& weight, const Tensor& bias,
              const Conv2dOptions& opts);
Tensor conv2d(const Tensor& x, const Tensor& weight, const Tensor& bias, int64_t stride,
              int64_t padding, int64_t groups = 1);

// -inf padding; gradient goes to the first row-major maximum of each window.
Tensor maxpool2d(const Tensor& x, int64_t kernel, int64_t stride, int64_t padding = 0);
Tensor upsample_nearest2x(const Tensor& x);

// Pads H and W by repeating the outermost rows and columns.
Tensor pad_replicate(const Tensor& x, int64_t pad);

struct BatchNormState {
  Tensor running_mean;
  Tensor running_var;
};

// Training mode normalizes with biased batch statistics and folds them into
// `state` with the given momentum (running var uses the unbiased estimate).
Tensor batchnorm2d(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                   BatchNormState& state, bool training, double momentum = 0.03,
                   double eps = 1e-5);

Tensor silu(const Tensor& x);
Tensor sigmoid(const Tensor& x);
Tensor relu(const Tensor& x);
// d|x|/dx taken as sign(x), 0 at 0.
Tensor abs(const Tensor& x);

// Broadcasting elementwise ops. Operands must have equal rank; each axis must
// match or be 1 on one side.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);

Tensor concat_channels(const std::vector<Tensor>& parts);
std::vector<Tensor> split_channels(const Tensor& x, const std::vector<int64_t>& sizes);

// (N, C, H, W) -> (N, C, 1, 1)
Tensor global_avg_pool(const Tensor& x);
Tensor softmax_lastdim(const Tensor& x);

// Batched product over rank-3 operands: (B, M, K) x (B, K, N) -> (B, M, N),
// with either operand read transposed in its last two axes.
Tensor bmm(const Tensor& a, const Tensor& b, bool trans_a = false, bool trans_b = false);
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor permute(const Tensor& x, const std::vector<int>& order);
Tensor transpose(const Tensor& x, int axis0, int axis1);
Tensor reshape(const Tensor& x, const Shape& shape);

Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);
// Sum of elementwise products with a constant weight map (no grad to weights).
Tensor weighted_sum(const Tensor& x, const std::vector<double>& weights);

// Space-to-depth with 2x2 blocks: output channel q*C + c holds sub-pixel q of
// input channel c, q ordered (0,0), (1,0), (0,1), (1,1) as (row, col) offsets.
Tensor space_to_depth(const Tensor& x);
Tensor depth_to_space(const Tensor& x);

// Half-spectrum of the last two axes, stored as (N, C, H, W/2+1, 2).
struct ComplexSpectrum {
  Tensor data;
  int64_t width = 0;  // original W, needed to invert
};

ComplexSpectrum rfft2(const Tensor& x);
Tensor irfft2(const ComplexSpectrum& spectrum);
// Multiplies every bin by a real gate broadcastable to (N, C, H, W/2+1).
ComplexSpectrum spectral_gate(const ComplexSpectrum& spectrum, const Tensor& gate);

}  // namespace hieraedge
