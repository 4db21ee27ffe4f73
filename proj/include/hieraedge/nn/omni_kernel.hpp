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

#pragma once

#include <memory>

#include "hieraedge/nn/blocks.hpp"

namespace hieraedge::nn {

// Frequency channel attention: per-channel weight sigmoid(1x1(GAP(x)))
// applied to the half-spectrum, then inverted. Since the weight is a scalar
// per channel, the result equals weight * x.
class Fca : public Module {
 public:
  Fca(int64_t channels, Rng& rng);
  Tensor forward(const Tensor& x);
  Tensor channel_weights(const Tensor& x);

  std::shared_ptr<Conv2d> fc;
};

// Squeeze-excitation: GAP -> 1x1 (C/r) -> ReLU -> 1x1 (C) -> sigmoid -> rescale.
class Sca : public Module {
 public:
  Sca(int64_t channels, Rng& rng, int64_t reduction = 4);
  Tensor forward(const Tensor& x);
  Tensor excitation(const Tensor& x);

  std::shared_ptr<Conv2d> squeeze, excite;
};

// Frequency gating: learned logits per (channel, row bin, column bin) of the
// half-spectrum, gate = sigmoid(logits), broadcast over the batch.
class Fgm : public Module {
 public:
  Fgm(int64_t channels, int64_t height, int64_t width);
  Tensor forward(const Tensor& x);

  Tensor gate_logits;  // (1, C, H, W/2+1), zero-initialised (gate 0.5)
  int64_t height, width;
};

struct OmniKernelParams {
  int64_t channels = 0;
  int64_t big_kernel = 7;
  int64_t strip_kernel = 7;
  int64_t height = 0;  // spatial size the FGM gates are laid out for
  int64_t width = 0;
};

// in 1x1 + SiLU -> sum of depthwise {1x1, kxk, 1xk, kx1} -> FCA -> SCA,
// plus an FGM branch on the in-projection, summed -> out 1x1.
class OmniKernel : public Module {
 public:
  OmniKernel(const OmniKernelParams& p, Rng& rng);
  Tensor forward(const Tensor& x);

  std::shared_ptr<Conv2d> in_conv, out_conv;
  std::shared_ptr<Conv2d> dw_point, dw_square, dw_row, dw_col;  // 1x1, kxk, 1xk, kx1
  std::shared_ptr<Fca> fca;
  std::shared_ptr<Sca> sca;
  std::shared_ptr<Fgm> fgm;
  OmniKernelParams params;
};

struct CspSplitSpec {
  double e = 0.25;
  int64_t c1 = 0;  // width after the input 1x1
  int64_t c2 = 0;  // output width
};

int64_t okm_share(const CspSplitSpec& spec);

// CSP wrapper: 1x1 to C1, split (e*C1 | rest), Omni-Kernel on the first
// share, concat(okm_out, skip) -> 1x1 to C2.
class CspOkm : public Module {
 public:
  CspOkm(int64_t in_channels, const CspSplitSpec& spec, const OmniKernelParams& okm, Rng& rng);
  Tensor forward(const Tensor& x);

  std::shared_ptr<ConvBnAct> cv_in, cv_out;
  std::shared_ptr<OmniKernel> okm;
  int64_t okm_channels, skip_channels;

  // Debug taps filled when keep_intermediates is set.
  bool keep_intermediates = false;
  Tensor last_skip, last_fusion_input;
};

}  // namespace hieraedge::nn
