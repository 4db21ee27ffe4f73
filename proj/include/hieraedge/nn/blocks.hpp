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
#include <vector>

#include "hieraedge/nn/module.hpp"

namespace hieraedge::nn {

// Fixed per-channel Sobel gradients over edge-replicated borders; output
// channel c = |gx_c| + |gy_c|.
// The kernels are constants, not parameters.
class SobelConv : public Module {
 public:
  explicit SobelConv(int64_t channels);
  Tensor forward(const Tensor& x) const;

  int64_t channels;

 private:
  Tensor diff_row_, diff_col_, smooth_row_, smooth_col_;
};

// Lossless 2x2 space-to-depth followed by a 3x3 ConvBnAct.
class SpdConv : public Module {
 public:
  SpdConv(int64_t in, int64_t out, Rng& rng);
  Tensor forward(const Tensor& x);

  std::shared_ptr<ConvBnAct> conv;
};

// 1x1 halve -> three serial maxpool(k, 1, k/2) -> concat of 4 stages -> 1x1.
class Sppf : public Module {
 public:
  Sppf(int64_t in, int64_t out, Rng& rng, int64_t pool_kernel = 5);
  Tensor forward(const Tensor& x);

  std::shared_ptr<ConvBnAct> cv1, cv2;
  int64_t pool_kernel;
};

// Two 3x3 ConvBnAct with a residual add when shapes match.
class Bottleneck : public Module {
 public:
  Bottleneck(int64_t in, int64_t out, bool shortcut, double expansion, Rng& rng);
  Tensor forward(const Tensor& x);

  std::shared_ptr<ConvBnAct> cv1, cv2;
  bool residual;
};

// CSP block with two 1x1 stems, one running `n` Bottlenecks.
class C3k : public Module {
 public:
  C3k(int64_t in, int64_t out, int n, bool shortcut, Rng& rng);
  Tensor forward(const Tensor& x);

  std::shared_ptr<ConvBnAct> cv1, cv2, cv3;
  std::vector<std::shared_ptr<Bottleneck>> units;
};

// C2f-style block: 1x1 to two halves, one half through `n` serial units,
// every unit output kept, concat of 2 + n groups, 1x1 to out.
class C3k2 : public Module {
 public:
  C3k2(int64_t in, int64_t out, int n, bool use_c3k, Rng& rng, double expansion = 0.5,
       bool shortcut = true);
  Tensor forward(const Tensor& x);
  int feature_groups() const { return 2 + static_cast<int>(units.size()); }

  std::shared_ptr<ConvBnAct> cv1, cv2;
  std::vector<std::shared_ptr<Module>> units;  // Bottleneck or C3k
  int64_t hidden;
};

struct AreaAttnParams {
  int64_t dim = 0;
  int64_t num_heads = 1;
  int64_t area = 1;  // 1 = global
};

// Multi-head self-attention inside `area` contiguous segments of the
// flattened H*W sequence. No positional encoding.
class AreaAttention : public Module {
 public:
  AreaAttention(const AreaAttnParams& p, Rng& rng);
  Tensor forward(const Tensor& x);

  std::shared_ptr<Conv2d> qkv, proj;
  AreaAttnParams params;
  // When set, forward keeps the (N*area*heads, Ls, Ls) softmax weights.
  bool keep_attention = false;
  Tensor last_attention;
};

// x + attn(x), then + mlp(x) with a 1x1 expand / 1x1 project MLP.
class ABlock : public Module {
 public:
  ABlock(int64_t dim, int64_t num_heads, int64_t area, Rng& rng, double mlp_ratio = 2.0);
  Tensor forward(const Tensor& x);

  std::shared_ptr<AreaAttention> attn;
  std::shared_ptr<ConvBnAct> mlp_in, mlp_out;
};

// C2f-style wrapper: 1x1 stem, `n` serial units (each two ABlocks, or one
// C3k when use_c3k), concat of stem + unit outputs, 1x1 to out.
class A2C2f : public Module {
 public:
  A2C2f(int64_t in, int64_t out, int n, int64_t area, bool use_c3k, Rng& rng,
        int64_t num_heads = 0, double expansion = 0.5);
  Tensor forward(const Tensor& x);

  std::shared_ptr<ConvBnAct> cv1, cv2;
  std::vector<std::vector<std::shared_ptr<Module>>> units;
  int64_t hidden;
  bool use_c3k;
};

}  // namespace hieraedge::nn
