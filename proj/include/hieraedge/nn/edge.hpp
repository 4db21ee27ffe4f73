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

// Edge features at strides 8 / 16 / 32 relative to the image.
struct EdgePyramid {
  Tensor e_p3, e_p4, e_p5;
};

// Hierarchical edge module. Sobel magnitude on the stride-4 map, then a chain
// of 2x2/2 max-pools; the stride-8, -16 and -32 stages each get a 1x1
// ConvBnAct to their pyramid width. The first pooled stage (not the raw Sobel
// map) feeds E_P3 so that every level matches its fusion partner.
class Hem : public Module {
 public:
  Hem(int64_t in_channels, int64_t c_p3, int64_t c_p4, int64_t c_p5, Rng& rng);
  EdgePyramid forward(const Tensor& x_p2);

  std::shared_ptr<SobelConv> sobel;
  std::shared_ptr<ConvBnAct> to_p3, to_p4, to_p5;
};

// Synergistic edge fusion: concat(main, edge) -> 1x1 (out/2) -> 3x3 (out/2)
// -> 1x1 (out). Inputs must already share N, H, W.
class Sef : public Module {
 public:
  Sef(int64_t main_channels, int64_t edge_channels, int64_t out_channels, Rng& rng);
  Tensor forward(const Tensor& x_main, const Tensor& x_edge);

  std::shared_ptr<ConvBnAct> reduce, spatial, expand;
  int64_t main_channels, edge_channels, out_channels;
};

}  // namespace hieraedge::nn
