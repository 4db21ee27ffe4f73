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

#include "hieraedge/nn/edge.hpp"

#include <string>

namespace hieraedge::nn {

Hem::Hem(int64_t in_channels, int64_t c_p3, int64_t c_p4, int64_t c_p5, Rng& rng)
    : Module("HEM") {
  sobel = std::make_shared<SobelConv>(in_channels);
  to_p3 = register_module("to_p3", std::make_shared<ConvBnAct>(in_channels, c_p3, 1, 1, rng));
  to_p4 = register_module("to_p4", std::make_shared<ConvBnAct>(in_channels, c_p4, 1, 1, rng));
  to_p5 = register_module("to_p5", std::make_shared<ConvBnAct>(in_channels, c_p5, 1, 1, rng));
}

EdgePyramid Hem::forward(const Tensor& x_p2) {
  if (x_p2.rank() != 4 || x_p2.dim(2) % 8 != 0 || x_p2.dim(3) % 8 != 0) {
    throw DimensionError("HEM: spatial axes H/W of " + shape_str(x_p2.shape()) +
                         " must be divisible by 8");
  }
  const Tensor edges = sobel->forward(x_p2);
  const Tensor s8 = maxpool2d(edges, 2, 2);
  const Tensor s16 = maxpool2d(s8, 2, 2);
  const Tensor s32 = maxpool2d(s16, 2, 2);
  return {to_p3->forward(s8), to_p4->forward(s16), to_p5->forward(s32)};
}

Sef::Sef(int64_t main_c, int64_t edge_c, int64_t out_c, Rng& rng)
    : Module("SEF"), main_channels(main_c), edge_channels(edge_c), out_channels(out_c) {
  const int64_t mid = std::max<int64_t>(out_c / 2, 1);
  reduce = register_module("reduce", std::make_shared<ConvBnAct>(main_c + edge_c, mid, 1, 1, rng));
  spatial = register_module("spatial", std::make_shared<ConvBnAct>(mid, mid, 3, 1, rng));
  expand = register_module("expand", std::make_shared<ConvBnAct>(mid, out_c, 1, 1, rng));
}

Tensor Sef::forward(const Tensor& x_main, const Tensor& x_edge) {
  if (x_main.rank() != 4 || x_edge.rank() != 4 || x_main.dim(0) != x_edge.dim(0) ||
      x_main.dim(2) != x_edge.dim(2) || x_main.dim(3) != x_edge.dim(3)) {
    throw DimensionError("SEF: main " + shape_str(x_main.shape()) + " and edge " +
                         shape_str(x_edge.shape()) + " differ on N/H/W");
  }
  return expand->forward(spatial->forward(reduce->forward(concat_channels({x_main, x_edge}))));
}

}  // namespace hieraedge::nn
