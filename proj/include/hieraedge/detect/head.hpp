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

#include <array>
#include <memory>
#include <vector>

#include "hieraedge/nn/network.hpp"

namespace hieraedge {

inline constexpr int kNumLevels = 3;
inline constexpr std::array<int64_t, kNumLevels> kLevelStrides = {8, 16, 32};

// Raw head logits, levels ordered by stride 8, 16, 32.
// reg[l]: (N, 4R, H_l, W_l), channel side * R + bin, sides (left, top, right, bottom).
// cls[l]: (N, num_classes, H_l, W_l).
struct HeadOutput {
  std::array<Tensor, kNumLevels> reg;
  std::array<Tensor, kNumLevels> cls;
  int64_t bins = 0;
  int64_t num_classes = 0;

  int64_t batch() const { return reg[0].dim(0); }
  std::vector<Tensor> tensors() const;
};

namespace nn {

// One decoupled branch: two 3x3 ConvBnAct then a 1x1 projection with bias.
class HeadBranch : public Module {
 public:
  HeadBranch(int64_t in, int64_t mid, int64_t out, Rng& rng);
  Tensor forward(const Tensor& x);

  std::shared_ptr<ConvBnAct> conv1, conv2;
  std::shared_ptr<Conv2d> proj;
};

class DetectHead : public Module {
 public:
  DetectHead(const ModelConfig& config, const std::array<int64_t, kNumLevels>& in_channels,
             Rng& rng);
  HeadOutput forward(const FeatureMaps& features);

  std::array<std::shared_ptr<HeadBranch>, kNumLevels> reg, cls;
  int64_t bins, num_classes;
};

// Backbone + neck + head.
class Detector : public Module {
 public:
  Detector(const ModelConfig& config, uint64_t seed);
  HeadOutput forward(const Tensor& images);

  const ModelConfig& config() const { return net->config(); }

  std::shared_ptr<HieraEdgeNet> net;
  std::shared_ptr<DetectHead> head;
};

}  // namespace nn
}  // namespace hieraedge
