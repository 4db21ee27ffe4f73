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

#include "hieraedge/detect/head.hpp"

#include <cmath>
#include <string>

namespace hieraedge {

std::vector<Tensor> HeadOutput::tensors() const {
  std::vector<Tensor> out;
  for (int l = 0; l < kNumLevels; ++l) {
    out.push_back(reg[l]);
    out.push_back(cls[l]);
  }
  return out;
}

namespace nn {

HeadBranch::HeadBranch(int64_t in, int64_t mid, int64_t out, Rng& rng) : Module("HeadBranch") {
  conv1 = register_module("0", std::make_shared<ConvBnAct>(in, mid, 3, 1, rng));
  conv2 = register_module("1", std::make_shared<ConvBnAct>(mid, mid, 3, 1, rng));
  proj = register_module("2", std::make_shared<Conv2d>(mid, out, 1, 1, true, rng));
}

Tensor HeadBranch::forward(const Tensor& x) {
  return proj->forward(conv2->forward(conv1->forward(x)));
}

DetectHead::DetectHead(const ModelConfig& config,
                       const std::array<int64_t, kNumLevels>& in_channels, Rng& rng)
    : Module("Detect"), bins(config.dfl_bins), num_classes(config.num_classes) {
  const int64_t reg_mid = std::max({int64_t{16}, in_channels[0] / 4, 4 * bins});
  const int64_t cls_mid = std::max(in_channels[0], std::min<int64_t>(num_classes, 100));
  for (int l = 0; l < kNumLevels; ++l) {
    reg[l] = register_module("reg" + std::to_string(l),
                             std::make_shared<HeadBranch>(in_channels[l], reg_mid, 4 * bins, rng));
    cls[l] = register_module("cls" + std::to_string(l),
                             std::make_shared<HeadBranch>(in_channels[l], cls_mid, num_classes, rng));
    // Prior: roughly five objects per image spread over the level's cells.
    std::fill(reg[l]->proj->bias.data().begin(), reg[l]->proj->bias.data().end(), 1.0);
    const double cells = static_cast<double>(config.input_h / kLevelStrides[l]) *
                         static_cast<double>(config.input_w / kLevelStrides[l]);
    const double prior = std::log(5.0 / static_cast<double>(num_classes) / cells);
    std::fill(cls[l]->proj->bias.data().begin(), cls[l]->proj->bias.data().end(), prior);
  }
}

HeadOutput DetectHead::forward(const FeatureMaps& f) {
  const std::array<Tensor, kNumLevels> maps = {f.detect_p3, f.detect_p4, f.detect_p5};
  HeadOutput out;
  out.bins = bins;
  out.num_classes = num_classes;
  for (int l = 0; l < kNumLevels; ++l) {
    out.reg[l] = reg[l]->forward(maps[l]);
    out.cls[l] = cls[l]->forward(maps[l]);
  }
  return out;
}

Detector::Detector(const ModelConfig& config, uint64_t seed) : Module("Detector") {
  Rng rng(seed);
  net = register_module("net", std::make_shared<HieraEdgeNet>(config, rng));
  const ChannelPlan c = config.scaled();
  head = register_module(
      "head", std::make_shared<DetectHead>(config, std::array{c.detect_p3, c.detect_p4, c.detect_p5},
                                           rng));
}

HeadOutput Detector::forward(const Tensor& images) { return head->forward(net->forward(images)); }

}  // namespace nn
}  // namespace hieraedge
