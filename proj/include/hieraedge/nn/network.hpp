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
#include <string>
#include <vector>

#include "hieraedge/config.hpp"
#include "hieraedge/nn/blocks.hpp"
#include "hieraedge/nn/edge.hpp"
#include "hieraedge/nn/omni_kernel.hpp"

namespace hieraedge::nn {

struct FeatureMaps {
  Tensor detect_p3;  // stride 8
  Tensor detect_p4;  // stride 16
  Tensor detect_p5;  // stride 32
};

// Intermediate maps kept for inspection when HieraEdgeNet::keep_taps is set.
struct NetworkTaps {
  Tensor p2_prime;
  Tensor backbone_p5;
  EdgePyramid edges;
};

struct LayerInfo {
  std::string name;
  std::string type;
  int64_t in_channels = 0;
  int64_t out_channels = 0;
  int64_t stride = 1;  // output stride relative to the input image
  int64_t params = 0;
};

// Backbone (stem, C3k2 stages, HEM edge pyramid fused by SEF at P3/P4/P5,
// SPPF, A2C2f) and PAN neck (top-down, CSPOKM at P3, bottom-up).
class HieraEdgeNet : public Module {
 public:
  HieraEdgeNet(const ModelConfig& config, Rng& rng);

  // x must be (N, 3, input_h, input_w).
  FeatureMaps forward(const Tensor& x);

  const ModelConfig& config() const { return config_; }
  const std::vector<LayerInfo>& layers() const { return layers_; }

  // When false the SEF blocks receive all-zero edge features.
  bool edge_enabled = true;
  bool keep_taps = false;
  NetworkTaps taps;

  std::shared_ptr<ConvBnAct> stem_p1, stem_p2;
  std::shared_ptr<C3k2> stage_p2;
  std::shared_ptr<Hem> hem;
  std::shared_ptr<ConvBnAct> down_p3, down_p4, down_p5;
  std::shared_ptr<C3k2> stage_p3, stage_p4, stage_p5;
  std::shared_ptr<Sef> sef_p3, sef_p4, sef_p5;
  std::shared_ptr<Sppf> sppf;
  std::shared_ptr<A2C2f> attn_p5;
  std::shared_ptr<A2C2f> neck_p4;
  std::shared_ptr<SpdConv> spd_p2;
  std::shared_ptr<CspOkm> cspokm;
  std::shared_ptr<A2C2f> neck_p3;
  std::shared_ptr<ConvBnAct> down_out_p4, down_out_p5;
  std::shared_ptr<A2C2f> out_p4;
  std::shared_ptr<C3k2> out_p5;

 private:
  template <typename M>
  std::shared_ptr<M> add_layer(const std::string& name, std::shared_ptr<M> m, int64_t in,
                               int64_t out, int64_t stride);

  ModelConfig config_;
  std::vector<LayerInfo> layers_;
};

}  // namespace hieraedge::nn
