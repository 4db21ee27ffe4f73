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

#include "hieraedge/nn/network.hpp"

namespace hieraedge::nn {

template <typename M>
std::shared_ptr<M> HieraEdgeNet::add_layer(const std::string& name, std::shared_ptr<M> m,
                                           int64_t in, int64_t out, int64_t stride) {
  layers_.push_back({name, m->type(), in, out, stride, m->parameter_count()});
  return register_module(name, std::move(m));
}

HieraEdgeNet::HieraEdgeNet(const ModelConfig& config, Rng& rng)
    : Module("HieraEdgeNet"), config_(config) {
  config_.validate();
  const ChannelPlan c = config_.scaled();
  const int n_stage = config_.repeats(2);
  const int n_attn = config_.repeats(4);
  const int n_neck = config_.repeats(2);

  stem_p1 = add_layer("stem_p1", std::make_shared<ConvBnAct>(3, c.p1, 3, 2, rng), 3, c.p1, 2);
  stem_p2 = add_layer("stem_p2", std::make_shared<ConvBnAct>(c.p1, c.p2, 3, 2, rng), c.p1, c.p2, 4);
  stage_p2 = add_layer("stage_p2", std::make_shared<C3k2>(c.p2, c.p2_prime, n_stage, false, rng),
                       c.p2, c.p2_prime, 4);
  hem = add_layer("hem", std::make_shared<Hem>(c.p2_prime, c.e_p3, c.e_p4, c.e_p5, rng),
                  c.p2_prime, c.e_p5, 32);

  down_p3 = add_layer("down_p3", std::make_shared<ConvBnAct>(c.p2_prime, c.p2_prime, 3, 2, rng),
                      c.p2_prime, c.p2_prime, 8);
  stage_p3 = add_layer("stage_p3", std::make_shared<C3k2>(c.p2_prime, c.p3, n_stage, false, rng),
                       c.p2_prime, c.p3, 8);
  sef_p3 = add_layer("sef_p3", std::make_shared<Sef>(c.p3, c.e_p3, c.p3, rng), c.p3 + c.e_p3,
                     c.p3, 8);

  down_p4 = add_layer("down_p4", std::make_shared<ConvBnAct>(c.p3, c.p4, 3, 2, rng), c.p3, c.p4, 16);
  stage_p4 = add_layer("stage_p4", std::make_shared<C3k2>(c.p4, c.p4, n_stage, true, rng), c.p4,
                       c.p4, 16);
  sef_p4 = add_layer("sef_p4", std::make_shared<Sef>(c.p4, c.e_p4, c.p4, rng), c.p4 + c.e_p4,
                     c.p4, 16);

  down_p5 = add_layer("down_p5", std::make_shared<ConvBnAct>(c.p4, c.p5, 3, 2, rng), c.p4, c.p5, 32);
  stage_p5 = add_layer("stage_p5", std::make_shared<C3k2>(c.p5, c.p5, n_stage, true, rng), c.p5,
                       c.p5, 32);
  sef_p5 = add_layer("sef_p5", std::make_shared<Sef>(c.p5, c.e_p5, c.p5, rng), c.p5 + c.e_p5,
                     c.p5, 32);
  sppf = add_layer("sppf", std::make_shared<Sppf>(c.p5, c.p5, rng), c.p5, c.p5, 32);
  attn_p5 = add_layer("attn_p5", std::make_shared<A2C2f>(c.p5, c.p5, n_attn, 1, false, rng),
                      c.p5, c.p5, 32);

  neck_p4 = add_layer("neck_p4",
                      std::make_shared<A2C2f>(c.p5 + c.p4, c.detect_p4, n_neck, 1, true, rng),
                      c.p5 + c.p4, c.detect_p4, 16);
  spd_p2 = add_layer("spd_p2", std::make_shared<SpdConv>(c.p2_prime, c.p2_prime, rng),
                     c.p2_prime, c.p2_prime, 8);
  const int64_t fuse_in = c.detect_p4 + c.p3 + c.p2_prime;
  OmniKernelParams okm;
  okm.big_kernel = okm.strip_kernel = config_.okm_kernel;
  okm.height = config_.input_h / 8;
  okm.width = config_.input_w / 8;
  cspokm = add_layer("cspokm",
                     std::make_shared<CspOkm>(
                         fuse_in, CspSplitSpec{config_.csp_e, c.detect_p3, c.detect_p3}, okm, rng),
                     fuse_in, c.detect_p3, 8);
  neck_p3 = add_layer("neck_p3",
                      std::make_shared<A2C2f>(c.detect_p3, c.detect_p3, n_neck, 1, true, rng),
                      c.detect_p3, c.detect_p3, 8);

  down_out_p4 = add_layer("down_out_p4",
                          std::make_shared<ConvBnAct>(c.detect_p3, c.detect_p3, 3, 2, rng),
                          c.detect_p3, c.detect_p3, 16);
  out_p4 = add_layer("out_p4",
                     std::make_shared<A2C2f>(c.detect_p3 + c.detect_p4, c.detect_p4, n_neck, 1,
                                             true, rng),
                     c.detect_p3 + c.detect_p4, c.detect_p4, 16);
  down_out_p5 = add_layer("down_out_p5",
                          std::make_shared<ConvBnAct>(c.detect_p4, c.detect_p4, 3, 2, rng),
                          c.detect_p4, c.detect_p4, 32);
  out_p5 = add_layer("out_p5",
                     std::make_shared<C3k2>(c.detect_p4 + c.p5, c.detect_p5, n_neck, true, rng),
                     c.detect_p4 + c.p5, c.detect_p5, 32);
}

FeatureMaps HieraEdgeNet::forward(const Tensor& x) {
  if (x.rank() != 4 || x.dim(1) != 3 || x.dim(2) != config_.input_h ||
      x.dim(3) != config_.input_w) {
    throw DimensionError("HieraEdgeNet: input " + shape_str(x.shape()) + " expected (N, 3, " +
                         std::to_string(config_.input_h) + ", " + std::to_string(config_.input_w) +
                         ") on axes C/H/W");
  }
  const Tensor p2_prime = stage_p2->forward(stem_p2->forward(stem_p1->forward(x)));

  EdgePyramid edges = hem->forward(p2_prime);
  if (!edge_enabled) {
    edges = {Tensor::zeros(edges.e_p3.shape()), Tensor::zeros(edges.e_p4.shape()),
             Tensor::zeros(edges.e_p5.shape())};
  }

  const Tensor p3 = sef_p3->forward(stage_p3->forward(down_p3->forward(p2_prime)), edges.e_p3);
  const Tensor p4 = sef_p4->forward(stage_p4->forward(down_p4->forward(p3)), edges.e_p4);
  const Tensor p5 = sef_p5->forward(stage_p5->forward(down_p5->forward(p4)), edges.e_p5);
  const Tensor backbone_p5 = attn_p5->forward(sppf->forward(p5));

  const Tensor mid_p4 = neck_p4->forward(concat_channels({upsample_nearest2x(backbone_p5), p4}));
  const Tensor fused_p3 = cspokm->forward(
      concat_channels({upsample_nearest2x(mid_p4), p3, spd_p2->forward(p2_prime)}));

  FeatureMaps out;
  out.detect_p3 = neck_p3->forward(fused_p3);
  out.detect_p4 = out_p4->forward(concat_channels({down_out_p4->forward(out.detect_p3), mid_p4}));
  out.detect_p5 =
      out_p5->forward(concat_channels({down_out_p5->forward(out.detect_p4), backbone_p5}));

  if (keep_taps) taps = {p2_prime, backbone_p5, edges};
  return out;
}

}  // namespace hieraedge::nn
