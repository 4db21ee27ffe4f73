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

#include <gtest/gtest.h>

#include <numeric>

#include "hieraedge/nn/network.hpp"
#include "test_util.hpp"

namespace hieraedge::nn {
namespace {

using testing::max_abs_diff;
using testing::random_tensor;

ModelConfig tiny_config() {
  ModelConfig c = ModelConfig::desk();
  c.width = 0.0625;
  c.input_h = c.input_w = 64;
  c.okm_kernel = 3;
  return c;
}

TEST(ModelConfig, DeskChannelPlan) {
  const ChannelPlan p = ModelConfig::desk().scaled();
  EXPECT_EQ(p.p1, 8);
  EXPECT_EQ(p.p2_prime, 32);
  EXPECT_EQ(p.p5, 128);
  EXPECT_EQ(p.e_p3, 16);
  EXPECT_EQ(p.detect_p3, 32);
  EXPECT_EQ(p.detect_p5, 128);
}

TEST(ModelConfig, ValidationNamesTheConstraint) {
  ModelConfig c = ModelConfig::desk();
  c.input_h = 100;
  try {
    c.validate();
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("divisible by 32"), std::string::npos);
  }
  c = ModelConfig::desk();
  c.okm_kernel = 4;
  EXPECT_THROW(c.validate(), ConfigError);
  c = ModelConfig::desk();
  c.num_classes = 0;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(ModelConfig, JsonRoundTrip) {
  ModelConfig c = ModelConfig::nano();
  c.loss.cls = 0.75;
  const ModelConfig back = model_config_from_json(to_json(c));
  EXPECT_EQ(to_json(back), to_json(c));
  EXPECT_THROW(model_config_from_json({{"preset", "huge"}}), ConfigError);
  EXPECT_THROW(model_config_from_json({{"width", "wide"}}), ConfigError);
}

TEST(HieraEdgeNet, DeskShapes) {
  Rng rng(1);
  HieraEdgeNet net(ModelConfig::desk(), rng);
  const FeatureMaps f = net.forward(random_tensor({2, 3, 128, 128}, rng));
  EXPECT_EQ(f.detect_p3.shape(), (Shape{2, 32, 16, 16}));
  EXPECT_EQ(f.detect_p4.shape(), (Shape{2, 64, 8, 8}));
  EXPECT_EQ(f.detect_p5.shape(), (Shape{2, 128, 4, 4}));
}

TEST(HieraEdgeNet, WidthChangesChannelsOnly) {
  Rng rng(2);
  ModelConfig narrow = tiny_config(), wide = tiny_config();
  wide.width = 0.125;
  HieraEdgeNet a(narrow, rng), b(wide, rng);
  const Tensor x = random_tensor({1, 3, 64, 64}, rng);
  const FeatureMaps fa = a.forward(x), fb = b.forward(x);
  for (auto [ta, tb] : {std::pair{fa.detect_p3, fb.detect_p3}, std::pair{fa.detect_p4, fb.detect_p4},
                        std::pair{fa.detect_p5, fb.detect_p5}}) {
    EXPECT_EQ(ta.dim(2), tb.dim(2));
    EXPECT_EQ(ta.dim(3), tb.dim(3));
    EXPECT_LT(ta.dim(1), tb.dim(1));
  }
  EXPECT_EQ(fa.detect_p3.dim(2), 64 / 8);
  EXPECT_EQ(fa.detect_p5.dim(2), 64 / 32);
}

TEST(HieraEdgeNet, EvalModeIsDeterministic) {
  Rng rng(3);
  HieraEdgeNet net(tiny_config(), rng);
  net.set_training(false);
  const Tensor x = random_tensor({1, 3, 64, 64}, rng);
  const FeatureMaps a = net.forward(x), b = net.forward(x.clone());
  EXPECT_EQ(a.detect_p3.values(), b.detect_p3.values());
  EXPECT_EQ(a.detect_p4.values(), b.detect_p4.values());
  EXPECT_EQ(a.detect_p5.values(), b.detect_p5.values());
}

TEST(HieraEdgeNet, WrongInputSizeIsDimensionError) {
  Rng rng(4);
  HieraEdgeNet net(tiny_config(), rng);
  EXPECT_THROW(net.forward(Tensor::zeros({1, 3, 96, 96})), DimensionError);
  EXPECT_THROW(net.forward(Tensor::zeros({1, 1, 64, 64})), DimensionError);
}

TEST(HieraEdgeNet, EdgePathIsLive) {
  Rng rng(5);
  HieraEdgeNet net(tiny_config(), rng);
  net.set_training(false);
  const Tensor x = random_tensor({1, 3, 64, 64}, rng);
  const FeatureMaps with = net.forward(x);
  net.edge_enabled = false;
  const FeatureMaps without = net.forward(x);
  EXPECT_GT(max_abs_diff(with.detect_p3, without.detect_p3), 0.0);
  EXPECT_GT(max_abs_diff(with.detect_p5, without.detect_p5), 0.0);
}

TEST(HieraEdgeNet, LayerTableAccountsForEveryParameter) {
  Rng rng(6);
  HieraEdgeNet net(ModelConfig::desk(), rng);
  const auto& layers = net.layers();
  const int64_t total = std::accumulate(layers.begin(), layers.end(), int64_t{0},
                                        [](int64_t s, const LayerInfo& l) { return s + l.params; });
  EXPECT_EQ(total, net.parameter_count());
  EXPECT_EQ(layers.front().name, "stem_p1");
  EXPECT_EQ(layers.back().stride, 32);
}

TEST(ParamReport, SingleConvAndFrozenSobel) {
  Rng rng(7);
  EXPECT_EQ(Conv2d(8, 16, 1, 1, true, rng).parameter_count(), 144);
  EXPECT_EQ(SobelConv(64).parameter_count(), 0);
  Hem hem(8, 8, 8, 8, rng);
  EXPECT_EQ(hem.parameter_count(), 3 * (8 * 8 + 2 * 8));
}

TEST(HieraEdgeNet, EndToEndParameterGradients) {
  Rng rng(8);
  HieraEdgeNet net(tiny_config(), rng);
  const Tensor x = random_tensor({2, 3, 64, 64}, rng);
  NamedTensors params = net.named_parameters();
  // Twenty parameter tensors, one probed element each.
  verify::NamedInputs picked;
  for (int i = 0; i < 20; ++i) {
    picked.push_back(params[rng.uniform_int(static_cast<int64_t>(params.size()))]);
  }
  verify::GradCheckOptions opts;
  opts.max_probes = 1;
  Rng probe_rng(9);
  const auto stats = verify::gradient_check(
      [&] {
        const FeatureMaps f = net.forward(x);
        return std::vector{f.detect_p3, f.detect_p4, f.detect_p5};
      },
      picked, opts, probe_rng);
  EXPECT_EQ(stats.probes, 20);
  EXPECT_LT(stats.max_rel_error, 1e-4) << stats.worst;
}

}  // namespace
}  // namespace hieraedge::nn
