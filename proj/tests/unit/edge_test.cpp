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

#include "hieraedge/nn/edge.hpp"
#include "test_util.hpp"

namespace hieraedge::nn {
namespace {

using testing::max_abs_diff;
using testing::random_tensor;

TEST(Hem, ConstantInputsGiveTheSamePyramid) {
  Rng rng(1);
  Hem hem(8, 4, 8, 16, rng);
  const EdgePyramid a = hem.forward(Tensor::full({1, 8, 16, 16}, 0.3));
  const EdgePyramid b = hem.forward(Tensor::full({1, 8, 16, 16}, -7.0));
  EXPECT_EQ(a.e_p3.values(), b.e_p3.values());
  EXPECT_EQ(a.e_p4.values(), b.e_p4.values());
  EXPECT_EQ(a.e_p5.values(), b.e_p5.values());
}

TEST(Hem, FullWidthChannelPlanAndResolutions) {
  Rng rng(2);
  Hem hem(256, 128, 256, 512, rng);
  const EdgePyramid e = hem.forward(random_tensor({1, 256, 160, 160}, rng));
  EXPECT_EQ(e.e_p3.shape(), (Shape{1, 128, 80, 80}));
  EXPECT_EQ(e.e_p4.shape(), (Shape{1, 256, 40, 40}));
  EXPECT_EQ(e.e_p5.shape(), (Shape{1, 512, 20, 20}));
}

TEST(Hem, StepEdgeStaysLocal) {
  Rng rng(3);
  Hem hem(2, 4, 4, 4, rng);
  hem.set_training(false);
  Tensor step = Tensor::zeros({1, 2, 32, 32});
  for (int64_t c = 0; c < 2; ++c)
    for (int64_t i = 0; i < 32; ++i)
      for (int64_t j = 20; j < 32; ++j) step.at(0, c, i, j) = 1.0;
  const Tensor e = hem.forward(step).e_p3;
  const Tensor flat = hem.forward(Tensor::zeros({1, 2, 32, 32})).e_p3;
  // The step lies between columns 19 and 20, i.e. at column 10 of the stride-2 map.
  bool responds = false;
  for (int64_t c = 0; c < 4; ++c) {
    for (int64_t i = 0; i < 16; ++i) {
      for (int64_t j = 0; j < 16; ++j) {
        const bool moved = e.at(0, c, i, j) != flat.at(0, c, i, j);
        if (j < 8 || j > 12) EXPECT_FALSE(moved) << c << "," << i << "," << j;
        responds |= moved;
      }
    }
  }
  EXPECT_TRUE(responds);
}

TEST(Hem, RejectsIndivisibleResolution) {
  Rng rng(4);
  Hem hem(2, 4, 4, 4, rng);
  EXPECT_THROW(hem.forward(Tensor::zeros({1, 2, 12, 16})), DimensionError);
}

TEST(Hem, Gradient) {
  const auto r = verify::check_block_gradient("hem", {});
  EXPECT_TRUE(r.passed) << r.value << " " << r.detail;
}

TEST(Sef, ChannelPlansOfTheThreeFusions) {
  Rng rng(5);
  struct Plan {
    int64_t main, edge, out;
  };
  for (const Plan& p : {Plan{512, 128, 512}, Plan{512, 256, 512}, Plan{1024, 512, 1024}}) {
    Sef sef(p.main, p.edge, p.out, rng);
    EXPECT_EQ(sef.reduce->conv->out_channels, p.out / 2);
    EXPECT_EQ(sef.spatial->conv->out_channels, p.out / 2);
    const Tensor y =
        sef.forward(random_tensor({1, p.main, 2, 2}, rng), random_tensor({1, p.edge, 2, 2}, rng));
    EXPECT_EQ(y.shape(), (Shape{1, p.out, 2, 2}));
  }
}

TEST(Sef, ZeroedEdgeChangesOutput) {
  Rng rng(6);
  Sef sef(8, 4, 8, rng);
  const Tensor main = random_tensor({2, 8, 4, 4}, rng);
  const Tensor edge = random_tensor({2, 4, 4, 4}, rng);
  EXPECT_GT(max_abs_diff(sef.forward(main, edge), sef.forward(main, Tensor::zeros(edge.shape()))),
            0.0);
}

TEST(Sef, SpatialMismatchIsRejected) {
  Rng rng(7);
  Sef sef(8, 4, 8, rng);
  EXPECT_THROW(sef.forward(Tensor::zeros({1, 8, 4, 4}), Tensor::zeros({1, 4, 2, 2})),
               DimensionError);
}

TEST(Sef, GradientReachesBothInputs) {
  Rng rng(8);
  Sef sef(8, 4, 8, rng);
  Tensor main = testing::leaf({1, 8, 4, 4}, rng), edge = testing::leaf({1, 4, 4, 4}, rng);
  EXPECT_LT(testing::fd_error([&] { return std::vector{sef.forward(main, edge)}; },
                              {{"main", main}, {"edge", edge}}),
            1e-4);
  const auto r = verify::check_block_gradient("sef", {});
  EXPECT_TRUE(r.passed) << r.value << " " << r.detail;
}

}  // namespace
}  // namespace hieraedge::nn
