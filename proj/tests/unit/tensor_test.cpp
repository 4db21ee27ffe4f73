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

#include <cmath>
#include <numeric>

#include "hieraedge/ops.hpp"
#include "test_util.hpp"

namespace hieraedge {
namespace {

using testing::fd_error;
using testing::leaf;
using testing::max_abs_diff;
using testing::random_tensor;

Tensor grid(std::vector<double> values, int64_t h, int64_t w) {
  return Tensor::from({1, 1, h, w}, std::move(values));
}

TEST(Conv2d, IdentityPermutationKernelReproducesInput) {
  Rng rng(1);
  const Tensor x = random_tensor({2, 3, 4, 5}, rng);
  // Output channel o reads input channel perm[o].
  const std::vector<int64_t> perm = {2, 0, 1};
  Tensor w = Tensor::zeros({3, 3, 1, 1});
  for (int64_t o = 0; o < 3; ++o) w.at(o, perm[o], 0, 0) = 1.0;
  const Tensor y = conv2d(x, w, Tensor::zeros({3}), 1, 0);
  ASSERT_EQ(y.shape(), x.shape());
  for (int64_t n = 0; n < 2; ++n)
    for (int64_t o = 0; o < 3; ++o)
      for (int64_t i = 0; i < 4; ++i)
        for (int64_t j = 0; j < 5; ++j) EXPECT_EQ(y.at(n, o, i, j), x.at(n, perm[o], i, j));
}

TEST(Conv2d, DepthwiseSobelOnConstantIsZero) {
  const Tensor x = Tensor::full({1, 2, 6, 6}, 3.25);
  Tensor w = Tensor::zeros({2, 1, 3, 3});
  for (int64_t c = 0; c < 2; ++c) {
    const double k[9] = {-1, 0, 1, -2, 0, 2, -1, 0, 1};
    for (int i = 0; i < 9; ++i) w.at(c, 0, i / 3, i % 3) = k[i];
  }
  const Tensor y = conv2d(x, w, Tensor(), 1, 0, 2);
  EXPECT_EQ(y.shape(), (Shape{1, 2, 4, 4}));
  for (double v : y.data()) EXPECT_EQ(v, 0.0);
}

TEST(Conv2d, HandCrossCorrelation) {
  const Tensor y = conv2d(grid({1, 2, 3, 4}, 2, 2), grid({1, 0, 0, 1}, 2, 2), Tensor(), 1, 0);
  ASSERT_EQ(y.shape(), (Shape{1, 1, 1, 1}));
  EXPECT_EQ(y.item(), 5.0);
}

TEST(Conv2d, OutputExtentUsesFloorDivision) {
  Rng rng(2);
  const Tensor y = conv2d(random_tensor({1, 2, 7, 8}, rng), random_tensor({4, 2, 3, 3}, rng),
                          Tensor(), 2, 1);
  EXPECT_EQ(y.shape(), (Shape{1, 4, 4, 4}));
}

TEST(Conv2d, DepthwiseEqualsIndependentChannels) {
  Rng rng(3);
  const Tensor x = random_tensor({1, 3, 5, 5}, rng);
  const Tensor w = random_tensor({3, 1, 3, 3}, rng);
  const Tensor y = conv2d(x, w, Tensor(), 1, 1, 3);
  const auto xs = split_channels(x, {1, 1, 1});
  for (int64_t c = 0; c < 3; ++c) {
    Tensor wc = Tensor::from({1, 1, 3, 3}, {w.data().begin() + 9 * c, w.data().begin() + 9 * c + 9});
    const Tensor yc = conv2d(xs[c], wc, Tensor(), 1, 1);
    EXPECT_EQ(max_abs_diff(split_channels(y, {1, 1, 1})[c], yc), 0.0);
  }
}

TEST(Conv2d, MismatchedChannelsNameTheAxis) {
  Rng rng(4);
  try {
    conv2d(random_tensor({1, 3, 4, 4}, rng), random_tensor({2, 2, 3, 3}, rng), Tensor(), 1, 1);
    FAIL() << "expected DimensionError";
  } catch (const DimensionError& e) {
    EXPECT_NE(std::string(e.what()).find("axis"), std::string::npos) << e.what();
  }
}

TEST(Conv2d, GradientMatchesFiniteDifferences) {
  Rng rng(5);
  Tensor x = leaf({2, 4, 5, 5}, rng), w = leaf({6, 2, 3, 3}, rng), b = leaf({6}, rng);
  EXPECT_LT(fd_error([&] { return std::vector{conv2d(x, w, b, 2, 1, 2)}; },
                     {{"x", x}, {"w", w}, {"b", b}}),
            1e-4);
}

TEST(MaxPool, BlockMaximum) {
  EXPECT_EQ(maxpool2d(grid({1, 2, 3, 4}, 2, 2), 2, 2).values(), (std::vector<double>{4}));
}

TEST(MaxPool, UnitWindowIsIdentity) {
  Rng rng(6);
  const Tensor x = random_tensor({2, 3, 4, 4}, rng);
  EXPECT_EQ(maxpool2d(x, 1, 1).values(), x.values());
}

TEST(MaxPool, NegativeInfinityPadding) {
  EXPECT_EQ(maxpool2d(grid({1, 2, 3, 4}, 2, 2), 3, 1, 1).values(),
            (std::vector<double>{4, 4, 4, 4}));
}

TEST(MaxPool, WindowLargerThanInputThrows) {
  EXPECT_THROW(maxpool2d(Tensor::zeros({1, 1, 2, 2}), 3, 1), DimensionError);
}

TEST(MaxPool, TiesRouteGradientToFirstMaximum) {
  Tensor x = Tensor::full({1, 1, 2, 2}, 1.0);
  x.set_requires_grad(true);
  sum(maxpool2d(x, 2, 2)).backward();
  EXPECT_EQ(std::vector<double>(x.grad().begin(), x.grad().end()),
            (std::vector<double>{1, 0, 0, 0}));
}

TEST(Upsample, ReplicatesPixels) {
  EXPECT_EQ(upsample_nearest2x(grid({1}, 1, 1)).values(), (std::vector<double>{1, 1, 1, 1}));
  const Tensor y = upsample_nearest2x(grid({1, 2, 3, 4}, 2, 2));
  EXPECT_EQ(y.values(), (std::vector<double>{1, 1, 2, 2, 1, 1, 2, 2, 3, 3, 4, 4, 3, 3, 4, 4}));
}

TEST(Upsample, FollowedByBlockPoolIsIdentity) {
  Rng rng(7);
  const Tensor x = random_tensor({2, 3, 3, 5}, rng);
  EXPECT_EQ(maxpool2d(upsample_nearest2x(x), 2, 2).values(), x.values());
}

TEST(Upsample, BackwardSumsFourGradients) {
  Tensor x = Tensor::zeros({1, 1, 2, 2});
  x.set_requires_grad(true);
  std::vector<double> weights(16);
  std::iota(weights.begin(), weights.end(), 0.0);
  weighted_sum(upsample_nearest2x(x), weights).backward();
  // Source (0,0) covers flat 0,1,4,5 of the 4x4 map.
  EXPECT_EQ(std::vector<double>(x.grad().begin(), x.grad().end()),
            (std::vector<double>{10, 18, 42, 50}));
}

TEST(PadReplicate, RepeatsEdgesAndSumsGradients) {
  Tensor x = grid({1, 2, 3, 4}, 2, 2);
  x.set_requires_grad(true);
  const Tensor y = pad_replicate(x, 1);
  EXPECT_EQ(y.values(), (std::vector<double>{1, 1, 2, 2, 1, 1, 2, 2, 3, 3, 4, 4, 3, 3, 4, 4}));
  sum(y).backward();
  EXPECT_EQ(std::vector<double>(x.grad().begin(), x.grad().end()),
            (std::vector<double>{4, 4, 4, 4}));
  Rng rng(22);
  Tensor z = leaf({1, 2, 3, 4}, rng);
  EXPECT_LT(fd_error([&] { return std::vector{pad_replicate(z, 2)}; }, {{"z", z}}), 1e-4);
}

TEST(Fft, DeltaHasFlatSpectrum) {
  Tensor x = Tensor::zeros({1, 1, 4, 6});
  x.at(0, 0, 0, 0) = 1.0;
  const ComplexSpectrum s = rfft2(x);
  ASSERT_EQ(s.data.shape(), (Shape{1, 1, 4, 4, 2}));
  for (int64_t i = 0; i < s.data.numel(); i += 2) {
    EXPECT_NEAR(s.data.data()[i], 1.0, 1e-12);
    EXPECT_NEAR(s.data.data()[i + 1], 0.0, 1e-12);
  }
}

TEST(Fft, ConstantHasOnlyDc) {
  const ComplexSpectrum s = rfft2(Tensor::full({1, 1, 4, 5}, 0.75));
  const auto v = s.data.data();
  EXPECT_NEAR(v[0], 0.75 * 20, 1e-12);
  for (int64_t i = 1; i < s.data.numel(); ++i) EXPECT_NEAR(v[i], 0.0, 1e-12);
}

TEST(Fft, RoundTrip) {
  Rng rng(8);
  for (const Shape& shape : {Shape{1, 1, 4, 4}, Shape{2, 3, 5, 7}, Shape{1, 2, 6, 3}}) {
    const Tensor x = random_tensor(shape, rng);
    EXPECT_LT(max_abs_diff(irfft2(rfft2(x)), x), 1e-10) << shape_str(shape);
  }
}

TEST(Fft, Parseval) {
  Rng rng(9);
  for (int64_t w : {6, 7}) {
    const Tensor x = random_tensor({1, 1, 5, w}, rng);
    const ComplexSpectrum s = rfft2(x);
    const int64_t wh = w / 2 + 1;
    double spectral = 0.0;
    for (int64_t r = 0; r < 5; ++r) {
      for (int64_t k = 0; k < wh; ++k) {
        const bool single = k == 0 || (w % 2 == 0 && k == w / 2);
        const double re = s.data.data()[(r * wh + k) * 2], im = s.data.data()[(r * wh + k) * 2 + 1];
        spectral += (single ? 1.0 : 2.0) * (re * re + im * im);
      }
    }
    double energy = 0.0;
    for (double v : x.data()) energy += v * v;
    EXPECT_NEAR(spectral / (5.0 * w), energy, 1e-9 * energy);
  }
}

TEST(Fft, GradientIsTheAdjoint) {
  Rng rng(10);
  Tensor x = leaf({1, 2, 4, 5}, rng);
  Tensor g = leaf({1, 2, 4, 3}, rng);
  EXPECT_LT(fd_error([&] { return std::vector{rfft2(x).data}; }, {{"x", x}}), 1e-4);
  EXPECT_LT(fd_error([&] { return std::vector{irfft2(spectral_gate(rfft2(x), sigmoid(g)))}; },
                     {{"x", x}, {"gate", g}}),
            1e-4);
}

TEST(BatchNorm, TrainingModeStandardises) {
  Rng rng(11);
  const Tensor x = random_tensor({3, 2, 4, 4}, rng, 3.0);
  BatchNormState state{Tensor::zeros({2}), Tensor::ones({2})};
  const Tensor y = batchnorm2d(x, Tensor::ones({2}), Tensor::zeros({2}), state, true);
  for (int64_t c = 0; c < 2; ++c) {
    double m = 0, v = 0;
    for (int64_t n = 0; n < 3; ++n)
      for (int64_t i = 0; i < 16; ++i) m += y.at(n, c, i / 4, i % 4);
    m /= 48;
    for (int64_t n = 0; n < 3; ++n)
      for (int64_t i = 0; i < 16; ++i) v += std::pow(y.at(n, c, i / 4, i % 4) - m, 2);
    v /= 48;
    EXPECT_NEAR(m, 0.0, 1e-8);
    // eps shrinks the variance by var / (var + eps).
    EXPECT_NEAR(v, 1.0, 1e-5);
  }
  EXPECT_NE(state.running_mean.data()[0], 0.0);
}

TEST(BatchNorm, EvalModeWithUnitStatsIsIdentity) {
  Rng rng(12);
  const Tensor x = random_tensor({2, 3, 2, 2}, rng);
  BatchNormState state{Tensor::zeros({3}), Tensor::ones({3})};
  const Tensor y = batchnorm2d(x, Tensor::ones({3}), Tensor::zeros({3}), state, false);
  EXPECT_LT(max_abs_diff(y, x), 1e-5 * 4);
}

TEST(BatchNorm, TwoElementBatch) {
  BatchNormState state{Tensor::zeros({1}), Tensor::ones({1})};
  const Tensor y = batchnorm2d(Tensor::from({2, 1, 1, 1}, {0, 2}), Tensor::ones({1}),
                               Tensor::zeros({1}), state, true);
  const double k = 1.0 / std::sqrt(1.0 + 1e-5);
  EXPECT_NEAR(y.data()[0], -k, 1e-12);
  EXPECT_NEAR(y.data()[1], k, 1e-12);
}

TEST(BatchNorm, GradientThroughBatchStatistics) {
  Rng rng(13);
  Tensor x = leaf({2, 3, 3, 3}, rng), g = leaf({3}, rng), b = leaf({3}, rng);
  EXPECT_LT(fd_error(
                [&] {
                  BatchNormState s{Tensor::zeros({3}), Tensor::ones({3})};
                  return std::vector{batchnorm2d(x, g, b, s, true)};
                },
                {{"x", x}, {"gamma", g}, {"beta", b}}),
            1e-4);
}

TEST(Activations, KnownValues) {
  const Tensor x = Tensor::from({3}, {0.0, 1.0, -2.0});
  EXPECT_EQ(sigmoid(x).data()[0], 0.5);
  EXPECT_EQ(silu(x).data()[0], 0.0);
  EXPECT_NEAR(silu(x).data()[1], 0.731058578630005, 1e-12);
  EXPECT_EQ(relu(x).values(), (std::vector<double>{0, 1, 0}));
  EXPECT_EQ(abs(x).values(), (std::vector<double>{0, 1, 2}));
}

TEST(Activations, Gradients) {
  Rng rng(14);
  Tensor x = leaf({2, 3, 4}, rng);
  EXPECT_LT(fd_error([&] { return std::vector{silu(x), sigmoid(x), relu(x), abs(x)}; },
                     {{"x", x}}),
            1e-4);
}

TEST(TensorOps, ConcatSplitRoundTrip) {
  Rng rng(15);
  const Tensor a = random_tensor({2, 3, 4, 4}, rng), b = random_tensor({2, 5, 4, 4}, rng);
  const Tensor c = concat_channels({a, b});
  EXPECT_EQ(c.shape(), (Shape{2, 8, 4, 4}));
  const auto parts = split_channels(c, {3, 5});
  EXPECT_EQ(parts[0].values(), a.values());
  EXPECT_EQ(parts[1].values(), b.values());
}

TEST(TensorOps, ShapeErrors) {
  EXPECT_THROW(concat_channels({Tensor::zeros({1, 2, 4, 4}), Tensor::zeros({1, 2, 4, 3})}),
               DimensionError);
  EXPECT_THROW(split_channels(Tensor::zeros({1, 4, 2, 2}), {1, 2}), DimensionError);
  EXPECT_THROW(add(Tensor::zeros({2, 3}), Tensor::zeros({3, 3})), DimensionError);
}

TEST(TensorOps, SoftmaxAndPooling) {
  EXPECT_EQ(softmax_lastdim(Tensor::zeros({1, 4})).values(),
            (std::vector<double>{0.25, 0.25, 0.25, 0.25}));
  EXPECT_EQ(global_avg_pool(grid({1, 2, 3, 4}, 2, 2)).item(), 2.5);
}

TEST(TensorOps, MatmulAndTranspose) {
  const Tensor a = Tensor::from({1, 2, 3}, {1, 2, 3, 4, 5, 6});
  const Tensor b = Tensor::from({1, 3, 1}, {1, 0, -1});
  EXPECT_EQ(bmm(a, b).values(), (std::vector<double>{-2, -2}));
  EXPECT_EQ(transpose(a, 1, 2).values(), (std::vector<double>{1, 4, 2, 5, 3, 6}));
  EXPECT_EQ(bmm(a, a, false, true).values(), (std::vector<double>{14, 32, 32, 77}));
}

TEST(TensorOps, Gradients) {
  Rng rng(16);
  Tensor a = leaf({2, 3, 4}, rng), b = leaf({2, 4, 2}, rng), c = leaf({2, 1, 4}, rng);
  EXPECT_LT(fd_error(
                [&] {
                  return std::vector{bmm(a, b), softmax_lastdim(a), mul(a, c), sub(a, c),
                                     permute(a, {2, 0, 1}), scale(reshape(a, {6, 4}), 0.5)};
                },
                {{"a", a}, {"b", b}, {"c", c}}),
            1e-4);
  Tensor x = leaf({2, 6, 2, 2}, rng);
  EXPECT_LT(fd_error(
                [&] {
                  auto parts = split_channels(x, {2, 4});
                  return std::vector{concat_channels({parts[1], parts[0]}), global_avg_pool(x),
                                     depth_to_space(space_to_depth(x)), mean(x)};
                },
                {{"x", x}}),
            1e-4);
}

TEST(Backward, SumGivesOnes) {
  Rng rng(17);
  Tensor x = leaf({3, 4}, rng);
  sum(x).backward();
  for (double g : x.grad()) EXPECT_EQ(g, 1.0);
}

TEST(Backward, SquareGivesTwiceInput) {
  Rng rng(18);
  Tensor x = leaf({3, 4}, rng);
  sum(mul(x, x)).backward();
  for (int64_t i = 0; i < x.numel(); ++i) EXPECT_DOUBLE_EQ(x.grad()[i], 2.0 * x.data()[i]);
}

TEST(Backward, AccumulatesAcrossUses) {
  Tensor x = Tensor::from({2}, {1.0, 2.0});
  x.set_requires_grad(true);
  sum(add(scale(x, 3.0), x)).backward();
  EXPECT_EQ(std::vector<double>(x.grad().begin(), x.grad().end()), (std::vector<double>{4, 4}));
  sum(x).backward();
  EXPECT_EQ(x.grad()[0], 5.0);
}

TEST(Backward, NonScalarIsUsageError) {
  Rng rng(19);
  Tensor x = leaf({2, 2}, rng);
  EXPECT_THROW(scale(x, 2.0).backward(), UsageError);
}

TEST(Backward, NoGradGuardRecordsNothing) {
  Rng rng(20);
  Tensor x = leaf({2, 2}, rng);
  NoGradGuard guard;
  EXPECT_TRUE(silu(x).is_leaf());
}

TEST(Backward, FaultInjectionNegatesNamedNode) {
  Rng rng(21);
  Tensor x = leaf({4}, rng);
  autodiff::set_backward_fault("sigmoid");
  sum(sigmoid(x)).backward();
  autodiff::set_backward_fault("");
  for (int64_t i = 0; i < 4; ++i) {
    const double s = 1.0 / (1.0 + std::exp(-x.data()[i]));
    EXPECT_NEAR(x.grad()[i], -s * (1 - s), 1e-15);
  }
}

}  // namespace
}  // namespace hieraedge
