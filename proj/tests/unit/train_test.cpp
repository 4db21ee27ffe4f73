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
#include <filesystem>
#include <fstream>
#include <numbers>

#include "hieraedge/data/dataset.hpp"
#include "hieraedge/errors.hpp"
#include "hieraedge/train/checkpoint.hpp"
#include "hieraedge/train/gradcam.hpp"
#include "hieraedge/train/optimizer.hpp"
#include "hieraedge/train/trainer.hpp"
#include "test_util.hpp"

namespace hieraedge {
namespace {

namespace fs = std::filesystem;

class TempDir {
 public:
  explicit TempDir(const std::string& name)
      : path_(fs::temp_directory_path() / ("hieraedge_test_" + name)) {
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

ModelConfig tiny_model() {
  ModelConfig c = ModelConfig::desk();
  c.width = 0.0625;
  c.input_h = c.input_w = 64;
  c.okm_kernel = 3;
  c.num_classes = 2;
  return c;
}

Dataset tiny_data() {
  SynthOptions o;
  o.scenes = 4;
  o.num_classes = 2;
  o.image_size = 64;
  o.seed = 17;
  o.min_axis = 6;
  o.max_axis = 10;
  return synth_dataset(o);
}

DatasetSplit all_train(const Dataset& d) {
  DatasetSplit s;
  for (const Sample& x : d.samples) s.train.push_back(x.id);
  return s;
}

TrainConfig tiny_train() {
  TrainConfig c;
  c.model = tiny_model();
  c.epochs = 3;
  c.batch_size = 2;
  c.lr = 0.01;
  c.augment = AugmentPolicy::none();
  c.eval_every = 0;
  c.seed = 5;
  return c;
}

TEST(Checkpoint, SaveLoadRestoreRoundTrip) {
  const ModelConfig cfg = tiny_model();
  nn::Detector a(cfg, 1), b(cfg, 2);
  TempDir dir("ckpt");
  save_checkpoint(dir.path() / "m.ckpt", a, cfg, {{"epoch", 4}});
  const Checkpoint ck = load_checkpoint(dir.path() / "m.ckpt");
  EXPECT_EQ(ck.epoch(), 4);
  EXPECT_EQ(to_json(ck.config), to_json(cfg));
  restore_module(b, ck);
  const auto pa = a.named_parameters(), pb = b.named_parameters();
  ASSERT_EQ(pa.size(), pb.size());
  for (size_t i = 0; i < pa.size(); ++i) {
    EXPECT_EQ(pa[i].first, pb[i].first);
    EXPECT_EQ(pa[i].second.values(), pb[i].second.values()) << pa[i].first;
  }
  const auto ba = a.named_buffers(), bb = b.named_buffers();
  for (size_t i = 0; i < ba.size(); ++i) EXPECT_EQ(ba[i].second.values(), bb[i].second.values());
}

TEST(Checkpoint, TruncatedOrForeignFileIsConfigError) {
  const ModelConfig cfg = tiny_model();
  nn::Detector a(cfg, 1);
  TempDir dir("ckpt_bad");
  const fs::path p = dir.path() / "m.ckpt";
  save_checkpoint(p, a, cfg, {});
  fs::resize_file(p, fs::file_size(p) - 9);
  EXPECT_THROW(load_checkpoint(p), ConfigError);
  std::ofstream(dir.path() / "junk.ckpt") << "not a checkpoint at all";
  EXPECT_THROW(load_checkpoint(dir.path() / "junk.ckpt"), ConfigError);
  EXPECT_THROW(load_checkpoint(dir.path() / "absent.ckpt"), ConfigError);
}

TEST(Checkpoint, ShapeMismatchNamesTheEntry) {
  ModelConfig small = tiny_model(), wide = tiny_model();
  wide.width = 0.125;
  nn::Detector a(small, 1), b(wide, 1);
  TempDir dir("ckpt_shape");
  save_checkpoint(dir.path() / "m.ckpt", a, small, {});
  try {
    restore_module(b, load_checkpoint(dir.path() / "m.ckpt"));
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("shape"), std::string::npos) << e.what();
  }
}

TEST(Sgd, MomentumAndDecayByHand) {
  Tensor w = Tensor::from({2, 1}, {1.0, -2.0});
  Tensor b = Tensor::from({2}, {0.5, 0.5});
  w.set_requires_grad(true);
  b.set_requires_grad(true);
  SgdOptions o;
  o.momentum = 0.9;
  o.weight_decay = 0.1;
  o.max_grad_norm = 0;
  Sgd sgd({{"w", w}, {"b", b}}, o);
  for (int step = 0; step < 2; ++step) {
    sgd.zero_grad();
    sum(add(w, w)).backward();  // dL/dw = 2
    sum(b).backward();          // dL/db = 1
    sgd.step(0.1);
  }
  // w: g1 = 2 + 0.1 w0, v1 = g1, w1 = w0 - 0.1 v1; g2 = 2 + 0.1 w1, v2 = 0.9 v1 + g2.
  for (int i = 0; i < 2; ++i) {
    const double w0 = i == 0 ? 1.0 : -2.0;
    const double v1 = 2 + 0.1 * w0, w1 = w0 - 0.1 * v1;
    const double v2 = 0.9 * v1 + 2 + 0.1 * w1;
    EXPECT_NEAR(w.values()[i], w1 - 0.1 * v2, 1e-15);
  }
  // Rank-1 tensors skip weight decay.
  EXPECT_NEAR(b.values()[0], 0.5 - 0.1 * 1.0 - 0.1 * 1.9, 1e-15);
}

TEST(Sgd, GlobalNormClip) {
  Tensor w = Tensor::from({1, 2}, {0.0, 0.0});
  w.set_requires_grad(true);
  SgdOptions o;
  o.momentum = 0;
  o.weight_decay = 0;
  o.max_grad_norm = 1.0;
  Sgd sgd({{"w", w}}, o);
  sgd.zero_grad();
  sum(mul(w, Tensor::from({1, 2}, {3.0, 4.0}))).backward();
  EXPECT_NEAR(sgd.step(1.0), 5.0, 1e-15);
  EXPECT_NEAR(w.values()[0], -0.6, 1e-15);
  EXPECT_NEAR(w.values()[1], -0.8, 1e-15);
}

TEST(CosineLr, WarmupThenDecay) {
  EXPECT_NEAR(cosine_lr(0, 100, 0.1, 10, 0.05), 0.1 / 10, 1e-15);
  EXPECT_NEAR(cosine_lr(9, 100, 0.1, 10, 0.05), 0.1, 1e-15);
  EXPECT_NEAR(cosine_lr(10, 100, 0.1, 10, 0.05), 0.1, 1e-15);
  EXPECT_NEAR(cosine_lr(100, 100, 0.1, 10, 0.05), 0.005, 1e-15);
  const double mid = cosine_lr(55, 100, 0.1, 10, 0.05);
  EXPECT_NEAR(mid, 0.005 + 0.5 * 0.095 * (1 + std::cos(std::numbers::pi * 0.5)), 1e-15);
  double prev = 1;
  for (int s = 10; s <= 100; ++s) {
    const double lr = cosine_lr(s, 100, 0.1, 10, 0.05);
    EXPECT_LE(lr, prev + 1e-18);
    prev = lr;
  }
}

TEST(TrainConfig, JsonRoundTrip) {
  TrainConfig c = tiny_train();
  c.max_iterations = 77;
  c.augment.mosaic_prob = 0.25;
  const TrainConfig back = train_config_from_json(to_json(c));
  EXPECT_EQ(to_json(back), to_json(c));
  EXPECT_EQ(train_config_from_json(nlohmann::json::object()).epochs, TrainConfig{}.epochs);
}

TEST(Train, SameSeedSameLosses) {
  const Dataset d = tiny_data();
  TrainConfig c = tiny_train();
  c.epochs = 1;
  c.augment = AugmentPolicy{};
  const TrainResult a = train(c, d, all_train(d)), b = train(c, d, all_train(d));
  ASSERT_EQ(a.iterations.size(), 2u);
  for (size_t i = 0; i < a.iterations.size(); ++i) {
    EXPECT_EQ(a.iterations[i].total, b.iterations[i].total);
    EXPECT_EQ(a.iterations[i].grad_norm, b.iterations[i].grad_norm);
  }
}

TEST(Train, ZeroLearningRateFreezesTheModel) {
  const Dataset d = tiny_data();
  TrainConfig c = tiny_train();
  c.lr = 0;
  c.batch_size = 4;
  const TrainResult r = train(c, d, all_train(d));
  ASSERT_EQ(r.iterations.size(), 3u);
  // Each epoch reshuffles the one batch, so only summation order changes.
  for (const IterationLog& it : r.iterations) EXPECT_NEAR(it.total, r.iterations[0].total, 1e-9);
}

TEST(Train, ResumeContinuesExactly) {
  const Dataset d = tiny_data();
  TempDir full("resume_full"), rest("resume_rest");
  TrainConfig c = tiny_train();
  c.out_dir = full.path().string();
  const fs::path snapshot = full.path() / "epoch1.ckpt";
  TrainHooks hooks;
  hooks.on_epoch = [&](const EpochLog& e) {
    if (e.epoch == 1) fs::copy_file(full.path() / "last.ckpt", snapshot);
  };
  const TrainResult straight = train(c, d, all_train(d), hooks);
  ASSERT_EQ(straight.epochs.size(), 3u);

  c.out_dir = rest.path().string();
  c.resume = snapshot.string();
  const TrainResult resumed = train(c, d, all_train(d));
  ASSERT_EQ(resumed.epochs.size(), 1u);
  EXPECT_EQ(resumed.epochs[0].epoch, 2);
  EXPECT_NEAR(resumed.epochs[0].total, straight.epochs[2].total, 1e-6);
  EXPECT_EQ(resumed.iterations.front().iteration, 4);
}

TEST(Train, WrongImageSizeIsConfigError) {
  const Dataset d = tiny_data();
  TrainConfig c = tiny_train();
  c.model.input_h = c.model.input_w = 128;
  EXPECT_THROW(train(c, d, all_train(d)), ConfigError);
}

TEST(TrainOutputs, LogsAndCheckpointsWritten) {
  const Dataset d = tiny_data();
  TempDir dir("outputs");
  TrainConfig c = tiny_train();
  c.epochs = 1;
  c.out_dir = dir.path().string();
  const TrainResult r = train(c, d, all_train(d));
  for (const char* name : {"config.json", "train_log.csv", "iterations.csv", "last.ckpt", "best.ckpt"}) {
    EXPECT_TRUE(fs::exists(dir.path() / name)) << name;
  }
  ASSERT_TRUE(r.epochs.back().map50.has_value());
  EXPECT_GE(*r.epochs.back().map50, 0.0);
}

TEST(GradCam, ZeroGradientGivesZeroMap) {
  Rng rng(1);
  const Tensor act = testing::random_tensor({1, 4, 8, 8}, rng);
  const std::vector<double> zeros(act.numel(), 0.0);
  for (const Heatmap& h : {cam_from(act, zeros, 32, 32), cam_from(act, {}, 32, 32)}) {
    ASSERT_EQ(h.values.size(), 32u * 32u);
    for (double v : h.values) EXPECT_EQ(v, 0.0);
  }
}

TEST(GradCam, NormalisedToUnitPeak) {
  // One channel, gradient mean 1: the map is the rectified activation.
  Tensor act = Tensor::zeros({1, 1, 4, 4});
  act.values()[5] = 2.0;
  act.values()[10] = -3.0;
  const std::vector<double> grad(16, 1.0);
  const Heatmap h = cam_from(act, grad, 4, 4);
  EXPECT_DOUBLE_EQ(h.at(1, 1), 1.0);
  EXPECT_EQ(h.at(2, 2), 0.0);
  EXPECT_EQ(h.argmax_x, 1);
  EXPECT_EQ(h.argmax_y, 1);
}

TEST(GradCam, AbsentClassIsUsageErrorAndGradsStayClear) {
  const ModelConfig cfg = tiny_model();
  nn::Detector model(cfg, 3);
  const Dataset d = tiny_data();
  EXPECT_THROW(grad_cam(model, d.samples[0].image, 2), UsageError);
  EXPECT_THROW(grad_cam(model, d.samples[0].image, -1), UsageError);
  model.set_training(true);
  const GradCamResult r = grad_cam(model, d.samples[0].image, 1);
  EXPECT_TRUE(model.training());
  EXPECT_EQ(r.detect_p3.values.size(), 64u * 64u);
  for (double v : r.detect_p3.values) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
  for (const auto& [name, t] : model.named_parameters()) {
    if (!t.has_grad()) continue;
    for (double g : t.grad()) ASSERT_EQ(g, 0.0) << name;
  }
}

}  // namespace
}  // namespace hieraedge
