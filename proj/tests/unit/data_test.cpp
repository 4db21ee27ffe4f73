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
#include <iterator>

#include "hieraedge/data/augment.hpp"
#include "hieraedge/data/dataset.hpp"
#include "test_util.hpp"

namespace hieraedge {
namespace {

namespace fs = std::filesystem;

// Fresh directory under the system temp dir, removed on scope exit.
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

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_text(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

Sample single_gt_sample(int64_t size, const BBox& box, int cls) {
  Sample s;
  s.id = "tile";
  s.image = Image(size, size, 0.5);
  s.gts = {{box, cls}};
  return s;
}

TEST(SynthScene, NoGrainsGivesBackgroundOnly) {
  SceneSpec spec;
  spec.min_grains = spec.max_grains = 0;
  spec.background.kind = BackgroundKind::kFlat;
  const Scene scene = synth_scene(spec);
  EXPECT_TRUE(scene.gts.empty());
  for (int c = 0; c < 3; ++c) EXPECT_EQ(scene.image.at(c, 7, 9), spec.background.tint[c]);
}

TEST(SynthScene, AxisAlignedEllipseBox) {
  GrainSpec g;
  g.cx = g.cy = 32;
  g.a = 10;
  g.b = 6;
  g.theta = 0;
  const BBox b = ellipse_box(g);
  EXPECT_NEAR(b.x1, 22, 1e-12);
  EXPECT_NEAR(b.y1, 26, 1e-12);
  EXPECT_NEAR(b.x2, 42, 1e-12);
  EXPECT_NEAR(b.y2, 38, 1e-12);

  SceneSpec spec;
  spec.width = spec.height = 64;
  spec.grains = {g};
  const Scene scene = synth_scene(spec);
  ASSERT_EQ(scene.gts.size(), 1u);
  EXPECT_NEAR(scene.gts[0].bbox.x1, 22, 1e-12);
  EXPECT_NEAR(scene.gts[0].bbox.y2, 38, 1e-12);
}

TEST(SynthScene, RotatedBoxIsTight) {
  GrainSpec g;
  g.cx = 40;
  g.cy = 30;
  g.a = 12;
  g.b = 5;
  g.theta = 0.7;
  const BBox b = ellipse_box(g);
  // Dense boundary sampling never leaves the box and touches every side.
  double lo_x = INFINITY, hi_x = -INFINITY, lo_y = INFINITY, hi_y = -INFINITY;
  for (int k = 0; k < 200000; ++k) {
    const double t = 2 * std::numbers::pi * k / 200000.0;
    const double x = g.cx + g.a * std::cos(t) * std::cos(g.theta) - g.b * std::sin(t) * std::sin(g.theta);
    const double y = g.cy + g.a * std::cos(t) * std::sin(g.theta) + g.b * std::sin(t) * std::cos(g.theta);
    lo_x = std::min(lo_x, x), hi_x = std::max(hi_x, x);
    lo_y = std::min(lo_y, y), hi_y = std::max(hi_y, y);
  }
  EXPECT_NEAR(b.x1, lo_x, 1e-6);
  EXPECT_NEAR(b.x2, hi_x, 1e-6);
  EXPECT_NEAR(b.y1, lo_y, 1e-6);
  EXPECT_NEAR(b.y2, hi_y, 1e-6);
}

TEST(SynthScene, SameSeedSameScene) {
  SceneSpec spec;
  spec.seed = 99;
  const Scene a = synth_scene(spec), b = synth_scene(spec);
  EXPECT_EQ(a.image, b.image);
  ASSERT_EQ(a.gts.size(), b.gts.size());
  spec.seed = 100;
  EXPECT_NE(synth_scene(spec).image, a.image);
}

TEST(SynthDataset, BoxesArePositiveAndInBounds) {
  SynthOptions o;
  o.scenes = 40;
  o.seed = 3;
  o.num_classes = 4;
  const Dataset d = synth_dataset(o);
  int boxes = 0;
  for (const Sample& s : d.samples) {
    for (const GroundTruth& g : s.gts) {
      ++boxes;
      EXPECT_GT(g.bbox.area(), 0.0);
      EXPECT_GE(g.bbox.x1, 0.0);
      EXPECT_GE(g.bbox.y1, 0.0);
      EXPECT_LE(g.bbox.x2, 128.0);
      EXPECT_LE(g.bbox.y2, 128.0);
      EXPECT_LT(g.class_id, 4);
    }
  }
  EXPECT_GT(boxes, 40);
}

TEST(SynthDataset, ClassFrequenciesWithinThreeSigma) {
  SynthOptions o;
  o.scenes = 1000;
  o.seed = 11;
  o.num_classes = 5;
  o.class_exponent = 1.2;
  o.image_size = 96;
  const Dataset d = synth_dataset(o);
  const std::vector<int> counts = d.class_counts();
  const std::vector<double> p = class_probabilities(5, 1.2);
  int total = 0;
  for (int c : counts) total += c;
  ASSERT_GT(total, 1000);
  for (int k = 0; k < 5; ++k) {
    const double mean = total * p[k], sigma = std::sqrt(total * p[k] * (1 - p[k]));
    EXPECT_LT(std::abs(counts[k] - mean), 3 * sigma) << "class " << k;
  }
}

TEST(SynthDataset, PowerLawProbabilities) {
  const std::vector<double> p = class_probabilities(3, 1.0);
  const double z = 1.0 + 0.5 + 1.0 / 3.0;
  EXPECT_NEAR(p[0], 1.0 / z, 1e-15);
  EXPECT_NEAR(p[2], 1.0 / 3.0 / z, 1e-15);
}

TEST(SynthDataset, WrittenFilesAreByteIdentical) {
  SynthOptions o;
  o.scenes = 6;
  o.seed = 5;
  TempDir a("synth_a"), b("synth_b");
  write_dataset(a.path(), synth_dataset(o));
  write_dataset(b.path(), synth_dataset(o));
  int files = 0;
  for (const auto& e : fs::recursive_directory_iterator(a.path())) {
    if (!e.is_regular_file()) continue;
    ++files;
    const fs::path twin = b.path() / fs::relative(e.path(), a.path());
    EXPECT_EQ(slurp(e.path()), slurp(twin)) << e.path();
  }
  EXPECT_EQ(files, 2 * 6 + 1);
}

TEST(SynthDataset, RejectsZeroClasses) {
  SynthOptions o;
  o.num_classes = 0;
  EXPECT_THROW(synth_dataset(o), ConfigError);
}

TEST(SynthDataset, DiskRoundTripMatchesMemory) {
  SynthOptions o;
  o.scenes = 4;
  o.seed = 8;
  const Dataset d = synth_dataset(o);
  TempDir dir("roundtrip");
  write_dataset(dir.path(), d);
  const Dataset back = load_annotations(dir.path());
  ASSERT_EQ(back.samples.size(), d.samples.size());
  EXPECT_EQ(back.class_names, d.class_names);
  for (size_t i = 0; i < d.samples.size(); ++i) {
    EXPECT_EQ(back.samples[i].id, d.samples[i].id);
    EXPECT_EQ(back.samples[i].image, d.samples[i].image);
    ASSERT_EQ(back.samples[i].gts.size(), d.samples[i].gts.size());
    for (size_t k = 0; k < d.samples[i].gts.size(); ++k) {
      // Labels carry nine normalised decimals: sub-micropixel drift per pass.
      EXPECT_NEAR(back.samples[i].gts[k].bbox.x1, d.samples[i].gts[k].bbox.x1, 1e-6);
      EXPECT_NEAR(back.samples[i].gts[k].bbox.y2, d.samples[i].gts[k].bbox.y2, 1e-6);
      EXPECT_EQ(back.samples[i].gts[k].class_id, d.samples[i].gts[k].class_id);
    }
  }
}

TEST(Labels, NormalisedLineToPixels) {
  const auto gt = parse_label_line("3 0.5 0.5 0.25 0.25", 128, 128, 4);
  ASSERT_TRUE(gt.has_value());
  EXPECT_EQ(gt->class_id, 3);
  EXPECT_DOUBLE_EQ(gt->bbox.x1, 48);
  EXPECT_DOUBLE_EQ(gt->bbox.y1, 48);
  EXPECT_DOUBLE_EQ(gt->bbox.x2, 80);
  EXPECT_DOUBLE_EQ(gt->bbox.y2, 80);
}

TEST(Labels, RejectsBadLines) {
  std::string why;
  EXPECT_FALSE(parse_label_line("4 0.5 0.5 0.25 0.25", 128, 128, 4, &why));
  EXPECT_FALSE(why.empty());
  EXPECT_FALSE(parse_label_line("1 0.5 0.5 0.25", 128, 128, 4));
  EXPECT_FALSE(parse_label_line("1 0.5 0.5 0 0.25", 128, 128, 4));
  EXPECT_FALSE(parse_label_line("x 0.5 0.5 0.2 0.2", 128, 128, 4));
  EXPECT_FALSE(parse_label_line("-1 0.5 0.5 0.2 0.2", 128, 128, 4));
}

TEST(Labels, FormatRoundTrip) {
  const GroundTruth gt{{10.25, 3.5, 40.75, 90}, 2};
  const auto back = parse_label_line(format_label_line(gt, 128, 96), 128, 96, 3);
  ASSERT_TRUE(back.has_value());
  EXPECT_NEAR(back->bbox.x1, gt.bbox.x1, 1e-6);
  EXPECT_NEAR(back->bbox.y2, gt.bbox.y2, 1e-6);
  EXPECT_EQ(back->class_id, 2);
}

TEST(LoadAnnotations, EmptyMissingAndRejected) {
  TempDir dir("labels");
  fs::create_directories(dir.path() / "images");
  fs::create_directories(dir.path() / "labels");
  write_text(dir.path() / "classes.txt", "a\nb\n");
  for (const char* id : {"img_a", "img_b", "img_c"}) {
    write_png(dir.path() / "images" / (std::string(id) + ".png"), Image(32, 32, 0.2));
  }
  write_text(dir.path() / "labels" / "img_a.txt", "");
  write_text(dir.path() / "labels" / "img_b.txt", "1 0.5 0.5 0.5 0.5\n2 0.5 0.5 0.5 0.5\n");
  LoadReport report;
  const Dataset d = load_annotations(dir.path(), &report);
  ASSERT_EQ(d.samples.size(), 3u);
  EXPECT_TRUE(d.find("img_a").gts.empty());
  ASSERT_EQ(d.find("img_b").gts.size(), 1u);
  EXPECT_EQ(d.find("img_b").gts[0].class_id, 1);
  EXPECT_TRUE(d.find("img_c").gts.empty());
  EXPECT_EQ(report.rejected_lines, 1);
  EXPECT_EQ(report.missing_labels, 1);
  EXPECT_EQ(report.warnings.size(), 2u);
}

TEST(Png, QuantisedRoundTrip) {
  Rng rng(1);
  Image img(17, 9);
  for (double& v : img.pixels) v = rng.uniform();
  TempDir dir("png");
  write_png(dir.path() / "x.png", img);
  EXPECT_EQ(read_png(dir.path() / "x.png"), quantized(img));
  EXPECT_THROW(read_png(dir.path() / "missing.png"), std::runtime_error);
}

TEST(Augment, FlipMirrorsBoxes) {
  const Sample s = single_gt_sample(128, {10, 20, 30, 40}, 1);
  const Sample f = hflip(s);
  EXPECT_EQ(f.gts[0].bbox.x1, 98);
  EXPECT_EQ(f.gts[0].bbox.y1, 20);
  EXPECT_EQ(f.gts[0].bbox.x2, 118);
  EXPECT_EQ(f.gts[0].bbox.y2, 40);
  EXPECT_EQ(f.gts[0].class_id, 1);
  EXPECT_EQ(hflip(f).image, s.image);
}

TEST(Augment, ZeroSigmaBlurIsIdentity) {
  Rng rng(2);
  Image img(12, 10);
  for (double& v : img.pixels) v = rng.uniform();
  EXPECT_EQ(gaussian_blur(img, 0.0), img);
  const Image flat(12, 10, 0.3);
  for (double v : gaussian_blur(flat, 1.3).pixels) EXPECT_NEAR(v, 0.3, 1e-12);
}

TEST(Augment, ColourShiftClamps) {
  const Image img(4, 4, 0.8);
  const Image out = color_shift(img, {1.5, 1.0, 0.5}, {0.0, 0.1, -0.5});
  EXPECT_EQ(out.at(0, 1, 1), 1.0);
  EXPECT_NEAR(out.at(1, 1, 1), 0.9, 1e-15);
  EXPECT_EQ(out.at(2, 1, 1), 0.0);
}

TEST(Augment, MosaicRemapsOneBoxPerQuadrant) {
  const Sample s = single_gt_sample(128, {10, 20, 30, 40}, 2);
  const Sample m = mosaic({&s, &s, &s, &s});
  ASSERT_EQ(m.gts.size(), 4u);
  const double ox[4] = {0, 64, 0, 64}, oy[4] = {0, 0, 64, 64};
  for (int k = 0; k < 4; ++k) {
    EXPECT_EQ(m.gts[k].bbox.x1, 5 + ox[k]);
    EXPECT_EQ(m.gts[k].bbox.y1, 10 + oy[k]);
    EXPECT_EQ(m.gts[k].bbox.x2, 15 + ox[k]);
    EXPECT_EQ(m.gts[k].bbox.y2, 20 + oy[k]);
    EXPECT_EQ(m.gts[k].class_id, 2);
  }
}

TEST(Augment, MosaicDropsDegenerateBoxes) {
  const Sample tiny = single_gt_sample(64, {10, 10, 13, 13}, 0);
  EXPECT_TRUE(mosaic({&tiny, &tiny, &tiny, &tiny}).gts.empty());
}

TEST(Augment, PolicyKeepsClassesAndBounds) {
  SynthOptions o;
  o.scenes = 8;
  o.seed = 4;
  const Dataset d = synth_dataset(o);
  AugmentPolicy policy;
  policy.mosaic_prob = 0.5;
  policy.blur_prob = 0.5;
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const Sample& s = d.samples[trial % 8];
    const Sample a = augment(s, policy, rng, d.samples);
    for (const GroundTruth& g : a.gts) {
      EXPECT_GT(g.bbox.area(), 0.0);
      EXPECT_GE(g.bbox.x1, 0.0);
      EXPECT_LE(g.bbox.x2, 128.0);
      EXPECT_LT(g.class_id, 3);
    }
    for (double v : a.image.pixels) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
  }
  Rng r1(6), r2(6);
  EXPECT_EQ(augment(d.samples[0], policy, r1, d.samples).image,
            augment(d.samples[0], policy, r2, d.samples).image);
}

Dataset single_instance_images(const std::vector<int>& per_class) {
  Dataset d;
  for (size_t c = 0; c < per_class.size(); ++c) d.class_names.push_back("c" + std::to_string(c));
  int id = 0;
  for (size_t c = 0; c < per_class.size(); ++c) {
    for (int i = 0; i < per_class[c]; ++i) {
      Sample s = single_gt_sample(8, {1, 1, 5, 5}, static_cast<int>(c));
      s.id = "img_" + std::to_string(id++);
      d.samples.push_back(std::move(s));
    }
  }
  return d;
}

TEST(StratifiedSplit, TenImagesGiveEightTwo) {
  const DatasetSplit s = stratified_split(single_instance_images({10}), 0.2, 1);
  EXPECT_EQ(s.train.size(), 8u);
  EXPECT_EQ(s.val.size(), 2u);
}

TEST(StratifiedSplit, ImbalancedClassesKeepTheirShare) {
  const DatasetSplit s = stratified_split(single_instance_images({100, 10}), 0.2, 1);
  EXPECT_NEAR(s.val_counts[0], 20, 1);
  EXPECT_NEAR(s.val_counts[1], 2, 1);
  EXPECT_EQ(s.train_counts[0] + s.val_counts[0], 100);
  EXPECT_GT(s.train_counts[1], 0);
}

TEST(StratifiedSplit, DeterministicInSeed) {
  const Dataset d = single_instance_images({30, 7, 3});
  const DatasetSplit a = stratified_split(d, 0.2, 9), b = stratified_split(d, 0.2, 9);
  EXPECT_EQ(a.train, b.train);
  EXPECT_EQ(a.val, b.val);
}

TEST(StratifiedSplit, SingletonClassStaysInTrain) {
  const DatasetSplit s = stratified_split(single_instance_images({9, 1}), 0.2, 2);
  EXPECT_EQ(s.train_counts[1], 1);
  EXPECT_EQ(s.val_counts[1], 0);
  EXPECT_FALSE(s.warnings.empty());
}

TEST(StratifiedSplit, EveryRepeatedClassInBothSplits) {
  SynthOptions o;
  o.scenes = 60;
  o.seed = 12;
  o.num_classes = 5;
  const Dataset d = synth_dataset(o);
  const DatasetSplit s = stratified_split(d, 0.2, 3);
  const std::vector<int> counts = d.class_counts();
  for (int c = 0; c < 5; ++c) {
    if (counts[c] < 2) continue;
    EXPECT_GT(s.train_counts[c], 0) << c;
    EXPECT_GT(s.val_counts[c], 0) << c;
  }
  EXPECT_NEAR(static_cast<double>(s.val.size()), 12.0, 5.0 + 1.0);
  const DatasetSplit back = split_from_json(to_json(s));
  EXPECT_EQ(back.val, s.val);
}

}  // namespace
}  // namespace hieraedge
