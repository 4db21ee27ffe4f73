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
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hieraedge/data/image.hpp"
#include "hieraedge/detect/box.hpp"
#include "hieraedge/rng.hpp"

namespace hieraedge {

enum class BackgroundKind { kFlat, kNoise, kImage };

struct Background {
  BackgroundKind kind = BackgroundKind::kNoise;
  std::array<double, 3> tint = {0.82, 0.80, 0.74};
  double noise_amplitude = 0.06;
  int noise_cells = 8;  // lattice resolution of the smooth value noise
  std::optional<Image> image;  // used by kImage, resampled to the scene size
};

// One rendered grain: a rotated ellipse with concentric rings and a
// sinusoidal surface texture, alpha-blended with a soft rim.
struct GrainSpec {
  int class_id = 0;
  double cx = 0, cy = 0;
  double a = 8, b = 6;  // semi-axes in pixels, a along the rotated x axis
  double theta = 0;     // radians
  double texture_freq = 0.8;
  double rings = 3;
  double softness = 1.0;  // rim width in pixels
  std::array<double, 3> tint = {0.6, 0.4, 0.2};
};

// Appearance parameters shared by every grain of a class.
struct ClassStyle {
  std::array<double, 3> tint;
  double texture_freq;
  double rings;
};

ClassStyle class_style(int class_id);

// Truncated power law over class ids: P(k) proportional to (k + 1)^-exponent.
std::vector<double> class_probabilities(int num_classes, double exponent);

struct SceneSpec {
  int64_t width = 128;
  int64_t height = 128;
  int num_classes = 3;
  Background background;
  int min_grains = 1;
  int max_grains = 4;
  double min_axis = 9.0;
  double max_axis = 18.0;
  double class_exponent = 1.0;
  int max_retries = 50;
  double max_overlap_iou = 0.1;
  uint64_t seed = 0;
  // When non-empty, rendered as given instead of being sampled.
  std::vector<GrainSpec> grains;
};

struct Scene {
  Image image;
  std::vector<GroundTruth> gts;
  int dropped_grains = 0;  // placements abandoned after max_retries
};

// Tight box of the rotated ellipse before clipping to the frame.
BBox ellipse_box(const GrainSpec& g);

void render_grain(Image& image, const GrainSpec& g);

// Deterministic in spec (including seed). Every grain keeps at least half
// of its box inside the frame; gt boxes are clipped to the frame.
Scene synth_scene(const SceneSpec& spec);

}  // namespace hieraedge
