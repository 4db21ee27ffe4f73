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
#include <span>

#include "hieraedge/data/dataset.hpp"
#include "hieraedge/rng.hpp"

namespace hieraedge {

struct AugmentPolicy {
  double mosaic_prob = 0.0;
  double flip_prob = 0.5;
  double blur_prob = 0.0;
  double max_blur_sigma = 1.0;
  double color_prob = 0.5;
  double max_gain_shift = 0.1;  // per-channel gain drawn from 1 +- this
  double max_bias_shift = 0.05;

  static AugmentPolicy none();
};

// Mirror about the vertical centre line: x' = W - x.
Sample hflip(const Sample& s);

// Separable Gaussian with edge clamping; sigma = 0 returns the input.
Image gaussian_blur(const Image& image, double sigma);

// v' = clamp(gain_c * v + bias_c, 0, 1).
Image color_shift(const Image& image, const std::array<double, 3>& gains,
                  const std::array<double, 3>& biases);

// Four samples, each 2x2 box-downsampled into one quadrant (top-left,
// top-right, bottom-left, bottom-right) of a frame the size of the first.
// Boxes map as x' = x / 2 + ox; remapped boxes under 4 px^2 are dropped.
Sample mosaic(const std::array<const Sample*, 4>& tiles);

// Mosaic (drawing three partners from pool), flip, blur and colour shift,
// each applied with its policy probability. Draws from rng in a fixed order.
Sample augment(const Sample& s, const AugmentPolicy& policy, Rng& rng,
               std::span<const Sample> pool = {});

}  // namespace hieraedge
