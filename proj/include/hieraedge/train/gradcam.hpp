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

#include <filesystem>
#include <vector>

#include "hieraedge/data/image.hpp"
#include "hieraedge/detect/head.hpp"

namespace hieraedge {

// Heatmap at input resolution, values in [0, 1], row-major.
struct Heatmap {
  int64_t width = 0, height = 0;
  std::vector<double> values;
  int64_t argmax_x = 0, argmax_y = 0;  // first maximum in row-major order

  double at(int64_t x, int64_t y) const { return values[y * width + x]; }
};

struct GradCamResult {
  Heatmap detect_p3;    // detection-head input at stride 8
  Heatmap backbone_p5;  // attention-refined backbone output at stride 32
};

enum class CamScore {
  kDetectedLogits,  // target logits of anchors scoring >= threshold; all anchors if none
  kAllLogits,       // target logits of every anchor
  kAllSigmoid,      // sigmoid target scores of every anchor
};

struct CamOptions {
  CamScore score = CamScore::kDetectedLogits;
  double threshold = 0.25;
};

// Class-activation maps for the target score chosen by opts. Channel weights
// are the spatial means of the score gradient; the weighted sum is
// ReLU-rectified, divided by its maximum and bilinearly resized to the
// input. A map with no positive response is all zeros. Runs the model in
// eval mode and leaves parameter grads cleared.
GradCamResult grad_cam(nn::Detector& model, const Image& image, int target_class,
                       const CamOptions& opts = {});

// Builds a heatmap from an activation map and its gradient, both (1, C, h, w).
Heatmap cam_from(const Tensor& activation, std::span<const double> gradient, int64_t out_w,
                 int64_t out_h);

// 50/50 blend of the image and the colour-mapped heatmap.
void write_cam_overlay(const std::filesystem::path& path, const Image& image, const Heatmap& heat);

}  // namespace hieraedge
