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

#include <cstdint>
#include <string>

#include "json.hpp"

namespace hieraedge {

// Channel plan at width 1.0.
struct ChannelPlan {
  int64_t p1 = 64, p2 = 128, p2_prime = 256, p3 = 512, p4 = 512, p5 = 1024;
  int64_t e_p3 = 128, e_p4 = 256, e_p5 = 512;
  int64_t detect_p3 = 256, detect_p4 = 512, detect_p5 = 1024;
};

struct LossWeights {
  double box = 7.5;
  double dfl = 1.5;
  double cls = 0.5;
  double focal_alpha = 0.25;
  double focal_gamma = 2.0;
};

struct ModelConfig {
  int64_t num_classes = 3;
  double width = 0.125;
  double depth = 0.34;
  int64_t dfl_bins = 8;
  int64_t okm_kernel = 5;  // both the square and the strip kernels
  int64_t input_h = 128;
  int64_t input_w = 128;
  double csp_e = 0.25;
  LossWeights loss;

  // Desk preset: small enough for finite-difference checks and CPU overfits.
  static ModelConfig desk();
  // Width 1, depth 1, 640x640, R=16, 31-wide kernels, 120 classes.
  static ModelConfig full();
  // Width 0.25, depth 0.5 at 640x640 (the common "nano" scaling).
  static ModelConfig nano();

  // Scaled channel count: rounded to a multiple of 8, never below 8.
  int64_t channels(int64_t base) const;
  // Scaled repeat count, never below 1.
  int repeats(int base) const;
  ChannelPlan scaled() const;

  // Throws ConfigError naming the first violated constraint.
  void validate() const;
};

nlohmann::json to_json(const ModelConfig& c);
ModelConfig model_config_from_json(const nlohmann::json& j);

// Accepts a preset name ("desk", "full", "nano") or a path to a JSON file
// whose keys override the desk preset.
ModelConfig load_model_config(const std::string& preset_or_path);

}  // namespace hieraedge
