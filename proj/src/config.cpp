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

#include "hieraedge/config.hpp"

#include <cmath>
#include <fstream>

#include "hieraedge/errors.hpp"

namespace hieraedge {

ModelConfig ModelConfig::desk() { return ModelConfig{}; }

ModelConfig ModelConfig::full() {
  ModelConfig c;
  c.num_classes = 120;
  c.width = 1.0;
  c.depth = 1.0;
  c.dfl_bins = 16;
  c.okm_kernel = 31;
  c.input_h = c.input_w = 640;
  return c;
}

ModelConfig ModelConfig::nano() {
  ModelConfig c = full();
  c.width = 0.25;
  c.depth = 0.5;
  return c;
}

int64_t ModelConfig::channels(int64_t base) const {
  const double scaled = static_cast<double>(base) * width;
  const auto rounded = static_cast<int64_t>(std::ceil(scaled / 8.0 - 1e-9)) * 8;
  return std::max<int64_t>(8, rounded);
}

int ModelConfig::repeats(int base) const {
  return std::max(1, static_cast<int>(std::lround(base * depth)));
}

ChannelPlan ModelConfig::scaled() const {
  const ChannelPlan b;
  ChannelPlan s;
  s.p1 = channels(b.p1);
  s.p2 = channels(b.p2);
  s.p2_prime = channels(b.p2_prime);
  s.p3 = channels(b.p3);
  s.p4 = channels(b.p4);
  s.p5 = channels(b.p5);
  s.e_p3 = channels(b.e_p3);
  s.e_p4 = channels(b.e_p4);
  s.e_p5 = channels(b.e_p5);
  s.detect_p3 = channels(b.detect_p3);
  s.detect_p4 = channels(b.detect_p4);
  s.detect_p5 = channels(b.detect_p5);
  return s;
}

void ModelConfig::validate() const {
  auto fail = [](const std::string& what) { throw ConfigError("model config: " + what); };
  if (num_classes < 1) fail("num_classes must be >= 1");
  if (!(width > 0.0)) fail("width multiplier must be positive");
  if (!(depth > 0.0)) fail("depth multiplier must be positive");
  if (dfl_bins < 2) fail("dfl_bins must be >= 2");
  if (okm_kernel < 1 || okm_kernel % 2 == 0) fail("okm_kernel must be odd and positive");
  if (input_h <= 0 || input_w <= 0 || input_h % 32 != 0 || input_w % 32 != 0) {
    fail("input size " + std::to_string(input_h) + "x" + std::to_string(input_w) +
         " must be positive and divisible by 32");
  }
  if (!(csp_e > 0.0 && csp_e < 1.0)) fail("csp_e must lie in (0, 1)");
  const ChannelPlan s = scaled();
  const auto okm = static_cast<int64_t>(std::lround(csp_e * static_cast<double>(s.detect_p3)));
  if (okm < 1 || okm >= s.detect_p3) fail("csp_e leaves a CSPOKM share below one channel");
  const int64_t attn_dim = s.p5 / 2;
  const int64_t heads = std::max<int64_t>(1, attn_dim / 32);
  if (attn_dim % heads != 0) {
    fail("P5 attention width " + std::to_string(attn_dim) + " is not divisible by " +
         std::to_string(heads) + " heads");
  }
  if (loss.box < 0 || loss.dfl < 0 || loss.cls < 0) fail("loss weights must be non-negative");
}

nlohmann::json to_json(const ModelConfig& c) {
  return {{"num_classes", c.num_classes},
          {"width", c.width},
          {"depth", c.depth},
          {"dfl_bins", c.dfl_bins},
          {"okm_kernel", c.okm_kernel},
          {"input_h", c.input_h},
          {"input_w", c.input_w},
          {"csp_e", c.csp_e},
          {"loss",
           {{"box", c.loss.box},
            {"dfl", c.loss.dfl},
            {"cls", c.loss.cls},
            {"focal_alpha", c.loss.focal_alpha},
            {"focal_gamma", c.loss.focal_gamma}}}};
}

ModelConfig model_config_from_json(const nlohmann::json& j) {
  ModelConfig c = ModelConfig::desk();
  if (j.contains("preset")) {
    const std::string preset = j.at("preset").get<std::string>();
    if (preset == "full") c = ModelConfig::full();
    else if (preset == "nano") c = ModelConfig::nano();
    else if (preset != "desk") throw ConfigError("model config: unknown preset '" + preset + "'");
  }
  try {
    c.num_classes = j.value("num_classes", c.num_classes);
    c.width = j.value("width", c.width);
    c.depth = j.value("depth", c.depth);
    c.dfl_bins = j.value("dfl_bins", c.dfl_bins);
    c.okm_kernel = j.value("okm_kernel", c.okm_kernel);
    c.input_h = j.value("input_h", c.input_h);
    c.input_w = j.value("input_w", c.input_w);
    if (j.contains("input_size")) c.input_h = c.input_w = j.at("input_size").get<int64_t>();
    c.csp_e = j.value("csp_e", c.csp_e);
    if (j.contains("loss")) {
      const auto& l = j.at("loss");
      c.loss.box = l.value("box", c.loss.box);
      c.loss.dfl = l.value("dfl", c.loss.dfl);
      c.loss.cls = l.value("cls", c.loss.cls);
      c.loss.focal_alpha = l.value("focal_alpha", c.loss.focal_alpha);
      c.loss.focal_gamma = l.value("focal_gamma", c.loss.focal_gamma);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("model config: ") + e.what());
  }
  c.validate();
  return c;
}

ModelConfig load_model_config(const std::string& preset_or_path) {
  if (preset_or_path.empty() || preset_or_path == "desk") return ModelConfig::desk();
  if (preset_or_path == "full") return ModelConfig::full();
  if (preset_or_path == "nano") return ModelConfig::nano();
  std::ifstream in(preset_or_path);
  if (!in) throw ConfigError("cannot open config file '" + preset_or_path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config file '" + preset_or_path + "': " + e.what());
  }
  // A training config nests the model section.
  return model_config_from_json(j.contains("model") ? j.at("model") : j);
}

}  // namespace hieraedge
