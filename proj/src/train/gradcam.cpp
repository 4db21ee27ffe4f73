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

#include "hieraedge/train/gradcam.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "hieraedge/errors.hpp"

namespace hieraedge {

Heatmap cam_from(const Tensor& activation, std::span<const double> gradient, int64_t out_w,
                 int64_t out_h) {
  const int64_t c = activation.dim(1), h = activation.dim(2), w = activation.dim(3);
  const auto a = activation.data();
  std::vector<double> coarse(h * w, 0.0);
  if (!gradient.empty()) {
    for (int64_t ch = 0; ch < c; ++ch) {
      double weight = 0.0;
      for (int64_t i = 0; i < h * w; ++i) weight += gradient[ch * h * w + i];
      weight /= static_cast<double>(h * w);
      for (int64_t i = 0; i < h * w; ++i) coarse[i] += weight * a[ch * h * w + i];
    }
  }
  double peak = 0.0;
  for (double& v : coarse) peak = std::max(peak, v = std::max(v, 0.0));
  if (peak > 0) {
    for (double& v : coarse) v /= peak;
  }

  Heatmap out;
  out.width = out_w;
  out.height = out_h;
  out.values.resize(out_w * out_h);
  const double sy = static_cast<double>(h) / static_cast<double>(out_h);
  const double sx = static_cast<double>(w) / static_cast<double>(out_w);
  for (int64_t y = 0; y < out_h; ++y) {
    const double fy = std::clamp((static_cast<double>(y) + 0.5) * sy - 0.5, 0.0, double(h - 1));
    const auto y0 = static_cast<int64_t>(fy);
    const int64_t y1 = std::min(y0 + 1, h - 1);
    const double ty = fy - static_cast<double>(y0);
    for (int64_t x = 0; x < out_w; ++x) {
      const double fx = std::clamp((static_cast<double>(x) + 0.5) * sx - 0.5, 0.0, double(w - 1));
      const auto x0 = static_cast<int64_t>(fx);
      const int64_t x1 = std::min(x0 + 1, w - 1);
      const double tx = fx - static_cast<double>(x0);
      out.values[y * out_w + x] =
          (1 - ty) * ((1 - tx) * coarse[y0 * w + x0] + tx * coarse[y0 * w + x1]) +
          ty * ((1 - tx) * coarse[y1 * w + x0] + tx * coarse[y1 * w + x1]);
    }
  }
  const auto best = std::max_element(out.values.begin(), out.values.end()) - out.values.begin();
  out.argmax_x = best % out_w;
  out.argmax_y = best / out_w;
  return out;
}

GradCamResult grad_cam(nn::Detector& model, const Image& image, int target_class,
                       const CamOptions& opts) {
  const int64_t nc = model.config().num_classes;
  if (target_class < 0 || target_class >= nc) {
    throw UsageError("grad_cam: class " + std::to_string(target_class) + " not in [0, " +
                     std::to_string(nc) + ")");
  }
  const bool was_training = model.training();
  model.set_training(false);
  model.net->keep_taps = true;

  nn::FeatureMaps f = model.net->forward(images_to_tensor({&image}));
  Tensor p3 = f.detect_p3;
  Tensor p5 = model.net->taps.backbone_p5;
  p3.retain_grad();
  p5.retain_grad();
  const HeadOutput head = model.head->forward(f);
  // Anchor selection mask per level over the (1, nc, h, w) class logits.
  std::array<std::vector<double>, kNumLevels> masks;
  bool any_detected = false;
  const double logit_floor = std::log(opts.threshold / (1.0 - opts.threshold));
  for (int l = 0; l < kNumLevels; ++l) {
    const Tensor& cls = head.cls[l];
    const int64_t plane = cls.dim(2) * cls.dim(3);
    masks[l].assign(cls.numel(), 0.0);
    const auto v = cls.data();
    for (int64_t i = 0; i < plane; ++i) {
      const int64_t k = target_class * plane + i;
      const bool all = opts.score != CamScore::kDetectedLogits;
      if (all || v[k] >= logit_floor) {
        masks[l][k] = 1.0;
        any_detected = true;
      }
    }
  }
  if (!any_detected) {
    for (int l = 0; l < kNumLevels; ++l) {
      const int64_t plane = head.cls[l].dim(2) * head.cls[l].dim(3);
      std::fill_n(masks[l].begin() + target_class * plane, plane, 1.0);
    }
  }
  Tensor score;
  for (int l = 0; l < kNumLevels; ++l) {
    const Tensor values = opts.score == CamScore::kAllSigmoid ? sigmoid(head.cls[l]) : head.cls[l];
    const Tensor part = weighted_sum(values, masks[l]);
    score = score.defined() ? add(score, part) : part;
  }
  score.backward();

  GradCamResult r;
  r.detect_p3 = cam_from(p3, p3.has_grad() ? p3.grad() : std::span<const double>{}, image.width,
                         image.height);
  r.backbone_p5 = cam_from(p5, p5.has_grad() ? p5.grad() : std::span<const double>{}, image.width,
                           image.height);

  for (auto& [name, t] : model.named_parameters()) t.zero_grad();
  model.net->keep_taps = false;
  model.net->taps = {};
  model.set_training(was_training);
  return r;
}

void write_cam_overlay(const std::filesystem::path& path, const Image& image, const Heatmap& heat) {
  if (heat.width != image.width || heat.height != image.height) {
    throw DimensionError("write_cam_overlay: heatmap and image sizes differ");
  }
  std::vector<uint8_t> rgb(3 * image.width * image.height);
  for (int64_t y = 0; y < image.height; ++y) {
    for (int64_t x = 0; x < image.width; ++x) {
      const auto c = colormap(heat.at(x, y));
      for (int k = 0; k < 3; ++k) {
        rgb[(y * image.width + x) * 3 + k] = to_byte(0.5 * image.at(k, y, x) + 0.5 * c[k] / 255.0);
      }
    }
  }
  write_png_rgb8(path, image.width, image.height, rgb);
}

}  // namespace hieraedge
