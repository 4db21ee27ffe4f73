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

#include "hieraedge/data/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "hieraedge/errors.hpp"

namespace hieraedge {

namespace {

double smoothstep(double e0, double e1, double x) {
  const double t = std::clamp((x - e0) / (e1 - e0), 0.0, 1.0);
  return t * t * (3.0 - 2.0 * t);
}

// Bilinear interpolation of a random lattice, one lattice per channel.
void fill_noise(Image& img, const Background& bg, Rng& rng) {
  const int cells = std::max(1, bg.noise_cells);
  const int side = cells + 1;
  for (int c = 0; c < 3; ++c) {
    std::vector<double> lattice(side * side);
    for (double& v : lattice) v = rng.uniform(-1.0, 1.0);
    for (int64_t y = 0; y < img.height; ++y) {
      const double fy = (static_cast<double>(y) + 0.5) / static_cast<double>(img.height) * cells;
      const int iy = std::min(static_cast<int>(fy), cells - 1);
      const double ty = fy - iy;
      for (int64_t x = 0; x < img.width; ++x) {
        const double fx = (static_cast<double>(x) + 0.5) / static_cast<double>(img.width) * cells;
        const int ix = std::min(static_cast<int>(fx), cells - 1);
        const double tx = fx - ix;
        const double n = (1 - ty) * ((1 - tx) * lattice[iy * side + ix] + tx * lattice[iy * side + ix + 1]) +
                         ty * ((1 - tx) * lattice[(iy + 1) * side + ix] +
                               tx * lattice[(iy + 1) * side + ix + 1]);
        img.at(c, y, x) = std::clamp(bg.tint[c] + bg.noise_amplitude * n, 0.0, 1.0);
      }
    }
  }
}

Image make_background(const SceneSpec& spec, Rng& rng) {
  Image img(spec.width, spec.height);
  const Background& bg = spec.background;
  switch (bg.kind) {
    case BackgroundKind::kFlat:
      for (int c = 0; c < 3; ++c) {
        std::fill_n(img.pixels.begin() + c * spec.width * spec.height, spec.width * spec.height,
                    bg.tint[c]);
      }
      break;
    case BackgroundKind::kNoise:
      fill_noise(img, bg, rng);
      break;
    case BackgroundKind::kImage: {
      if (!bg.image || bg.image->width <= 0 || bg.image->height <= 0) {
        throw ConfigError("synth: image background requested without an image");
      }
      const Image& src = *bg.image;
      for (int c = 0; c < 3; ++c) {
        for (int64_t y = 0; y < img.height; ++y) {
          const int64_t sy = y * src.height / img.height;
          for (int64_t x = 0; x < img.width; ++x) {
            img.at(c, y, x) = src.at(c, sy, x * src.width / img.width);
          }
        }
      }
      break;
    }
  }
  return img;
}

BBox clip(const BBox& b, double w, double h) {
  return {std::clamp(b.x1, 0.0, w), std::clamp(b.y1, 0.0, h), std::clamp(b.x2, 0.0, w),
          std::clamp(b.y2, 0.0, h)};
}

}  // namespace

ClassStyle class_style(int class_id) {
  // Hues spread by the golden angle; rings and texture frequency step per class.
  const double hue = std::fmod(0.08 + 0.381966 * class_id, 1.0);
  auto channel = [&](double offset) {
    const double t = std::fmod(hue + offset, 1.0);
    return 0.15 + 0.7 * (0.5 + 0.5 * std::cos(2.0 * std::numbers::pi * t));
  };
  return {{channel(0.0), channel(2.0 / 3.0), channel(1.0 / 3.0)},
          0.5 + 0.45 * (class_id % 5),
          2.0 + (class_id % 4)};
}

std::vector<double> class_probabilities(int num_classes, double exponent) {
  if (num_classes < 1) throw ConfigError("class_probabilities: need at least one class");
  std::vector<double> p(num_classes);
  double z = 0.0;
  for (int k = 0; k < num_classes; ++k) z += (p[k] = std::pow(k + 1.0, -exponent));
  for (double& v : p) v /= z;
  return p;
}

BBox ellipse_box(const GrainSpec& g) {
  const double c = std::cos(g.theta), s = std::sin(g.theta);
  const double hw = std::sqrt(g.a * g.a * c * c + g.b * g.b * s * s);
  const double hh = std::sqrt(g.a * g.a * s * s + g.b * g.b * c * c);
  return {g.cx - hw, g.cy - hh, g.cx + hw, g.cy + hh};
}

void render_grain(Image& img, const GrainSpec& g) {
  const BBox box = ellipse_box(g);
  const double cs = std::cos(g.theta), sn = std::sin(g.theta);
  const double rim = std::max(g.softness, 1e-6) / std::min(g.a, g.b);
  const auto x0 = std::max<int64_t>(0, static_cast<int64_t>(std::floor(box.x1)) - 1);
  const auto y0 = std::max<int64_t>(0, static_cast<int64_t>(std::floor(box.y1)) - 1);
  const auto x1 = std::min<int64_t>(img.width - 1, static_cast<int64_t>(std::ceil(box.x2)) + 1);
  const auto y1 = std::min<int64_t>(img.height - 1, static_cast<int64_t>(std::ceil(box.y2)) + 1);
  for (int64_t y = y0; y <= y1; ++y) {
    for (int64_t x = x0; x <= x1; ++x) {
      const double dx = static_cast<double>(x) + 0.5 - g.cx, dy = static_cast<double>(y) + 0.5 - g.cy;
      const double u = (dx * cs + dy * sn) / g.a;
      const double v = (-dx * sn + dy * cs) / g.b;
      const double r = std::sqrt(u * u + v * v);
      const double alpha = 1.0 - smoothstep(1.0 - rim, 1.0, r);
      if (alpha <= 0.0) continue;
      const double ring = 0.5 + 0.5 * std::cos(2.0 * std::numbers::pi * g.rings * r);
      const double grain = std::sin(g.texture_freq * u * g.a) * std::sin(g.texture_freq * v * g.b);
      const double shade = std::clamp(0.7 + 0.25 * ring + 0.12 * grain - 0.2 * r * r, 0.0, 1.2);
      for (int c = 0; c < 3; ++c) {
        const double colour = std::clamp(g.tint[c] * shade, 0.0, 1.0);
        img.at(c, y, x) = alpha * colour + (1.0 - alpha) * img.at(c, y, x);
      }
    }
  }
}

Scene synth_scene(const SceneSpec& spec) {
  if (spec.width <= 0 || spec.height <= 0) throw ConfigError("synth: image size must be positive");
  if (spec.num_classes < 1) throw ConfigError("synth: need at least one class");
  Rng rng(spec.seed);
  Scene scene;
  scene.image = make_background(spec, rng);
  const double w = static_cast<double>(spec.width), h = static_cast<double>(spec.height);

  std::vector<GrainSpec> grains = spec.grains;
  if (grains.empty() && spec.max_grains > 0) {
    const std::vector<double> probs = class_probabilities(spec.num_classes, spec.class_exponent);
    const int count = spec.min_grains + static_cast<int>(rng.uniform_int(
                                            std::max(1, spec.max_grains - spec.min_grains + 1)));
    std::vector<BBox> placed;
    for (int i = 0; i < count; ++i) {
      double pick = rng.uniform();
      int cls = spec.num_classes - 1;
      for (int k = 0; k < spec.num_classes; ++k) {
        if (pick < probs[k]) {
          cls = k;
          break;
        }
        pick -= probs[k];
      }
      const ClassStyle style = class_style(cls);
      GrainSpec g;
      g.class_id = cls;
      g.a = rng.uniform(spec.min_axis, spec.max_axis);
      g.b = g.a * rng.uniform(0.6, 0.95);
      g.theta = rng.uniform(0.0, std::numbers::pi);
      g.texture_freq = style.texture_freq;
      g.rings = style.rings;
      g.softness = rng.uniform(0.8, 1.6);
      for (int c = 0; c < 3; ++c) g.tint[c] = std::clamp(style.tint[c] + rng.uniform(-0.04, 0.04), 0.0, 1.0);
      bool ok = false;
      for (int attempt = 0; attempt < spec.max_retries && !ok; ++attempt) {
        g.cx = rng.uniform(0.0, w);
        g.cy = rng.uniform(0.0, h);
        const BBox full = ellipse_box(g);
        const BBox vis = clip(full, w, h);
        if (vis.area() < 0.5 * full.area()) continue;
        ok = std::none_of(placed.begin(), placed.end(), [&](const BBox& other) {
          return iou(other, full) > spec.max_overlap_iou;
        });
      }
      if (!ok) {
        ++scene.dropped_grains;
        continue;
      }
      placed.push_back(ellipse_box(g));
      grains.push_back(g);
    }
  }

  for (const GrainSpec& g : grains) {
    render_grain(scene.image, g);
    const BBox vis = clip(ellipse_box(g), w, h);
    if (vis.area() > 0) scene.gts.push_back({vis, g.class_id});
  }
  return scene;
}

}  // namespace hieraedge
