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

#include "hieraedge/data/augment.hpp"

#include <algorithm>
#include <cmath>

#include "hieraedge/errors.hpp"

namespace hieraedge {

AugmentPolicy AugmentPolicy::none() {
  AugmentPolicy p;
  p.flip_prob = 0.0;
  p.color_prob = 0.0;
  return p;
}

Sample hflip(const Sample& s) {
  Sample out = s;
  const int64_t w = s.image.width;
  for (int c = 0; c < 3; ++c) {
    for (int64_t y = 0; y < s.image.height; ++y) {
      for (int64_t x = 0; x < w; ++x) out.image.at(c, y, x) = s.image.at(c, y, w - 1 - x);
    }
  }
  const double fw = static_cast<double>(w);
  for (GroundTruth& g : out.gts) {
    const double x1 = fw - g.bbox.x2, x2 = fw - g.bbox.x1;
    g.bbox.x1 = x1;
    g.bbox.x2 = x2;
  }
  return out;
}

Image gaussian_blur(const Image& image, double sigma) {
  if (sigma < 0) throw UsageError("gaussian_blur: negative sigma");
  if (sigma == 0) return image;
  const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  std::vector<double> kernel(2 * radius + 1);
  double z = 0.0;
  for (int i = -radius; i <= radius; ++i) z += (kernel[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma)));
  for (double& k : kernel) k /= z;
  const int64_t w = image.width, h = image.height;
  Image tmp(w, h), out(w, h);
  for (int c = 0; c < 3; ++c) {
    for (int64_t y = 0; y < h; ++y) {
      for (int64_t x = 0; x < w; ++x) {
        double acc = 0.0;
        for (int i = -radius; i <= radius; ++i) {
          acc += kernel[i + radius] * image.at(c, y, std::clamp<int64_t>(x + i, 0, w - 1));
        }
        tmp.at(c, y, x) = acc;
      }
    }
    for (int64_t y = 0; y < h; ++y) {
      for (int64_t x = 0; x < w; ++x) {
        double acc = 0.0;
        for (int i = -radius; i <= radius; ++i) {
          acc += kernel[i + radius] * tmp.at(c, std::clamp<int64_t>(y + i, 0, h - 1), x);
        }
        out.at(c, y, x) = acc;
      }
    }
  }
  return out;
}

Image color_shift(const Image& image, const std::array<double, 3>& gains,
                  const std::array<double, 3>& biases) {
  Image out = image;
  const int64_t plane = image.width * image.height;
  for (int c = 0; c < 3; ++c) {
    for (int64_t i = 0; i < plane; ++i) {
      double& v = out.pixels[c * plane + i];
      v = std::clamp(gains[c] * v + biases[c], 0.0, 1.0);
    }
  }
  return out;
}

Sample mosaic(const std::array<const Sample*, 4>& tiles) {
  const int64_t w = tiles[0]->image.width, h = tiles[0]->image.height;
  if (w % 2 || h % 2) throw DimensionError("mosaic: frame size must be even");
  Sample out;
  out.id = tiles[0]->id + "+mosaic";
  out.image = Image(w, h);
  const int64_t hw = w / 2, hh = h / 2;
  for (int k = 0; k < 4; ++k) {
    const Sample& s = *tiles[k];
    if (s.image.width != w || s.image.height != h) {
      throw DimensionError("mosaic: tiles must share the frame size");
    }
    const int64_t ox = (k % 2) * hw, oy = (k / 2) * hh;
    for (int c = 0; c < 3; ++c) {
      for (int64_t y = 0; y < hh; ++y) {
        for (int64_t x = 0; x < hw; ++x) {
          out.image.at(c, oy + y, ox + x) =
              0.25 * (s.image.at(c, 2 * y, 2 * x) + s.image.at(c, 2 * y, 2 * x + 1) +
                      s.image.at(c, 2 * y + 1, 2 * x) + s.image.at(c, 2 * y + 1, 2 * x + 1));
        }
      }
    }
    for (const GroundTruth& g : s.gts) {
      GroundTruth m = g;
      m.bbox = {std::clamp(g.bbox.x1 / 2 + ox, double(ox), double(ox + hw)),
                std::clamp(g.bbox.y1 / 2 + oy, double(oy), double(oy + hh)),
                std::clamp(g.bbox.x2 / 2 + ox, double(ox), double(ox + hw)),
                std::clamp(g.bbox.y2 / 2 + oy, double(oy), double(oy + hh))};
      if (m.bbox.area() >= 4.0) out.gts.push_back(m);
    }
  }
  return out;
}

Sample augment(const Sample& s, const AugmentPolicy& p, Rng& rng, std::span<const Sample> pool) {
  Sample out = s;
  if (p.mosaic_prob > 0 && !pool.empty() && rng.bernoulli(p.mosaic_prob)) {
    std::array<const Sample*, 4> tiles = {&s, nullptr, nullptr, nullptr};
    for (int k = 1; k < 4; ++k) tiles[k] = &pool[rng.uniform_int(static_cast<int64_t>(pool.size()))];
    out = mosaic(tiles);
  }
  if (p.flip_prob > 0 && rng.bernoulli(p.flip_prob)) out = hflip(out);
  if (p.blur_prob > 0 && rng.bernoulli(p.blur_prob)) {
    out.image = gaussian_blur(out.image, rng.uniform(0.0, p.max_blur_sigma));
  }
  if (p.color_prob > 0 && rng.bernoulli(p.color_prob)) {
    std::array<double, 3> gains{}, biases{};
    for (int c = 0; c < 3; ++c) {
      gains[c] = 1.0 + rng.uniform(-p.max_gain_shift, p.max_gain_shift);
      biases[c] = rng.uniform(-p.max_bias_shift, p.max_bias_shift);
    }
    out.image = color_shift(out.image, gains, biases);
  }
  return out;
}

}  // namespace hieraedge
