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

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "hieraedge/data/image.hpp"
#include "hieraedge/eval/metrics.hpp"

namespace hieraedge {

namespace {

using Rgb = std::array<uint8_t, 3>;

class Canvas {
 public:
  Canvas(int64_t w, int64_t h) : w_(w), h_(h), rgb_(3 * w * h, 255) {}

  void put(int64_t x, int64_t y, Rgb c) {
    if (x < 0 || y < 0 || x >= w_ || y >= h_) return;
    std::copy(c.begin(), c.end(), rgb_.begin() + 3 * (y * w_ + x));
  }
  void fill(int64_t x0, int64_t y0, int64_t x1, int64_t y1, Rgb c) {
    for (int64_t y = y0; y < y1; ++y) {
      for (int64_t x = x0; x < x1; ++x) put(x, y, c);
    }
  }
  void line(double x0, double y0, double x1, double y1, Rgb c, int thickness = 2) {
    const int steps = static_cast<int>(std::max(std::abs(x1 - x0), std::abs(y1 - y0))) + 1;
    for (int s = 0; s <= steps; ++s) {
      const double t = static_cast<double>(s) / steps;
      const auto x = static_cast<int64_t>(std::lround(x0 + t * (x1 - x0)));
      const auto y = static_cast<int64_t>(std::lround(y0 + t * (y1 - y0)));
      fill(x - thickness / 2, y - thickness / 2, x - thickness / 2 + thickness,
           y - thickness / 2 + thickness, c);
    }
  }
  void save(const std::filesystem::path& p) const { write_png_rgb8(p, w_, h_, rgb_); }

 private:
  int64_t w_, h_;
  std::vector<uint8_t> rgb_;
};

constexpr int64_t kSize = 400, kMargin = 40;
constexpr Rgb kAxis = {40, 40, 40}, kGrid = {225, 225, 225}, kMean = {20, 20, 120};

Rgb class_colour(int c, int n) {
  return colormap(n > 1 ? 0.1 + 0.8 * c / (n - 1) : 0.5);
}

// Unit-square plot frame: returns the pixel mapping of (u, v) in [0, 1]^2.
struct Frame {
  double px(double u) const { return kMargin + u * (kSize - 2 * kMargin); }
  double py(double v) const { return kSize - kMargin - v * (kSize - 2 * kMargin); }
};

void draw_axes(Canvas& cv, const Frame& f) {
  for (int k = 0; k <= 10; ++k) {
    const double t = k / 10.0;
    cv.line(f.px(t), f.py(0), f.px(t), f.py(1), kGrid, 1);
    cv.line(f.px(0), f.py(t), f.px(1), f.py(t), kGrid, 1);
  }
  cv.line(f.px(0), f.py(0), f.px(1), f.py(0), kAxis, 2);
  cv.line(f.px(0), f.py(0), f.px(0), f.py(1), kAxis, 2);
}

void polyline(Canvas& cv, const Frame& f, const std::vector<double>& xs,
              const std::vector<double>& ys, Rgb c, int thickness) {
  for (size_t i = 1; i < xs.size(); ++i) {
    cv.line(f.px(xs[i - 1]), f.py(ys[i - 1]), f.px(xs[i]), f.py(ys[i]), c, thickness);
  }
}

}  // namespace

void write_eval_plots(const std::filesystem::path& dir, const EvalReport& r) {
  const Frame f;
  std::vector<double> grid(101);
  for (int k = 0; k <= 100; ++k) grid[k] = k / 100.0;

  Canvas pr(kSize, kSize);
  draw_axes(pr, f);
  std::vector<double> mean(101, 0.0);
  int present = 0;
  for (int c = 0; c < r.num_classes; ++c) {
    if (r.gt_counts[c] == 0) continue;
    ++present;
    polyline(pr, f, grid, r.pr_precision[c], class_colour(c, r.num_classes), 1);
    for (int k = 0; k <= 100; ++k) mean[k] += r.pr_precision[c][k];
  }
  if (present > 0) {
    for (double& v : mean) v /= present;
    polyline(pr, f, grid, mean, kMean, 3);
  }
  pr.save(dir / "pr_curve.png");

  Canvas f1(kSize, kSize);
  draw_axes(f1, f);
  polyline(f1, f, r.f1_confidence, r.f1, kMean, 3);
  f1.line(f.px(r.best_f1_confidence), f.py(0), f.px(r.best_f1_confidence), f.py(r.best_f1),
          {200, 30, 30}, 1);
  f1.save(dir / "f1_curve.png");

  // Row-normalised heatmap; last row and column are background.
  const int n = r.num_classes + 1;
  const int64_t cell = std::max<int64_t>(4, (kSize - 2 * kMargin) / n);
  Canvas cm(2 * kMargin + cell * n, 2 * kMargin + cell * n);
  for (int row = 0; row < n; ++row) {
    int total = 0;
    for (int v : r.confusion[row]) total += v;
    for (int col = 0; col < n; ++col) {
      const double v = total > 0 ? static_cast<double>(r.confusion[row][col]) / total : 0.0;
      cm.fill(kMargin + col * cell, kMargin + row * cell, kMargin + (col + 1) * cell - 1,
              kMargin + (row + 1) * cell - 1, colormap(v));
    }
  }
  cm.save(dir / "confusion.png");
}

}  // namespace hieraedge
