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

#include "hieraedge/detect/box.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace hieraedge {

namespace {

// Forward-mode dual with derivatives against the four prediction coordinates.
struct Dual {
  double v = 0;
  std::array<double, 4> d{};

  static Dual constant(double x) { return {x, {}}; }
  static Dual variable(double x, int i) {
    Dual r{x, {}};
    r.d[i] = 1.0;
    return r;
  }
};

Dual operator+(const Dual& a, const Dual& b) {
  Dual r{a.v + b.v, {}};
  for (int i = 0; i < 4; ++i) r.d[i] = a.d[i] + b.d[i];
  return r;
}
Dual operator-(const Dual& a, const Dual& b) {
  Dual r{a.v - b.v, {}};
  for (int i = 0; i < 4; ++i) r.d[i] = a.d[i] - b.d[i];
  return r;
}
Dual operator*(const Dual& a, const Dual& b) {
  Dual r{a.v * b.v, {}};
  for (int i = 0; i < 4; ++i) r.d[i] = a.d[i] * b.v + a.v * b.d[i];
  return r;
}
Dual operator*(double s, const Dual& a) {
  Dual r{s * a.v, {}};
  for (int i = 0; i < 4; ++i) r.d[i] = s * a.d[i];
  return r;
}
Dual operator/(const Dual& a, const Dual& b) {
  Dual r{a.v / b.v, {}};
  for (int i = 0; i < 4; ++i) r.d[i] = (a.d[i] * b.v - a.v * b.d[i]) / (b.v * b.v);
  return r;
}
Dual dmin(const Dual& a, const Dual& b) { return a.v <= b.v ? a : b; }
Dual dmax(const Dual& a, const Dual& b) { return a.v >= b.v ? a : b; }
Dual datan2(const Dual& y, const Dual& x) {
  Dual r{std::atan2(y.v, x.v), {}};
  const double den = x.v * x.v + y.v * y.v;
  if (den > 0) {
    for (int i = 0; i < 4; ++i) r.d[i] = (x.v * y.d[i] - y.v * x.d[i]) / den;
  }
  return r;
}

}  // namespace

double iou(const BBox& a, const BBox& b) {
  const double iw = std::max(0.0, std::min(a.x2, b.x2) - std::max(a.x1, b.x1));
  const double ih = std::max(0.0, std::min(a.y2, b.y2) - std::max(a.y1, b.y1));
  const double inter = iw * ih;
  const double uni = a.area() + b.area() - inter;
  return uni > 0 ? inter / uni : 0.0;
}

CiouResult ciou_loss(const BBox& pred, const BBox& gt) {
  const Dual x1 = Dual::variable(pred.x1, 0), y1 = Dual::variable(pred.y1, 1);
  const Dual x2 = Dual::variable(pred.x2, 2), y2 = Dual::variable(pred.y2, 3);
  const Dual gx1 = Dual::constant(gt.x1), gy1 = Dual::constant(gt.y1);
  const Dual gx2 = Dual::constant(gt.x2), gy2 = Dual::constant(gt.y2);
  const Dual zero = Dual::constant(0.0);

  const Dual w = x2 - x1, h = y2 - y1;
  const Dual gw = gx2 - gx1, gh = gy2 - gy1;
  const Dual iw = dmax(zero, dmin(x2, gx2) - dmax(x1, gx1));
  const Dual ih = dmax(zero, dmin(y2, gy2) - dmax(y1, gy1));
  const Dual inter = iw * ih;
  const Dual uni = w * h + gw * gh - inter;
  const Dual iou_d = uni.v > 0 ? inter / uni : zero;

  const Dual cw = dmax(x2, gx2) - dmin(x1, gx1);
  const Dual ch = dmax(y2, gy2) - dmin(y1, gy1);
  const Dual c2 = cw * cw + ch * ch;
  const Dual dx = gx1 + gx2 - x1 - x2, dy = gy1 + gy2 - y1 - y2;
  const Dual rho2 = 0.25 * (dx * dx + dy * dy);
  const Dual center = c2.v > 0 ? rho2 / c2 : zero;

  const Dual dtheta = datan2(gw, gh) - datan2(w, h);
  const Dual v = (4.0 / (std::numbers::pi * std::numbers::pi)) * (dtheta * dtheta);
  const Dual alpha_den = v - iou_d + Dual::constant(1.0);
  const Dual alpha = alpha_den.v > 0 ? v / alpha_den : zero;

  const Dual loss = Dual::constant(1.0) - iou_d + center + alpha * v;
  CiouResult r;
  r.iou = iou_d.v;
  r.loss = loss.v;
  r.d_pred = loss.d;
  return r;
}

}  // namespace hieraedge
