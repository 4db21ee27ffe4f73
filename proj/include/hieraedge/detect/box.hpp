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
#include <vector>

namespace hieraedge {

// Axis-aligned box in input-image pixels.
struct BBox {
  double x1 = 0, y1 = 0, x2 = 0, y2 = 0;

  double width() const { return x2 - x1; }
  double height() const { return y2 - y1; }
  double area() const { return width() * height(); }
  double cx() const { return 0.5 * (x1 + x2); }
  double cy() const { return 0.5 * (y1 + y2); }
  bool contains(double x, double y) const { return x > x1 && x < x2 && y > y1 && y < y2; }
};

struct Detection {
  BBox bbox;
  int class_id = 0;
  double score = 0;
};

struct GroundTruth {
  BBox bbox;
  int class_id = 0;
};

// Plain intersection over union; 0 when the union is empty.
double iou(const BBox& a, const BBox& b);

struct CiouResult {
  double iou = 0;
  double loss = 0;                 // 1 - CIoU
  std::array<double, 4> d_pred{};  // d loss / d (x1, y1, x2, y2) of the prediction
};

// CIoU loss of pred against gt with the exact derivative, including the
// dependence of the aspect trade-off weight on the prediction.
CiouResult ciou_loss(const BBox& pred, const BBox& gt);

}  // namespace hieraedge
