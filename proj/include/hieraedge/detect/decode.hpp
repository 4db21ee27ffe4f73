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

#include <span>
#include <string>
#include <vector>

#include "hieraedge/detect/box.hpp"
#include "hieraedge/detect/head.hpp"

namespace hieraedge {

// Cell-centre anchor point of one head location.
struct Anchor {
  double x = 0, y = 0;
  double stride = 0;
  int level = 0;
  int64_t row = 0, col = 0;
};

// Anchors of all levels, level-major then row-major.
std::vector<Anchor> make_anchors(const HeadOutput& head);

// Expected bin index under softmax(logits); lies in [0, R-1].
double dfl_decode(std::span<const double> logits);

// Per-anchor predictions of one image, in anchor order.
struct ImagePredictions {
  std::vector<Anchor> anchors;
  std::vector<double> reg_logits;  // anchor-major, 4 * R per anchor
  std::vector<double> distances;   // anchor-major, (l, t, r, b) in stride units
  std::vector<BBox> boxes;         // unclamped, pixels
  std::vector<double> cls_logits;  // anchor-major, num_classes per anchor
};

ImagePredictions gather_predictions(const HeadOutput& head, int64_t image);

BBox distances_to_box(const Anchor& a, const std::array<double, 4>& ltrb);

struct DecodeOptions {
  double score_threshold = 0.25;
  double iou_threshold = 0.7;
  int max_detections = 300;
  double image_w = 0;  // clamp extent; 0 disables clamping
  double image_h = 0;
};

// Every (anchor, class) pair with sigmoid score above the threshold, boxes
// clamped to the image. No suppression.
std::vector<std::vector<Detection>> decode_boxes(const HeadOutput& head, const DecodeOptions& opts);

// decode_boxes, then per-class NMS, then the max_detections best.
std::vector<std::vector<Detection>> postprocess(const HeadOutput& head, const DecodeOptions& opts);

// Per-class greedy suppression, survivors ordered by descending score; ties
// go to the lower class id, then to the earlier input.
std::vector<Detection> nms(const std::vector<Detection>& dets, double iou_threshold);

namespace reference {
// Quadratic re-implementation: repeatedly take the best remaining detection.
std::vector<Detection> nms(const std::vector<Detection>& dets, double iou_threshold);
}  // namespace reference

// One JSON object per line: {image_id, class_id, score, bbox:[x1,y1,x2,y2]}.
std::string detections_to_jsonl(const std::string& image_id, const std::vector<Detection>& dets);

}  // namespace hieraedge
