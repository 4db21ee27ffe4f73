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
#include <vector>

#include "hieraedge/config.hpp"
#include "hieraedge/detect/decode.hpp"

namespace hieraedge {

// -alpha_t (1 - p_t)^gamma log(p_t), p clamped to [1e-9, 1 - 1e-9].
double focal_loss(double p, int y, double alpha = 0.25, double gamma = 2.0);

struct FocalTerm {
  double loss = 0;
  double d_logit = 0;
};

// Focal loss on p = sigmoid(logit) with log-sigmoid evaluated stably.
FocalTerm focal_from_logit(double logit, int y, double alpha, double gamma);

struct DflTerm {
  double loss = 0;
  bool clamped = false;
};

// Two-bin cross entropy around a continuous target, softmax over the bins.
// The target is clamped to [0, R - 1.01]. d_logits, when non-empty, receives
// d loss / d logits (overwritten).
DflTerm dfl_loss(std::span<const double> logits, double target, std::span<double> d_logits = {});

struct AssignOptions {
  int topk = 10;
};

struct Assignment {
  std::vector<int> gt_index;  // per anchor, -1 for negatives
  std::vector<double> score;  // alignment score of the winning gt
  int num_pos = 0;
};

// Candidates are anchors whose point lies strictly inside a gt box (the
// nearest anchor when none does). Each candidate scores
// IoU(pred, gt) * p_class^0.5; each gt keeps its top-k by score, then
// distance to the gt centre, then anchor index. An anchor claimed by
// several gts goes to the highest score, the earlier gt on ties.
// class_probs is anchor-major with num_classes entries per anchor.
// Gts with zero area or an out-of-range class are ignored.
Assignment assign_targets(const std::vector<Anchor>& anchors, const std::vector<BBox>& pred_boxes,
                          const std::vector<double>& class_probs, int64_t num_classes,
                          const std::vector<GroundTruth>& gts, const AssignOptions& opts = {});

struct LossBreakdown {
  Tensor total_tensor;  // differentiable scalar
  double total = 0;
  double cls = 0;
  double iou = 0;
  double dfl = 0;
  int num_pos = 0;
  int clamped_targets = 0;
};

// box * iou + dfl * dfl + cls * cls. cls sums focal terms over every anchor
// and class, normalised by max(num_pos, 1); iou (CIoU loss) and dfl average
// over positives and are zero without positives.
LossBreakdown total_loss(const HeadOutput& head, const std::vector<std::vector<GroundTruth>>& gts,
                         const LossWeights& weights, const AssignOptions& opts = {});

}  // namespace hieraedge
