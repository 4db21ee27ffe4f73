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

#include "hieraedge/detect/loss.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>

#include "hieraedge/errors.hpp"

namespace hieraedge {

namespace {

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

double sigmoid_of(double z) {
  return z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
}

void softmax(std::span<const double> logits, std::vector<double>& p) {
  p.resize(logits.size());
  const double peak = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (size_t i = 0; i < logits.size(); ++i) z += (p[i] = std::exp(logits[i] - peak));
  for (double& v : p) v /= z;
}

}  // namespace

double focal_loss(double p, int y, double alpha, double gamma) {
  p = std::clamp(p, 1e-9, 1.0 - 1e-9);
  const double pt = y == 1 ? p : 1.0 - p;
  const double at = y == 1 ? alpha : 1.0 - alpha;
  return -at * std::pow(1.0 - pt, gamma) * std::log(pt);
}

FocalTerm focal_from_logit(double z, int y, double alpha, double gamma) {
  const double p = sigmoid_of(z);
  if (y == 1) {
    const double log_p = -softplus(-z);
    const double m = std::pow(1.0 - p, gamma);
    return {-alpha * m * log_p, alpha * m * (gamma * p * log_p - (1.0 - p))};
  }
  const double log_q = -softplus(z);
  const double m = std::pow(p, gamma);
  return {-(1.0 - alpha) * m * log_q, (1.0 - alpha) * m * (p - gamma * (1.0 - p) * log_q)};
}

DflTerm dfl_loss(std::span<const double> logits, double target, std::span<double> d_logits) {
  const size_t bins = logits.size();
  if (bins < 2) throw UsageError("dfl_loss: need at least 2 bins");
  const double hi = static_cast<double>(bins) - 1.01;
  DflTerm term;
  if (!std::isfinite(target)) throw UsageError("dfl_loss: non-finite target");
  if (target < 0.0 || target > hi) {
    term.clamped = true;
    target = std::clamp(target, 0.0, hi);
  }
  const auto left = static_cast<size_t>(std::floor(target));
  const size_t right = left + 1;
  const double wl = static_cast<double>(right) - target;
  const double wr = target - static_cast<double>(left);
  const double peak = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (double v : logits) z += std::exp(v - peak);
  const double log_z = peak + std::log(z);
  term.loss = -wl * (logits[left] - log_z) - wr * (logits[right] - log_z);
  if (!d_logits.empty()) {
    for (size_t i = 0; i < bins; ++i) d_logits[i] = std::exp(logits[i] - log_z);
    d_logits[left] -= wl;
    d_logits[right] -= wr;
  }
  return term;
}

Assignment assign_targets(const std::vector<Anchor>& anchors, const std::vector<BBox>& pred_boxes,
                          const std::vector<double>& class_probs, int64_t num_classes,
                          const std::vector<GroundTruth>& gts, const AssignOptions& opts) {
  Assignment out;
  out.gt_index.assign(anchors.size(), -1);
  out.score.assign(anchors.size(), 0.0);
  struct Candidate {
    size_t anchor;
    double score, dist2;
  };
  for (size_t g = 0; g < gts.size(); ++g) {
    const GroundTruth& gt = gts[g];
    if (!(gt.bbox.area() > 0) || gt.class_id < 0 || gt.class_id >= num_classes) continue;
    const double cx = gt.bbox.cx(), cy = gt.bbox.cy();
    auto dist2 = [&](size_t a) {
      return (anchors[a].x - cx) * (anchors[a].x - cx) + (anchors[a].y - cy) * (anchors[a].y - cy);
    };
    std::vector<size_t> inside;
    for (size_t a = 0; a < anchors.size(); ++a) {
      if (gt.bbox.contains(anchors[a].x, anchors[a].y)) inside.push_back(a);
    }
    if (inside.empty() && !anchors.empty()) {
      size_t nearest = 0;
      for (size_t a = 1; a < anchors.size(); ++a) {
        if (dist2(a) < dist2(nearest)) nearest = a;
      }
      inside.push_back(nearest);
    }
    std::vector<Candidate> cands;
    for (size_t a : inside) {
      const double p = class_probs[a * num_classes + gt.class_id];
      cands.push_back({a, iou(pred_boxes[a], gt.bbox) * std::sqrt(p), dist2(a)});
    }
    std::sort(cands.begin(), cands.end(), [](const Candidate& l, const Candidate& r) {
      if (l.score != r.score) return l.score > r.score;
      if (l.dist2 != r.dist2) return l.dist2 < r.dist2;
      return l.anchor < r.anchor;
    });
    const size_t keep = std::min(cands.size(), static_cast<size_t>(std::max(opts.topk, 1)));
    for (size_t i = 0; i < keep; ++i) {
      const Candidate& c = cands[i];
      if (out.gt_index[c.anchor] < 0 || c.score > out.score[c.anchor]) {
        out.gt_index[c.anchor] = static_cast<int>(g);
        out.score[c.anchor] = c.score;
      }
    }
  }
  out.num_pos = static_cast<int>(
      std::count_if(out.gt_index.begin(), out.gt_index.end(), [](int g) { return g >= 0; }));
  return out;
}

LossBreakdown total_loss(const HeadOutput& head, const std::vector<std::vector<GroundTruth>>& gts,
                         const LossWeights& weights, const AssignOptions& opts) {
  const int64_t batch = head.batch();
  if (static_cast<int64_t>(gts.size()) != batch) {
    throw UsageError("total_loss: " + std::to_string(gts.size()) + " gt lists for a batch of " +
                     std::to_string(batch));
  }
  const int64_t bins = head.bins, nc = head.num_classes;
  // Per head tensor (reg0, cls0, reg1, ...): raw gradients of the cls sum,
  // the CIoU sum and the DFL sum, combined with the weights at the end.
  std::vector<std::vector<double>> d_cls(2 * kNumLevels), d_iou(2 * kNumLevels),
      d_dfl(2 * kNumLevels);
  const std::vector<Tensor> inputs = head.tensors();
  for (size_t t = 0; t < inputs.size(); ++t) {
    (t % 2 ? d_cls : d_iou)[t].assign(inputs[t].numel(), 0.0);
    if (t % 2 == 0) d_dfl[t].assign(inputs[t].numel(), 0.0);
  }

  double cls_sum = 0.0, iou_sum = 0.0, dfl_sum = 0.0;
  int num_pos = 0, clamped = 0;
  std::vector<double> probs, soft, d_side(bins);
  for (int64_t n = 0; n < batch; ++n) {
    const ImagePredictions p = gather_predictions(head, n);
    probs.resize(p.cls_logits.size());
    std::transform(p.cls_logits.begin(), p.cls_logits.end(), probs.begin(), sigmoid_of);
    const Assignment asg = assign_targets(p.anchors, p.boxes, probs, nc, gts[n], opts);
    num_pos += asg.num_pos;

    for (size_t a = 0; a < p.anchors.size(); ++a) {
      const Anchor& anc = p.anchors[a];
      const int l = anc.level;
      const int64_t h = head.reg[l].dim(2), w = head.reg[l].dim(3), plane = h * w;
      const int64_t cell = anc.row * w + anc.col;
      const int g = asg.gt_index[a];
      const int target_cls = g >= 0 ? gts[n][g].class_id : -1;
      auto& dc = d_cls[2 * l + 1];
      for (int64_t k = 0; k < nc; ++k) {
        const FocalTerm f = focal_from_logit(p.cls_logits[a * nc + k], k == target_cls ? 1 : 0,
                                             weights.focal_alpha, weights.focal_gamma);
        cls_sum += f.loss;
        dc[(n * nc + k) * plane + cell] += f.d_logit;
      }
      if (g < 0) continue;

      const BBox& gt = gts[n][g].bbox;
      const CiouResult ci = ciou_loss(p.boxes[a], gt);
      iou_sum += ci.loss;
      const double s = anc.stride;
      const std::array<double, 4> d_dist = {-s * ci.d_pred[0], -s * ci.d_pred[1], s * ci.d_pred[2],
                                            s * ci.d_pred[3]};
      const std::array<double, 4> targets = {(anc.x - gt.x1) / s, (anc.y - gt.y1) / s,
                                             (gt.x2 - anc.x) / s, (gt.y2 - anc.y) / s};
      auto& di = d_iou[2 * l];
      auto& dd = d_dfl[2 * l];
      for (int side = 0; side < 4; ++side) {
        const std::span<const double> logits(&p.reg_logits[(a * 4 + side) * bins], bins);
        softmax(logits, soft);
        const double dist = p.distances[a * 4 + side];
        const DflTerm term = dfl_loss(logits, targets[side], d_side);
        dfl_sum += 0.25 * term.loss;
        clamped += term.clamped ? 1 : 0;
        for (int64_t r = 0; r < bins; ++r) {
          const int64_t idx = (n * 4 * bins + side * bins + r) * plane + cell;
          di[idx] += d_dist[side] * soft[r] * (static_cast<double>(r) - dist);
          dd[idx] += 0.25 * d_side[r];
        }
      }
    }
  }

  LossBreakdown out;
  out.num_pos = num_pos;
  out.clamped_targets = clamped;
  const double cls_norm = 1.0 / std::max(num_pos, 1);
  const double pos_norm = num_pos > 0 ? 1.0 / num_pos : 0.0;
  out.cls = cls_sum * cls_norm;
  out.iou = iou_sum * pos_norm;
  out.dfl = dfl_sum * pos_norm;
  out.total = weights.box * out.iou + weights.dfl * out.dfl + weights.cls * out.cls;

  auto grads = std::make_shared<std::vector<std::vector<double>>>(inputs.size());
  for (size_t t = 0; t < inputs.size(); ++t) {
    auto& g = (*grads)[t];
    if (t % 2) {
      g = std::move(d_cls[t]);
      for (double& v : g) v *= weights.cls * cls_norm;
    } else {
      g.resize(inputs[t].numel());
      for (size_t i = 0; i < g.size(); ++i) {
        g[i] = (weights.box * d_iou[t][i] + weights.dfl * d_dfl[t][i]) * pos_norm;
      }
    }
  }
  out.total_tensor = autodiff::make_result(
      {1}, {out.total}, "total_loss", inputs, [inputs, grads](const TensorImpl& o) {
        for (size_t t = 0; t < inputs.size(); ++t) {
          auto g = autodiff::grad_sink(inputs[t]);
          const auto& src = (*grads)[t];
          for (size_t i = 0; i < g.size(); ++i) g[i] += o.grad[0] * src[i];
        }
      });
  return out;
}

}  // namespace hieraedge
