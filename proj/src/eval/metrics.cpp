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

#include "hieraedge/eval/metrics.hpp"

#include <algorithm>
#include <numeric>

#include "hieraedge/errors.hpp"

namespace hieraedge {

namespace {

std::vector<size_t> by_score(const std::vector<Detection>& dets) {
  std::vector<size_t> order(dets.size());
  std::iota(order.begin(), order.end(), size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](size_t a, size_t b) { return dets[a].score > dets[b].score; });
  return order;
}

// Greedy match of score-sorted dets; class_agnostic ignores class ids.
std::vector<Match> greedy(const std::vector<Detection>& dets, const std::vector<GroundTruth>& gts,
                          double thr, bool class_agnostic) {
  std::vector<Match> out(dets.size());
  std::vector<bool> taken(gts.size(), false);
  for (size_t d = 0; d < dets.size(); ++d) {
    double best = -1.0;
    int best_gt = -1;
    for (size_t g = 0; g < gts.size(); ++g) {
      if (taken[g] || (!class_agnostic && gts[g].class_id != dets[d].class_id)) continue;
      const double v = iou(dets[d].bbox, gts[g].bbox);
      if (v >= thr && v > best) {
        best = v;
        best_gt = static_cast<int>(g);
      }
    }
    if (best_gt >= 0) {
      taken[best_gt] = true;
      out[d] = {true, best_gt};
    }
  }
  return out;
}

}  // namespace

std::vector<Match> match_detections(const std::vector<Detection>& dets,
                                    const std::vector<GroundTruth>& gts, double iou_threshold) {
  return greedy(dets, gts, iou_threshold, false);
}

double iou_threshold_at(int t) { return 0.5 + 0.05 * t; }

namespace {

// Cumulative recall and right-running-max precision over the ranking.
void envelope(std::vector<ScoredMatch>& ranked, int num_gt, std::vector<double>& recall,
              std::vector<double>& precision) {
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const ScoredMatch& a, const ScoredMatch& b) { return a.score > b.score; });
  recall.resize(ranked.size());
  precision.resize(ranked.size());
  int tp = 0;
  for (size_t i = 0; i < ranked.size(); ++i) {
    tp += ranked[i].tp ? 1 : 0;
    recall[i] = static_cast<double>(tp) / num_gt;
    precision[i] = static_cast<double>(tp) / static_cast<double>(i + 1);
  }
  for (size_t i = precision.size(); i-- > 1;) {
    precision[i - 1] = std::max(precision[i - 1], precision[i]);
  }
}

std::vector<double> sample_101(const std::vector<double>& recall,
                               const std::vector<double>& precision) {
  std::vector<double> out(101, 0.0);
  for (int k = 0; k <= 100; ++k) {
    const double r = k / 100.0;
    const auto it = std::lower_bound(recall.begin(), recall.end(), r);
    if (it != recall.end()) out[k] = precision[it - recall.begin()];
  }
  return out;
}

}  // namespace

std::optional<double> average_precision(std::vector<ScoredMatch> ranked, int num_gt,
                                        ApMethod method) {
  if (num_gt <= 0) return std::nullopt;
  std::vector<double> recall, precision;
  envelope(ranked, num_gt, recall, precision);
  if (method == ApMethod::kCoco101) {
    const std::vector<double> s = sample_101(recall, precision);
    return std::accumulate(s.begin(), s.end(), 0.0) / 101.0;
  }
  double ap = 0.0, prev = 0.0;
  for (size_t i = 0; i < recall.size(); ++i) {
    ap += (recall[i] - prev) * precision[i];
    prev = recall[i];
  }
  return ap;
}

EvalReport evaluate(const std::vector<std::vector<Detection>>& dets,
                    const std::vector<std::vector<GroundTruth>>& gts, const EvalOptions& opts) {
  if (dets.size() != gts.size()) {
    throw UsageError("evaluate: " + std::to_string(dets.size()) + " detection lists for " +
                     std::to_string(gts.size()) + " images");
  }
  if (gts.empty()) throw UsageError("evaluate: empty dataset");
  const int nc = opts.num_classes;
  if (nc < 1) throw UsageError("evaluate: num_classes must be >= 1");

  EvalReport r;
  r.num_classes = nc;
  r.gt_counts.assign(nc, 0);
  for (const auto& img : gts) {
    for (const GroundTruth& g : img) {
      if (g.class_id >= 0 && g.class_id < nc) ++r.gt_counts[g.class_id];
    }
  }

  // Score-sorted detections per image, matched at every IoU threshold.
  std::vector<std::vector<Detection>> sorted(dets.size());
  for (size_t i = 0; i < dets.size(); ++i) {
    for (size_t k : by_score(dets[i])) sorted[i].push_back(dets[i][k]);
  }
  r.ap.assign(nc, {});
  std::vector<std::vector<ScoredMatch>> at50(nc);
  for (int t = 0; t < kNumIouThresholds; ++t) {
    std::vector<std::vector<ScoredMatch>> per_class(nc);
    for (size_t i = 0; i < sorted.size(); ++i) {
      const std::vector<Match> m = match_detections(sorted[i], gts[i], iou_threshold_at(t));
      for (size_t d = 0; d < m.size(); ++d) {
        const int c = sorted[i][d].class_id;
        if (c >= 0 && c < nc) per_class[c].push_back({sorted[i][d].score, m[d].tp});
      }
    }
    for (int c = 0; c < nc; ++c) r.ap[c][t] = average_precision(per_class[c], r.gt_counts[c], opts.method);
    if (t == 0) at50 = std::move(per_class);
  }

  double sum50 = 0, sum75 = 0, sum_all = 0;
  int present = 0;
  for (int c = 0; c < nc; ++c) {
    if (!r.ap[c][0]) continue;
    ++present;
    sum50 += *r.ap[c][0];
    sum75 += *r.ap[c][5];
    for (int t = 0; t < kNumIouThresholds; ++t) sum_all += *r.ap[c][t];
  }
  if (present > 0) {
    r.map50 = sum50 / present;
    r.map75 = sum75 / present;
    r.map5095 = sum_all / (present * kNumIouThresholds);
  }

  r.pr_precision.assign(nc, std::vector<double>(101, 0.0));
  for (int c = 0; c < nc; ++c) {
    if (r.gt_counts[c] == 0) continue;
    std::vector<ScoredMatch> ranked = at50[c];
    std::vector<double> recall, precision;
    envelope(ranked, r.gt_counts[c], recall, precision);
    r.pr_precision[c] = sample_101(recall, precision);
  }

  for (int k = 0; k <= 100; ++k) {
    const double conf = k / 100.0;
    double f1_sum = 0.0;
    for (int c = 0; c < nc; ++c) {
      if (r.gt_counts[c] == 0) continue;
      int tp = 0, fp = 0;
      for (const ScoredMatch& m : at50[c]) {
        if (m.score < conf) continue;
        (m.tp ? tp : fp) += 1;
      }
      const double p = tp + fp > 0 ? static_cast<double>(tp) / (tp + fp) : 0.0;
      const double rc = static_cast<double>(tp) / r.gt_counts[c];
      f1_sum += p + rc > 0 ? 2 * p * rc / (p + rc) : 0.0;
    }
    r.f1_confidence.push_back(conf);
    r.f1.push_back(present > 0 ? f1_sum / present : 0.0);
  }
  const auto best = std::max_element(r.f1.begin(), r.f1.end()) - r.f1.begin();
  r.best_f1 = r.f1[best];
  r.best_f1_confidence = r.f1_confidence[best];

  r.confusion.assign(nc + 1, std::vector<int>(nc + 1, 0));
  for (size_t i = 0; i < sorted.size(); ++i) {
    std::vector<Detection> kept;
    for (const Detection& d : sorted[i]) {
      if (d.score >= r.best_f1_confidence && d.class_id >= 0 && d.class_id < nc) kept.push_back(d);
    }
    std::vector<GroundTruth> valid;
    for (const GroundTruth& g : gts[i]) {
      if (g.class_id >= 0 && g.class_id < nc) valid.push_back(g);
    }
    const std::vector<Match> m = greedy(kept, valid, 0.5, true);
    std::vector<bool> hit(valid.size(), false);
    for (size_t d = 0; d < kept.size(); ++d) {
      if (m[d].tp) {
        hit[m[d].gt_index] = true;
        ++r.confusion[valid[m[d].gt_index].class_id][kept[d].class_id];
      } else {
        ++r.confusion[nc][kept[d].class_id];
      }
    }
    for (size_t g = 0; g < valid.size(); ++g) {
      if (!hit[g]) ++r.confusion[valid[g].class_id][nc];
    }
  }
  return r;
}

nlohmann::json to_json(const EvalReport& r) {
  nlohmann::json ap = nlohmann::json::array();
  for (int c = 0; c < r.num_classes; ++c) {
    nlohmann::json row = nlohmann::json::array();
    for (const auto& v : r.ap[c]) row.push_back(v ? nlohmann::json(*v) : nlohmann::json(nullptr));
    ap.push_back(row);
  }
  std::vector<double> thresholds;
  for (int t = 0; t < kNumIouThresholds; ++t) thresholds.push_back(iou_threshold_at(t));
  return {{"map50", r.map50},
          {"map75", r.map75},
          {"map5095", r.map5095},
          {"num_classes", r.num_classes},
          {"gt_counts", r.gt_counts},
          {"iou_thresholds", thresholds},
          {"ap", ap},
          {"pr_curves", {{"recall_step", 0.01}, {"precision", r.pr_precision}}},
          {"f1_curve",
           {{"confidence", r.f1_confidence},
            {"f1", r.f1},
            {"best_f1", r.best_f1},
            {"best_confidence", r.best_f1_confidence}}},
          {"confusion", r.confusion}};
}

}  // namespace hieraedge
