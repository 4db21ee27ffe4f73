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

#include "hieraedge/detect/decode.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "hieraedge/errors.hpp"
#include "json.hpp"

namespace hieraedge {

std::vector<Anchor> make_anchors(const HeadOutput& head) {
  std::vector<Anchor> anchors;
  for (int l = 0; l < kNumLevels; ++l) {
    const double s = static_cast<double>(kLevelStrides[l]);
    const int64_t h = head.cls[l].dim(2), w = head.cls[l].dim(3);
    for (int64_t i = 0; i < h; ++i) {
      for (int64_t j = 0; j < w; ++j) {
        anchors.push_back({(static_cast<double>(j) + 0.5) * s, (static_cast<double>(i) + 0.5) * s,
                           s, l, i, j});
      }
    }
  }
  return anchors;
}

double dfl_decode(std::span<const double> logits) {
  if (logits.size() < 2) throw UsageError("dfl_decode: need at least 2 bins");
  const double peak = *std::max_element(logits.begin(), logits.end());
  double z = 0.0, moment = 0.0;
  for (size_t i = 0; i < logits.size(); ++i) {
    const double e = std::exp(logits[i] - peak);
    z += e;
    moment += static_cast<double>(i) * e;
  }
  return moment / z;
}

BBox distances_to_box(const Anchor& a, const std::array<double, 4>& d) {
  return {a.x - d[0] * a.stride, a.y - d[1] * a.stride, a.x + d[2] * a.stride,
          a.y + d[3] * a.stride};
}

ImagePredictions gather_predictions(const HeadOutput& head, int64_t n) {
  ImagePredictions p;
  p.anchors = make_anchors(head);
  const int64_t bins = head.bins, nc = head.num_classes;
  const size_t count = p.anchors.size();
  p.reg_logits.resize(count * 4 * bins);
  p.distances.resize(count * 4);
  p.boxes.resize(count);
  p.cls_logits.resize(count * nc);
  size_t a = 0;
  for (int l = 0; l < kNumLevels; ++l) {
    const Tensor& reg = head.reg[l];
    const Tensor& cls = head.cls[l];
    const int64_t h = reg.dim(2), w = reg.dim(3), plane = h * w;
    const auto rv = reg.data();
    const auto cv = cls.data();
    for (int64_t cell = 0; cell < plane; ++cell, ++a) {
      double* logits = &p.reg_logits[a * 4 * bins];
      for (int64_t ch = 0; ch < 4 * bins; ++ch) {
        logits[ch] = rv[(n * 4 * bins + ch) * plane + cell];
      }
      std::array<double, 4> d{};
      for (int side = 0; side < 4; ++side) {
        d[side] = dfl_decode({logits + side * bins, static_cast<size_t>(bins)});
        p.distances[a * 4 + side] = d[side];
      }
      p.boxes[a] = distances_to_box(p.anchors[a], d);
      for (int64_t k = 0; k < nc; ++k) p.cls_logits[a * nc + k] = cv[(n * nc + k) * plane + cell];
    }
  }
  return p;
}

namespace {

double sigmoid_of(double z) {
  return z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
}

BBox clamp_box(BBox b, double w, double h) {
  if (w <= 0 || h <= 0) return b;
  b.x1 = std::clamp(b.x1, 0.0, w);
  b.x2 = std::clamp(b.x2, 0.0, w);
  b.y1 = std::clamp(b.y1, 0.0, h);
  b.y2 = std::clamp(b.y2, 0.0, h);
  return b;
}

// Descending score, then class id, then input position.
std::vector<size_t> ranked(const std::vector<Detection>& dets) {
  std::vector<size_t> order(dets.size());
  std::iota(order.begin(), order.end(), size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    if (dets[a].score != dets[b].score) return dets[a].score > dets[b].score;
    return dets[a].class_id < dets[b].class_id;
  });
  return order;
}

}  // namespace

std::vector<std::vector<Detection>> decode_boxes(const HeadOutput& head, const DecodeOptions& opts) {
  std::vector<std::vector<Detection>> out(head.batch());
  const int64_t nc = head.num_classes;
  for (int64_t n = 0; n < head.batch(); ++n) {
    const ImagePredictions p = gather_predictions(head, n);
    for (size_t a = 0; a < p.anchors.size(); ++a) {
      for (int64_t k = 0; k < nc; ++k) {
        const double score = sigmoid_of(p.cls_logits[a * nc + k]);
        if (score > opts.score_threshold) {
          out[n].push_back({clamp_box(p.boxes[a], opts.image_w, opts.image_h),
                            static_cast<int>(k), score});
        }
      }
    }
  }
  return out;
}

std::vector<std::vector<Detection>> postprocess(const HeadOutput& head, const DecodeOptions& opts) {
  auto per_image = decode_boxes(head, opts);
  for (auto& dets : per_image) {
    dets = nms(dets, opts.iou_threshold);
    if (opts.max_detections >= 0 && dets.size() > static_cast<size_t>(opts.max_detections)) {
      dets.resize(opts.max_detections);
    }
  }
  return per_image;
}

std::vector<Detection> nms(const std::vector<Detection>& dets, double iou_threshold) {
  const std::vector<size_t> order = ranked(dets);
  std::vector<std::vector<size_t>> kept_by_class;
  std::vector<Detection> out;
  for (size_t idx : order) {
    const Detection& d = dets[idx];
    if (d.class_id < 0) throw UsageError("nms: negative class id");
    if (static_cast<size_t>(d.class_id) >= kept_by_class.size()) {
      kept_by_class.resize(d.class_id + 1);
    }
    auto& kept = kept_by_class[d.class_id];
    const bool suppressed = std::any_of(kept.begin(), kept.end(), [&](size_t k) {
      return iou(out[k].bbox, d.bbox) > iou_threshold;
    });
    if (!suppressed) {
      kept.push_back(out.size());
      out.push_back(d);
    }
  }
  return out;
}

namespace reference {

std::vector<Detection> nms(const std::vector<Detection>& dets, double iou_threshold) {
  std::vector<bool> alive(dets.size(), true);
  std::vector<Detection> out;
  while (true) {
    size_t best = dets.size();
    for (size_t i = 0; i < dets.size(); ++i) {
      if (!alive[i]) continue;
      if (best == dets.size() || dets[i].score > dets[best].score ||
          (dets[i].score == dets[best].score && dets[i].class_id < dets[best].class_id)) {
        best = i;
      }
    }
    if (best == dets.size()) break;
    out.push_back(dets[best]);
    alive[best] = false;
    for (size_t i = 0; i < dets.size(); ++i) {
      if (alive[i] && dets[i].class_id == dets[best].class_id &&
          iou(dets[i].bbox, dets[best].bbox) > iou_threshold) {
        alive[i] = false;
      }
    }
  }
  return out;
}

}  // namespace reference

std::string detections_to_jsonl(const std::string& image_id, const std::vector<Detection>& dets) {
  std::string out;
  for (const Detection& d : dets) {
    const nlohmann::json j = {{"image_id", image_id},
                              {"class_id", d.class_id},
                              {"score", d.score},
                              {"bbox", {d.bbox.x1, d.bbox.y1, d.bbox.x2, d.bbox.y2}}};
    out += j.dump();
    out += '\n';
  }
  return out;
}

}  // namespace hieraedge
