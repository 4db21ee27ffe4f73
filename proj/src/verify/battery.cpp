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
#include <cmath>
#include <numeric>
#include <sstream>

#include "hieraedge/detect/loss.hpp"
#include "hieraedge/errors.hpp"
#include "hieraedge/eval/metrics.hpp"
#include "hieraedge/nn/blocks.hpp"
#include "hieraedge/nn/omni_kernel.hpp"
#include "hieraedge/ops.hpp"
#include "hieraedge/verify/checks.hpp"

namespace hieraedge::verify {

namespace {

Tensor random_tensor(const Shape& shape, Rng& rng) {
  Tensor t = Tensor::zeros(shape);
  for (double& v : t.data()) v = rng.normal();
  return t;
}

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) return INFINITY;
  double m = 0.0;
  for (size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

CheckResult bounded(std::string group, std::string subject, double value, double tolerance,
                    std::string detail = {}) {
  CheckResult r;
  r.name = group + "/" + subject;
  r.group = std::move(group);
  r.value = value;
  r.tolerance = tolerance;
  r.passed = value < tolerance;
  r.detail = std::move(detail);
  return r;
}

// Exact checks: value counts mismatches and must be zero.
CheckResult exact(std::string group, std::string subject, double mismatches,
                  std::string detail = {}) {
  CheckResult r = bounded(std::move(group), std::move(subject), mismatches, 0.0, std::move(detail));
  r.passed = mismatches == 0.0;
  return r;
}

// ---- structural identities ------------------------------------------------

CheckResult spd_bijection(Rng& rng) {
  NoGradGuard no_grad;
  double mismatches = 0;
  for (const Shape& shape : {Shape{1, 1, 2, 2}, Shape{2, 3, 4, 6}, Shape{1, 5, 8, 2}}) {
    const int64_t n = shape[0], c = shape[1], h = shape[2], w = shape[3];
    // Distinct values, so any collision or loss shows up in the multiset.
    Tensor x = Tensor::zeros(shape);
    std::iota(x.data().begin(), x.data().end(), 0.0);
    for (int64_t i = x.numel() - 1; i > 0; --i) {
      std::swap(x.data()[i], x.data()[rng.uniform_int(i + 1)]);
    }
    const Tensor y = space_to_depth(x);
    if (y.shape() != Shape{n, 4 * c, h / 2, w / 2}) {
      ++mismatches;
      continue;
    }
    for (int64_t b = 0; b < n; ++b) {
      for (int64_t q = 0; q < 4; ++q) {
        const int64_t dr = q % 2, dc = q / 2;
        for (int64_t ch = 0; ch < c; ++ch) {
          for (int64_t i = 0; i < h / 2; ++i) {
            for (int64_t j = 0; j < w / 2; ++j) {
              if (y.at(b, q * c + ch, i, j) != x.at(b, ch, 2 * i + dr, 2 * j + dc)) ++mismatches;
            }
          }
        }
      }
    }
    std::vector<double> xs(x.values()), ys(y.values());
    std::sort(xs.begin(), xs.end());
    std::sort(ys.begin(), ys.end());
    if (xs != ys) ++mismatches;
    if (depth_to_space(y).values() != x.values()) ++mismatches;
  }
  return exact("spd", "bijection", mismatches, "index map, value multiset and inverse");
}

CheckResult sppf_pool_equivalence(Rng& rng) {
  NoGradGuard no_grad;
  double mismatches = 0;
  for (const Shape& shape : {Shape{1, 2, 3, 3}, Shape{2, 3, 9, 7}, Shape{1, 4, 16, 16}}) {
    const Tensor x = random_tensor(shape, rng);
    const Tensor once = maxpool2d(x, 5, 1, 2);
    const Tensor twice = maxpool2d(once, 5, 1, 2);
    const Tensor thrice = maxpool2d(twice, 5, 1, 2);
    if (twice.values() != maxpool2d(x, 9, 1, 4).values()) ++mismatches;
    if (thrice.values() != maxpool2d(x, 13, 1, 6).values()) ++mismatches;
  }
  return exact("sppf", "serial_pool_equivalence", mismatches, "pool5 twice == pool9, thrice == pool13");
}

CheckResult fft_round_trip(Rng& rng) {
  NoGradGuard no_grad;
  double worst = 0;
  for (const Shape& shape : {Shape{1, 1, 1, 1}, Shape{1, 2, 4, 4}, Shape{2, 3, 5, 7},
                             Shape{1, 2, 8, 6}, Shape{1, 1, 6, 1}, Shape{1, 2, 16, 16}}) {
    const Tensor x = random_tensor(shape, rng);
    worst = std::max(worst, max_abs_diff(irfft2(rfft2(x)).data(), x.data()));
  }
  return bounded("fft", "round_trip", worst, 1e-10, "max |irfft2(rfft2(x)) - x|");
}

CheckResult fca_channel_scaling(Rng& rng) {
  NoGradGuard no_grad;
  double worst = 0;
  for (const Shape& shape : {Shape{2, 4, 6, 6}, Shape{1, 6, 5, 7}, Shape{2, 3, 8, 3}}) {
    nn::Fca fca(shape[1], rng);
    for (auto& [name, p] : fca.named_parameters()) {
      for (double& v : p.data()) v += 0.5 * rng.normal();
    }
    const Tensor x = random_tensor(shape, rng);
    const Tensor scaled = mul(x, fca.channel_weights(x));
    worst = std::max(worst, max_abs_diff(fca.forward(x).data(), scaled.data()));
  }
  return bounded("fft", "fca_channel_scaling", worst, 1e-8, "max |fca(x) - w_c x|");
}

CheckResult fgm_unit_gate_identity(Rng& rng) {
  NoGradGuard no_grad;
  double worst = 0;
  for (const Shape& shape : {Shape{2, 4, 6, 6}, Shape{1, 3, 5, 7}}) {
    nn::Fgm fgm(shape[1], shape[2], shape[3]);
    // sigmoid(40) rounds to 1 in double precision.
    std::fill(fgm.gate_logits.data().begin(), fgm.gate_logits.data().end(), 40.0);
    const Tensor x = random_tensor(shape, rng);
    worst = std::max(worst, max_abs_diff(fgm.forward(x).data(), x.data()));
  }
  return bounded("fft", "fgm_unit_gate_identity", worst, 1e-8, "max |fgm_1(x) - x|");
}

// Plain-loop multi-head attention over `area` equal segments of the
// flattened sequence, using the module's own projections.
std::vector<double> attention_oracle(const nn::AreaAttention& m, const Tensor& x) {
  const int64_t n = x.dim(0), c = x.dim(1), len = x.dim(2) * x.dim(3);
  const int64_t heads = m.params.num_heads, dh = c / heads, area = m.params.area;
  const int64_t seg = len / area;
  auto project = [&](const nn::Conv2d& conv, const std::vector<double>& in, int64_t in_c) {
    const int64_t out_c = conv.out_channels;
    std::vector<double> out(n * out_c * len);
    const auto wt = conv.weight.data();
    const auto bias = conv.bias.data();
    for (int64_t b = 0; b < n; ++b) {
      for (int64_t o = 0; o < out_c; ++o) {
        for (int64_t p = 0; p < len; ++p) {
          double s = bias[o];
          for (int64_t i = 0; i < in_c; ++i) s += wt[o * in_c + i] * in[(b * in_c + i) * len + p];
          out[(b * out_c + o) * len + p] = s;
        }
      }
    }
    return out;
  };
  const std::vector<double> qkv = project(*m.qkv, x.values(), c);
  std::vector<double> mixed(n * c * len, 0.0), row(seg);
  const double inv = 1.0 / std::sqrt(static_cast<double>(dh));
  for (int64_t b = 0; b < n; ++b) {
    auto at = [&](int64_t part, int64_t ch, int64_t p) {
      return qkv[(b * 3 * c + part * c + ch) * len + p];
    };
    for (int64_t hd = 0; hd < heads; ++hd) {
      for (int64_t a = 0; a < area; ++a) {
        for (int64_t i = 0; i < seg; ++i) {
          const int64_t pi = a * seg + i;
          double peak = -INFINITY;
          for (int64_t j = 0; j < seg; ++j) {
            double s = 0.0;
            for (int64_t d = 0; d < dh; ++d) s += at(0, hd * dh + d, pi) * at(1, hd * dh + d, a * seg + j);
            row[j] = s * inv;
            peak = std::max(peak, row[j]);
          }
          double z = 0.0;
          for (double& v : row) z += (v = std::exp(v - peak));
          for (int64_t d = 0; d < dh; ++d) {
            double s = 0.0;
            for (int64_t j = 0; j < seg; ++j) s += row[j] * at(2, hd * dh + d, a * seg + j);
            mixed[(b * c + hd * dh + d) * len + pi] = s / z;
          }
        }
      }
    }
  }
  return project(*m.proj, mixed, c);
}

CheckResult attention_oracle_match(Rng& rng, int64_t area) {
  NoGradGuard no_grad;
  double worst = 0;
  for (int64_t heads : {1, 2, 4}) {
    nn::AreaAttention m(nn::AreaAttnParams{8, heads, area}, rng);
    const Tensor x = random_tensor({2, 8, 4, 6}, rng);
    worst = std::max(worst, max_abs_diff(m.forward(x).data(), attention_oracle(m, x)));
  }
  return bounded("attention", area == 1 ? "dense_oracle" : "area" + std::to_string(area) + "_oracle",
                 worst, 1e-10, "heads 1, 2, 4");
}

// ---- loss fixtures --------------------------------------------------------

std::vector<CheckResult> loss_fixtures(Rng& rng) {
  std::vector<CheckResult> out;
  out.push_back(bounded("loss", "focal_fixture", std::abs(focal_loss(0.9, 1, 0.25, 2.0) - 2.634e-4),
                        1e-7, "focal_loss(0.9, 1, 0.25, 2) vs 2.634e-4"));
  const std::vector<double> uniform(16, 0.0);
  out.push_back(exact("loss", "dfl_uniform_fixture", dfl_decode(uniform) == 7.5 ? 0.0 : 1.0,
                      "dfl_decode(uniform, R=16) == 7.5"));
  out.push_back(bounded("loss", "iou_fixture",
                        std::abs(iou(BBox{0, 0, 2, 2}, BBox{1, 1, 3, 3}) - 1.0 / 7.0), 1e-12,
                        "IoU((0,0,2,2),(1,1,3,3)) vs 1/7"));

  NoGradGuard no_grad;
  HeadOutput head;
  head.bins = 8;
  head.num_classes = 4;
  for (int l = 0; l < kNumLevels; ++l) {
    const int64_t side = 64 / kLevelStrides[l];
    head.reg[l] = random_tensor({2, 4 * head.bins, side, side}, rng);
    head.cls[l] = random_tensor({2, head.num_classes, side, side}, rng);
  }
  const LossWeights w;
  const LossBreakdown b = total_loss(head, {{}, {}}, w);
  const double gap = std::abs(b.total - w.cls * b.cls) + std::abs(b.iou) + std::abs(b.dfl) +
                     std::abs(b.total_tensor.item() - b.total) + (b.num_pos != 0 ? 1.0 : 0.0);
  out.push_back(bounded("loss", "zero_gt_reduction", gap, 1e-12, "total == cls weight * cls"));
  return out;
}

// ---- oracles --------------------------------------------------------------

bool same_detections(const std::vector<Detection>& a, const std::vector<Detection>& b) {
  if (a.size() != b.size()) return false;
  for (size_t i = 0; i < a.size(); ++i) {
    if (a[i].class_id != b[i].class_id || a[i].score != b[i].score ||
        a[i].bbox.x1 != b[i].bbox.x1 || a[i].bbox.y1 != b[i].bbox.y1 ||
        a[i].bbox.x2 != b[i].bbox.x2 || a[i].bbox.y2 != b[i].bbox.y2) {
      return false;
    }
  }
  return true;
}

CheckResult nms_oracle(Rng& rng, int instances, int boxes) {
  int mismatches = 0;
  for (int k = 0; k < instances; ++k) {
    std::vector<Detection> dets(boxes);
    // Clustered boxes so suppression actually happens; coarse scores so
    // ties occur.
    const int clusters = 1 + static_cast<int>(rng.uniform_int(12));
    std::vector<std::array<double, 2>> centers(clusters);
    for (auto& c : centers) c = {rng.uniform(20, 300), rng.uniform(20, 300)};
    for (Detection& d : dets) {
      const auto& c = centers[rng.uniform_int(clusters)];
      const double cx = c[0] + 12 * rng.normal(), cy = c[1] + 12 * rng.normal();
      const double w = rng.uniform(4, 60), h = rng.uniform(4, 60);
      d.bbox = {cx - w / 2, cy - h / 2, cx + w / 2, cy + h / 2};
      d.class_id = static_cast<int>(rng.uniform_int(4));
      d.score = std::round(rng.uniform() * 50.0) / 50.0;
    }
    const double thr = rng.uniform(0.3, 0.8);
    if (!same_detections(nms(dets, thr), reference::nms(dets, thr))) ++mismatches;
  }
  return exact("nms", "reference_oracle", mismatches,
               std::to_string(instances) + " instances x " + std::to_string(boxes) + " boxes");
}

// Assignment by explicit enumeration: anchor a belongs to gt g's top-k iff
// fewer than k candidates of g beat it; the owner is the best-scoring such
// gt, lowest index on ties.
std::vector<int> brute_force_assign(const std::vector<Anchor>& anchors,
                                    const std::vector<BBox>& preds,
                                    const std::vector<double>& probs, int64_t nc,
                                    const std::vector<GroundTruth>& gts, int topk) {
  const size_t na = anchors.size();
  std::vector<int> owner(na, -1);
  std::vector<double> best(na, -1.0);
  for (size_t g = 0; g < gts.size(); ++g) {
    const BBox& box = gts[g].bbox;
    const double cx = box.cx(), cy = box.cy();
    auto d2 = [&](size_t a) {
      const double dx = anchors[a].x - cx, dy = anchors[a].y - cy;
      return dx * dx + dy * dy;
    };
    std::vector<bool> cand(na, false);
    bool any = false;
    for (size_t a = 0; a < na; ++a) any |= (cand[a] = box.contains(anchors[a].x, anchors[a].y));
    if (!any) {
      size_t nearest = 0;
      for (size_t a = 1; a < na; ++a) nearest = d2(a) < d2(nearest) ? a : nearest;
      cand[nearest] = true;
    }
    std::vector<double> score(na, 0.0);
    for (size_t a = 0; a < na; ++a) {
      score[a] = iou(preds[a], box) * std::sqrt(probs[a * nc + gts[g].class_id]);
    }
    for (size_t a = 0; a < na; ++a) {
      if (!cand[a]) continue;
      int beaten_by = 0;
      for (size_t b = 0; b < na; ++b) {
        if (!cand[b] || b == a) continue;
        const bool better = score[b] > score[a] ||
                            (score[b] == score[a] && (d2(b) < d2(a) || (d2(b) == d2(a) && b < a)));
        beaten_by += better ? 1 : 0;
      }
      if (beaten_by >= topk) continue;
      if (score[a] > best[a]) {
        best[a] = score[a];
        owner[a] = static_cast<int>(g);
      }
    }
  }
  return owner;
}

CheckResult assignment_oracle(Rng& rng, int instances) {
  const int64_t nc = 3;
  std::vector<Anchor> anchors;
  for (int64_t i = 0; i < 4; ++i) {
    for (int64_t j = 0; j < 4; ++j) anchors.push_back({(j + 0.5) * 8, (i + 0.5) * 8, 8, 0, i, j});
  }
  int mismatches = 0;
  for (int k = 0; k < instances; ++k) {
    std::vector<BBox> preds;
    std::vector<double> probs;
    for (const Anchor& a : anchors) {
      const double l = rng.uniform(0, 12), t = rng.uniform(0, 12);
      const double r = rng.uniform(0, 12), b = rng.uniform(0, 12);
      preds.push_back({a.x - l, a.y - t, a.x + r, a.y + b});
      for (int64_t c = 0; c < nc; ++c) probs.push_back(rng.uniform());
    }
    std::vector<GroundTruth> gts;
    const int count = 1 + static_cast<int>(rng.uniform_int(4));
    for (int g = 0; g < count; ++g) {
      // Some boxes are small enough to contain no anchor centre.
      const double w = rng.bernoulli(0.25) ? rng.uniform(1, 3) : rng.uniform(6, 24);
      const double h = rng.bernoulli(0.25) ? rng.uniform(1, 3) : rng.uniform(6, 24);
      const double x1 = rng.uniform(0, 32 - w), y1 = rng.uniform(0, 32 - h);
      gts.push_back({{x1, y1, x1 + w, y1 + h}, static_cast<int>(rng.uniform_int(nc))});
    }
    const int topk = std::array<int, 4>{1, 2, 3, 10}[rng.uniform_int(4)];
    const Assignment got = assign_targets(anchors, preds, probs, nc, gts, AssignOptions{topk});
    const std::vector<int> want = brute_force_assign(anchors, preds, probs, nc, gts, topk);
    const int want_pos = static_cast<int>(std::count_if(want.begin(), want.end(), [](int g) { return g >= 0; }));
    if (got.gt_index != want || got.num_pos != want_pos) ++mismatches;
  }
  return exact("assign", "brute_force_4x4", mismatches, std::to_string(instances) + " toys");
}

struct ApFixture {
  std::string name;
  std::vector<bool> ranked_tp;  // detections in descending score order
  int num_gt;
  ApMethod method;
  std::optional<double> expected;
};

std::vector<CheckResult> ap_fixtures() {
  // Hand-computed from the precision envelope and the 101 recall samples.
  const std::vector<ApFixture> fixtures = {
      {"tp_fp_tp_2gt", {true, false, true}, 2, ApMethod::kCoco101, 0.8349834983498350},
      {"tp_fp_tp_2gt_allpoint", {true, false, true}, 2, ApMethod::kAllPoint, 0.8333333333333333},
      {"perfect", {true, true}, 2, ApMethod::kCoco101, 1.0},
      {"fp_then_tp", {false, true}, 1, ApMethod::kCoco101, 0.5},
      {"half_recall", {true}, 2, ApMethod::kCoco101, 0.5049504950495050},
      {"no_detections", {}, 1, ApMethod::kCoco101, 0.0},
      {"no_gt", {true}, 0, ApMethod::kCoco101, std::nullopt},
      {"mixed_5_4gt", {true, false, false, true, true}, 4, ApMethod::kCoco101, 0.5544554455445545},
      {"mixed_5_4gt_allpoint", {true, false, false, true, true}, 4, ApMethod::kAllPoint, 0.55},
      {"late_tp", {false, false, true}, 1, ApMethod::kAllPoint, 1.0 / 3.0},
  };
  std::vector<CheckResult> out;
  for (const ApFixture& f : fixtures) {
    std::vector<ScoredMatch> ranked;
    for (size_t i = 0; i < f.ranked_tp.size(); ++i) {
      ranked.push_back({1.0 - 0.1 * static_cast<double>(i), f.ranked_tp[i]});
    }
    const std::optional<double> got = average_precision(ranked, f.num_gt, f.method);
    double err;
    if (!f.expected || !got) {
      err = got.has_value() == f.expected.has_value() ? 0.0 : 1.0;
    } else {
      err = std::abs(*got - *f.expected);
    }
    std::ostringstream os;
    os << "got " << (got ? std::to_string(*got) : "none");
    out.push_back(bounded("ap", f.name, err, 1e-9, os.str()));
  }
  return out;
}

// ---- selection --------------------------------------------------------------

bool selected(const std::vector<std::string>& only, const std::string& group,
              const std::string& name) {
  if (only.empty()) return true;
  const std::string subject = name.substr(name.find('/') + 1);
  return std::any_of(only.begin(), only.end(), [&](const std::string& s) {
    return s == group || s == name || s == subject;
  });
}

}  // namespace

const std::vector<std::string>& check_groups() {
  static const std::vector<std::string> groups = {"grad",  "spd", "sppf",   "fft", "attention",
                                                  "loss", "nms", "assign", "ap"};
  return groups;
}

std::vector<CheckResult> run_battery(const BatteryOptions& opts,
                                     const std::function<void(const CheckResult&)>& on_result) {
  // Every selector must name a group, a check or a gradient block.
  static const std::vector<std::string> subjects = {
      "spd/bijection",        "sppf/serial_pool_equivalence", "fft/round_trip",
      "fft/fca_channel_scaling", "fft/fgm_unit_gate_identity", "attention/dense_oracle",
      "attention/area2_oracle",  "loss/focal_fixture",         "loss/dfl_uniform_fixture",
      "loss/iou_fixture",        "loss/zero_gt_reduction",     "nms/reference_oracle",
      "assign/brute_force_4x4"};
  for (const std::string& s : opts.only) {
    const auto& g = check_groups();
    const auto& b = gradient_blocks();
    const bool known =
        std::find(g.begin(), g.end(), s) != g.end() || std::find(b.begin(), b.end(), s) != b.end() ||
        (s.rfind("grad/", 0) == 0 && std::find(b.begin(), b.end(), s.substr(5)) != b.end()) ||
        std::any_of(subjects.begin(), subjects.end(), [&](const std::string& n) {
          return n == s || n.substr(n.find('/') + 1) == s;
        }) ||
        s.rfind("ap/", 0) == 0;
    if (!known) throw UsageError("unknown check selector '" + s + "'");
  }

  std::vector<CheckResult> results;
  auto emit = [&](CheckResult r) {
    if (!selected(opts.only, r.group, r.name)) return;
    if (on_result) on_result(r);
    results.push_back(std::move(r));
  };
  auto wants = [&](const std::string& group, const std::string& name) {
    return selected(opts.only, group, name);
  };

  for (const std::string& block : gradient_blocks()) {
    if (wants("grad", "grad/" + block)) emit(check_block_gradient(block, opts.grad));
  }
  // One stream per check, so a selection never shifts another check's draws.
  auto stream = [&](uint64_t k) { return Rng(derive_seed(opts.seed, k)); };
  Rng r1 = stream(1), r2 = stream(2), r3 = stream(3), r4 = stream(4), r5 = stream(5),
      r6 = stream(6), r7 = stream(7), r8 = stream(8), r9 = stream(9), r10 = stream(10);
  if (wants("spd", "spd/bijection")) emit(spd_bijection(r1));
  if (wants("sppf", "sppf/serial_pool_equivalence")) emit(sppf_pool_equivalence(r2));
  if (wants("fft", "fft/round_trip")) emit(fft_round_trip(r3));
  if (wants("fft", "fft/fca_channel_scaling")) emit(fca_channel_scaling(r4));
  if (wants("fft", "fft/fgm_unit_gate_identity")) emit(fgm_unit_gate_identity(r5));
  if (wants("attention", "attention/dense_oracle")) emit(attention_oracle_match(r6, 1));
  if (wants("attention", "attention/area2_oracle")) emit(attention_oracle_match(r7, 2));
  for (CheckResult& r : loss_fixtures(r8)) emit(std::move(r));
  if (wants("nms", "nms/reference_oracle")) {
    emit(nms_oracle(r9, opts.nms_instances, opts.nms_boxes));
  }
  if (wants("assign", "assign/brute_force_4x4")) {
    emit(assignment_oracle(r10, opts.assign_instances));
  }
  for (CheckResult& r : ap_fixtures()) emit(std::move(r));
  return results;
}

bool all_passed(const std::vector<CheckResult>& results) {
  return std::all_of(results.begin(), results.end(), [](const CheckResult& r) { return r.passed; });
}

nlohmann::json to_json(const std::vector<CheckResult>& results) {
  nlohmann::json out = nlohmann::json::array();
  for (const CheckResult& r : results) {
    out.push_back({{"group", r.group},
                   {"name", r.name},
                   {"passed", r.passed},
                   {"value", r.value},
                   {"tolerance", r.tolerance},
                   {"detail", r.detail}});
  }
  return out;
}

}  // namespace hieraedge::verify
