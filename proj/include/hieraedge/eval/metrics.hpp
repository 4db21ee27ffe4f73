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
#include <filesystem>
#include <optional>
#include <vector>

#include "hieraedge/detect/box.hpp"
#include "json.hpp"

namespace hieraedge {

struct Match {
  bool tp = false;
  int gt_index = -1;
};

// dets must be sorted by descending score. Each detection takes the
// highest-IoU unmatched gt of its class with IoU >= threshold; the earlier
// gt wins IoU ties.
std::vector<Match> match_detections(const std::vector<Detection>& dets,
                                    const std::vector<GroundTruth>& gts, double iou_threshold);

struct ScoredMatch {
  double score = 0;
  bool tp = false;
};

enum class ApMethod { kCoco101, kAllPoint };

// Precision envelope (running max from the right) over the ranking by
// descending score. kCoco101 samples it at recall 0, 0.01, ..., 1 taking the
// first rank whose recall reaches the sample (0 beyond the last recall).
// nullopt when num_gt = 0.
std::optional<double> average_precision(std::vector<ScoredMatch> ranked, int num_gt,
                                        ApMethod method = ApMethod::kCoco101);

inline constexpr int kNumIouThresholds = 10;  // 0.50, 0.55, ..., 0.95
double iou_threshold_at(int t);

struct EvalOptions {
  int num_classes = 0;
  ApMethod method = ApMethod::kCoco101;
};

struct EvalReport {
  int num_classes = 0;
  std::vector<int> gt_counts;
  // ap[c][t] at iou_threshold_at(t); nullopt for classes without gts.
  std::vector<std::array<std::optional<double>, kNumIouThresholds>> ap;
  double map50 = 0, map75 = 0, map5095 = 0;
  // At IoU 0.5: per class, precision envelope sampled at recall 0..1 step 0.01.
  std::vector<std::vector<double>> pr_precision;
  // Class-mean F1 over confidence 0, 0.01, ..., 1 at IoU 0.5.
  std::vector<double> f1_confidence, f1;
  double best_f1 = 0, best_f1_confidence = 0;
  // Rows: gt class, then background; columns: predicted class, then background.
  std::vector<std::vector<int>> confusion;
};

// Throws UsageError for an empty dataset or mismatched list sizes.
EvalReport evaluate(const std::vector<std::vector<Detection>>& dets,
                    const std::vector<std::vector<GroundTruth>>& gts, const EvalOptions& opts);

nlohmann::json to_json(const EvalReport& r);

// pr_curve.png, f1_curve.png and confusion.png in dir.
void write_eval_plots(const std::filesystem::path& dir, const EvalReport& r);

}  // namespace hieraedge
