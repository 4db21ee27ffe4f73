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

// Verification battery: finite-difference gradient checks per block,
// structural identities, oracle comparisons and golden fixtures. Shared by
// the `check` command and the acceptance runner.

#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "hieraedge/rng.hpp"
#include "hieraedge/tensor.hpp"
#include "json.hpp"

namespace hieraedge::verify {

struct CheckResult {
  std::string group;  // grad, spd, sppf, fft, attention, loss, nms, assign, ap
  std::string name;   // group/subject, e.g. grad/omni_kernel
  bool passed = false;
  double value = 0;      // measured error or mismatch count
  double tolerance = 0;  // pass iff value < tolerance (or == 0 for exact checks)
  std::string detail;
};

struct GradCheckOptions {
  double step = 1e-5;
  double tolerance = 1e-4;
  int instances = 3;
  // Elements probed per tensor; larger tensors are sampled without
  // replacement, smaller ones are probed exhaustively.
  int64_t max_probes = 256;
  // |a - n| / max(|a|, |n|, floor) guards against 0/0 on vanishing entries.
  double floor = 1e-6;
  uint64_t seed = 1;
};

struct GradCheckStats {
  double max_rel_error = 0;
  int64_t probes = 0;
  std::string worst;  // tensor[index] with the largest error
};

using NamedInputs = std::vector<std::pair<std::string, Tensor>>;

// Compares the reverse-mode gradient of L = sum_k <outputs_k, W_k> (fixed
// random W_k) with central differences over every tensor in `wrt`, which
// must be leaves with requires_grad set. `forward` must be a pure function
// of the current values of `wrt`.
GradCheckStats gradient_check(const std::function<std::vector<Tensor>()>& forward,
                              const NamedInputs& wrt, const GradCheckOptions& opts, Rng& rng);

// Blocks with a gradient check, in battery order.
const std::vector<std::string>& gradient_blocks();
CheckResult check_block_gradient(const std::string& block, const GradCheckOptions& opts);

// Every group name accepted by BatteryOptions::only.
const std::vector<std::string>& check_groups();

struct BatteryOptions {
  // Group names or full check names; empty runs everything.
  std::vector<std::string> only;
  GradCheckOptions grad;
  int nms_instances = 1000;
  int nms_boxes = 100;
  int assign_instances = 200;
  uint64_t seed = 7;
};

// Runs the selected checks in a fixed order; `on_result` sees each result
// as it completes. Throws UsageError for an unknown selector.
std::vector<CheckResult> run_battery(const BatteryOptions& opts,
                                     const std::function<void(const CheckResult&)>& on_result = {});

bool all_passed(const std::vector<CheckResult>& results);
nlohmann::json to_json(const std::vector<CheckResult>& results);

}  // namespace hieraedge::verify
