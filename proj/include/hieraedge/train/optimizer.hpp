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

#include <map>
#include <string>

#include "hieraedge/nn/module.hpp"

namespace hieraedge {

struct SgdOptions {
  double momentum = 0.9;
  double weight_decay = 5e-4;  // applied to tensors of rank >= 2 only
  double max_grad_norm = 10.0;  // global L2 clip; 0 disables
};

// SGD with heavy-ball momentum: v = mu v + g; p -= lr v.
class Sgd {
 public:
  Sgd(nn::NamedTensors params, SgdOptions opts);

  void zero_grad();
  // Returns the pre-clip global gradient norm.
  double step(double lr);

  // Momentum buffers as "optim.momentum.<param>".
  nn::NamedTensors state() const;
  void load_state(const std::map<std::string, Tensor>& entries);

 private:
  nn::NamedTensors params_;
  std::vector<std::vector<double>> velocity_;
  SgdOptions opts_;
};

// Linear warmup to base_lr over warmup steps, then cosine decay to
// base_lr * final_ratio at step total.
double cosine_lr(int64_t step, int64_t total, double base_lr, int64_t warmup, double final_ratio);

}  // namespace hieraedge
