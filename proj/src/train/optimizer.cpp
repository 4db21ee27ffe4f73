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

#include "hieraedge/train/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "hieraedge/errors.hpp"

namespace hieraedge {

Sgd::Sgd(nn::NamedTensors params, SgdOptions opts) : params_(std::move(params)), opts_(opts) {
  for (const auto& [name, t] : params_) velocity_.emplace_back(t.numel(), 0.0);
}

void Sgd::zero_grad() {
  for (auto& [name, t] : params_) t.zero_grad();
}

double Sgd::step(double lr) {
  double sq = 0.0;
  for (const auto& [name, t] : params_) {
    if (!t.has_grad()) continue;
    for (double g : t.grad()) sq += g * g;
  }
  const double norm = std::sqrt(sq);
  const double clip =
      opts_.max_grad_norm > 0 && norm > opts_.max_grad_norm ? opts_.max_grad_norm / norm : 1.0;
  for (size_t i = 0; i < params_.size(); ++i) {
    Tensor& p = params_[i].second;
    auto v = std::span<double>(velocity_[i]);
    auto w = p.data();
    const double decay = p.rank() >= 2 ? opts_.weight_decay : 0.0;
    const bool has = p.has_grad();
    const auto g = has ? p.grad() : std::span<const double>{};
    for (size_t k = 0; k < w.size(); ++k) {
      const double grad = (has ? clip * g[k] : 0.0) + decay * w[k];
      v[k] = opts_.momentum * v[k] + grad;
      w[k] -= lr * v[k];
    }
  }
  return norm;
}

nn::NamedTensors Sgd::state() const {
  nn::NamedTensors out;
  for (size_t i = 0; i < params_.size(); ++i) {
    out.emplace_back("optim.momentum." + params_[i].first,
                     Tensor::from(params_[i].second.shape(), velocity_[i]));
  }
  return out;
}

void Sgd::load_state(const std::map<std::string, Tensor>& entries) {
  for (size_t i = 0; i < params_.size(); ++i) {
    const std::string key = "optim.momentum." + params_[i].first;
    const auto it = entries.find(key);
    if (it == entries.end()) throw ConfigError("checkpoint: missing optimizer entry '" + key + "'");
    if (it->second.numel() != static_cast<int64_t>(velocity_[i].size())) {
      throw ConfigError("checkpoint: optimizer entry '" + key + "' has the wrong size");
    }
    velocity_[i].assign(it->second.data().begin(), it->second.data().end());
  }
}

double cosine_lr(int64_t step, int64_t total, double base_lr, int64_t warmup, double final_ratio) {
  if (warmup > 0 && step < warmup) {
    return base_lr * static_cast<double>(step + 1) / static_cast<double>(warmup);
  }
  const double span = static_cast<double>(std::max<int64_t>(1, total - warmup));
  const double t = std::clamp(static_cast<double>(step - warmup) / span, 0.0, 1.0);
  const double floor = base_lr * final_ratio;
  return floor + 0.5 * (base_lr - floor) * (1.0 + std::cos(std::numbers::pi * t));
}

}  // namespace hieraedge
