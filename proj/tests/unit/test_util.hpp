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

#include <algorithm>
#include <cmath>
#include <vector>

#include "hieraedge/rng.hpp"
#include "hieraedge/tensor.hpp"
#include "hieraedge/verify/checks.hpp"

namespace hieraedge::testing {

inline Tensor random_tensor(const Shape& shape, Rng& rng, double scale = 1.0) {
  Tensor t = Tensor::zeros(shape);
  for (double& v : t.data()) v = scale * rng.normal();
  return t;
}

inline Tensor leaf(const Shape& shape, Rng& rng) {
  Tensor t = random_tensor(shape, rng);
  t.set_requires_grad(true);
  return t;
}

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double worst = a.size() == b.size() ? 0.0 : INFINITY;
  for (size_t i = 0; i < std::min(a.size(), b.size()); ++i) {
    worst = std::max(worst, std::abs(a[i] - b[i]));
  }
  return worst;
}

inline double max_abs_diff(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) return INFINITY;
  return max_abs_diff(a.data(), b.data());
}

// Max relative error of reverse mode against central differences over
// three random projections.
inline double fd_error(const std::function<std::vector<Tensor>()>& forward,
                       const verify::NamedInputs& wrt, uint64_t seed = 3) {
  verify::GradCheckOptions opts;
  Rng rng(seed);
  double worst = 0.0;
  for (int i = 0; i < 3; ++i) {
    worst = std::max(worst, verify::gradient_check(forward, wrt, opts, rng).max_rel_error);
  }
  return worst;
}

}  // namespace hieraedge::testing
