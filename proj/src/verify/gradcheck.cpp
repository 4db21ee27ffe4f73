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
#include <memory>
#include <numeric>
#include <sstream>

#include "hieraedge/detect/head.hpp"
#include "hieraedge/detect/loss.hpp"
#include "hieraedge/errors.hpp"
#include "hieraedge/nn/blocks.hpp"
#include "hieraedge/nn/edge.hpp"
#include "hieraedge/nn/omni_kernel.hpp"
#include "hieraedge/ops.hpp"
#include "hieraedge/verify/checks.hpp"

namespace hieraedge::verify {

GradCheckStats gradient_check(const std::function<std::vector<Tensor>()>& forward,
                              const NamedInputs& wrt, const GradCheckOptions& opts, Rng& rng) {
  const std::vector<Tensor> outputs = forward();
  std::vector<std::vector<double>> weights(outputs.size());
  Tensor loss;
  for (size_t k = 0; k < outputs.size(); ++k) {
    const double s = 1.0 / std::sqrt(static_cast<double>(outputs[k].numel()));
    weights[k].resize(outputs[k].numel());
    for (double& w : weights[k]) w = s * rng.normal();
    const Tensor part = weighted_sum(outputs[k], weights[k]);
    loss = loss.defined() ? add(loss, part) : part;
  }
  for (const auto& [name, t] : wrt) {
    Tensor handle = t;
    handle.zero_grad();
  }
  loss.backward();

  std::vector<std::vector<double>> analytic;
  for (const auto& [name, t] : wrt) {
    analytic.emplace_back(t.numel(), 0.0);
    if (t.has_grad()) std::copy(t.grad().begin(), t.grad().end(), analytic.back().begin());
  }

  NoGradGuard no_grad;
  auto objective = [&] {
    const std::vector<Tensor> outs = forward();
    double total = 0.0;
    for (size_t k = 0; k < outs.size(); ++k) {
      const auto v = outs[k].data();
      total += std::inner_product(v.begin(), v.end(), weights[k].begin(), 0.0);
    }
    return total;
  };

  GradCheckStats stats;
  for (size_t i = 0; i < wrt.size(); ++i) {
    Tensor t = wrt[i].second;
    std::vector<int64_t> probes(t.numel());
    std::iota(probes.begin(), probes.end(), 0);
    if (t.numel() > opts.max_probes) {
      for (int64_t j = 0; j < opts.max_probes; ++j) {
        std::swap(probes[j], probes[j + rng.uniform_int(t.numel() - j)]);
      }
      probes.resize(opts.max_probes);
    }
    auto values = t.data();
    for (int64_t idx : probes) {
      const double saved = values[idx];
      values[idx] = saved + opts.step;
      const double plus = objective();
      values[idx] = saved - opts.step;
      const double minus = objective();
      values[idx] = saved;
      const double numeric = (plus - minus) / (2.0 * opts.step);
      const double a = analytic[i][idx];
      const double rel =
          std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), opts.floor});
      ++stats.probes;
      if (rel >= stats.max_rel_error) {
        stats.max_rel_error = rel;
        std::ostringstream os;
        os << wrt[i].first << "[" << idx << "] analytic " << a << " numeric " << numeric;
        stats.worst = os.str();
      }
    }
  }
  return stats;
}

namespace {

struct Case {
  std::shared_ptr<nn::Module> module;
  NamedInputs wrt;
  std::function<std::vector<Tensor>()> forward;
};

Tensor random_input(const Shape& shape, Rng& rng) {
  Tensor t = Tensor::zeros(shape);
  for (double& v : t.data()) v = rng.normal();
  t.set_requires_grad(true);
  return t;
}

// Moves every parameter off its structured initial value (unit BN scales,
// zero gates) so the check sees a generic point.
void jitter(nn::Module& m, Rng& rng) {
  for (auto& [name, p] : m.named_parameters()) {
    for (double& v : p.data()) v += 0.2 * rng.normal();
  }
}

void add_parameters(Case& c) {
  for (auto& [name, p] : c.module->named_parameters()) c.wrt.emplace_back(name, p);
}

template <typename M>
Case single_input(std::shared_ptr<M> m, const Shape& in_shape, Rng& rng) {
  jitter(*m, rng);
  Case c;
  c.module = m;
  Tensor x = random_input(in_shape, rng);
  c.wrt.emplace_back("input", x);
  add_parameters(c);
  c.forward = [m, x] { return std::vector<Tensor>{m->forward(x)}; };
  return c;
}

Case make_case(const std::string& block, int instance, Rng& rng) {
  const int i = instance;
  if (block == "conv_bn_act") {
    const int64_t k = i == 0 ? 1 : 3, s = i == 2 ? 2 : 1;
    return single_input(std::make_shared<nn::ConvBnAct>(3 + i, 8, k, s, rng), {2, 3 + i, 7, 7},
                        rng);
  }
  if (block == "sobel_conv") {
    // Fixed Sobel filter followed by the trainable 1x1 that consumes it.
    auto holder = std::make_shared<nn::ConvBnAct>(4, 8, 1, 1, rng);
    auto sobel = std::make_shared<nn::SobelConv>(4);
    jitter(*holder, rng);
    Case c;
    c.module = holder;
    Tensor x = random_input({2, 4, 6 + 2 * i, 6 + 2 * i}, rng);
    c.wrt.emplace_back("input", x);
    add_parameters(c);
    c.forward = [holder, sobel, x] { return std::vector<Tensor>{holder->forward(sobel->forward(x))}; };
    return c;
  }
  if (block == "spd_conv") {
    return single_input(std::make_shared<nn::SpdConv>(2 + i, 8, rng), {2, 2 + i, 6, 8}, rng);
  }
  if (block == "sppf") {
    return single_input(std::make_shared<nn::Sppf>(8, 8, rng), {2, 8, 5 + i, 6}, rng);
  }
  if (block == "c3k2") {
    return single_input(std::make_shared<nn::C3k2>(8, 8, 1 + i / 2, i % 2 == 1, rng),
                        {2, 8, 5, 5}, rng);
  }
  if (block == "area_attention") {
    const int64_t area = i == 0 ? 1 : 2 * i;
    return single_input(std::make_shared<nn::AreaAttention>(nn::AreaAttnParams{8, 2, area}, rng),
                        {2, 8, 4, 4}, rng);
  }
  if (block == "a2c2f") {
    return single_input(std::make_shared<nn::A2C2f>(8, 8, 1, i == 1 ? 2 : 1, i == 2, rng),
                        {2, 8, 4, 4}, rng);
  }
  if (block == "hem") {
    auto m = std::make_shared<nn::Hem>(4, 8, 8, 8, rng);
    jitter(*m, rng);
    Case c;
    c.module = m;
    Tensor x = random_input({2, 4, 16, 16 + 8 * i}, rng);
    c.wrt.emplace_back("input", x);
    add_parameters(c);
    c.forward = [m, x] {
      const nn::EdgePyramid e = m->forward(x);
      return std::vector<Tensor>{e.e_p3, e.e_p4, e.e_p5};
    };
    return c;
  }
  if (block == "sef") {
    auto m = std::make_shared<nn::Sef>(8, 4 + i, 8, rng);
    jitter(*m, rng);
    Case c;
    c.module = m;
    Tensor main = random_input({2, 8, 4, 5}, rng), edge = random_input({2, 4 + i, 4, 5}, rng);
    c.wrt.emplace_back("main", main);
    c.wrt.emplace_back("edge", edge);
    add_parameters(c);
    c.forward = [m, main, edge] { return std::vector<Tensor>{m->forward(main, edge)}; };
    return c;
  }
  if (block == "fca") {
    return single_input(std::make_shared<nn::Fca>(6, rng), {2, 6, 4 + i, 5 + i}, rng);
  }
  if (block == "sca") {
    return single_input(std::make_shared<nn::Sca>(8, rng), {2, 8, 4, 3 + i}, rng);
  }
  if (block == "fgm") {
    return single_input(std::make_shared<nn::Fgm>(4, 4 + i, 5 + i), {2, 4, 4 + i, 5 + i}, rng);
  }
  if (block == "omni_kernel") {
    const int64_t k = i == 2 ? 5 : 3;
    return single_input(
        std::make_shared<nn::OmniKernel>(nn::OmniKernelParams{6, k, k, 6, 5 + i}, rng),
        {2, 6, 6, 5 + i}, rng);
  }
  if (block == "cspokm") {
    const nn::CspSplitSpec spec{0.25, 16, 8};
    const nn::OmniKernelParams okm{nn::okm_share(spec), 3, 3, 4, 4 + i};
    return single_input(std::make_shared<nn::CspOkm>(12, spec, okm, rng), {2, 12, 4, 4 + i}, rng);
  }
  if (block == "head") {
    ModelConfig cfg = ModelConfig::desk();
    cfg.dfl_bins = 4 + 2 * i;
    cfg.num_classes = 2 + i;
    auto m = std::make_shared<nn::DetectHead>(cfg, std::array<int64_t, kNumLevels>{8, 8, 16}, rng);
    jitter(*m, rng);
    Case c;
    c.module = m;
    // At least 2x2 per level: batch norm over two values is numerically
    // degenerate for finite differences.
    nn::FeatureMaps f{random_input({2, 8, 8, 8}, rng), random_input({2, 8, 4, 4}, rng),
                      random_input({2, 16, 2, 2}, rng)};
    c.wrt = {{"detect_p3", f.detect_p3}, {"detect_p4", f.detect_p4}, {"detect_p5", f.detect_p5}};
    add_parameters(c);
    c.forward = [m, f] { return m->forward(f).tensors(); };
    return c;
  }
  if (block == "total_loss") {
    // Raw head logits for a 2-image, 32x32 batch.
    const int64_t bins = 8, nc = 3;
    HeadOutput head;
    head.bins = bins;
    head.num_classes = nc;
    for (int l = 0; l < kNumLevels; ++l) {
      const int64_t side = 32 / kLevelStrides[l];
      head.reg[l] = random_input({2, 4 * bins, side, side}, rng);
      head.cls[l] = random_input({2, nc, side, side}, rng);
      for (double& v : head.cls[l].data()) v -= 1.5;
    }
    std::vector<std::vector<GroundTruth>> gts(2);
    const int counts[2] = {1 + i, i};
    for (int n = 0; n < 2; ++n) {
      for (int g = 0; g < counts[n]; ++g) {
        const double w = rng.uniform(8, 20), h = rng.uniform(8, 20);
        const double x1 = rng.uniform(0, 32 - w), y1 = rng.uniform(0, 32 - h);
        gts[n].push_back({BBox{x1, y1, x1 + w, y1 + h}, static_cast<int>(rng.uniform_int(nc))});
      }
    }
    Case c;
    for (int l = 0; l < kNumLevels; ++l) {
      c.wrt.emplace_back("reg" + std::to_string(l), head.reg[l]);
      c.wrt.emplace_back("cls" + std::to_string(l), head.cls[l]);
    }
    const LossWeights weights;
    c.forward = [head, gts, weights] {
      return std::vector<Tensor>{total_loss(head, gts, weights).total_tensor};
    };
    return c;
  }
  throw UsageError("no gradient check for block '" + block + "'");
}

}  // namespace

const std::vector<std::string>& gradient_blocks() {
  static const std::vector<std::string> blocks = {
      "conv_bn_act", "sobel_conv", "spd_conv", "sppf",        "c3k2",   "area_attention",
      "a2c2f",       "hem",        "sef",      "fca",         "sca",    "fgm",
      "omni_kernel", "cspokm",     "head",     "total_loss"};
  return blocks;
}

CheckResult check_block_gradient(const std::string& block, const GradCheckOptions& opts) {
  CheckResult r;
  r.group = "grad";
  r.name = "grad/" + block;
  r.tolerance = opts.tolerance;
  int64_t probes = 0;
  std::string worst;
  const auto& blocks = gradient_blocks();
  const auto slot = static_cast<uint64_t>(std::find(blocks.begin(), blocks.end(), block) - blocks.begin());
  for (int i = 0; i < opts.instances; ++i) {
    Rng rng(derive_seed(opts.seed, 64 * slot + static_cast<uint64_t>(i)));
    Case c = make_case(block, i, rng);
    const GradCheckStats s = gradient_check(c.forward, c.wrt, opts, rng);
    probes += s.probes;
    if (s.max_rel_error >= r.value) {
      r.value = s.max_rel_error;
      worst = "instance " + std::to_string(i) + ": " + s.worst;
    }
  }
  r.passed = r.value < opts.tolerance;
  std::ostringstream os;
  os << opts.instances << " instances, " << probes << " probes, worst " << worst;
  r.detail = os.str();
  return r;
}

}  // namespace hieraedge::verify
