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

#include "hieraedge/nn/blocks.hpp"

#include <cmath>
#include <string>

namespace hieraedge::nn {

namespace {

Tensor forward_unit(const std::shared_ptr<Module>& m, const Tensor& x) {
  if (auto b = std::dynamic_pointer_cast<Bottleneck>(m)) return b->forward(x);
  if (auto c = std::dynamic_pointer_cast<C3k>(m)) return c->forward(x);
  if (auto a = std::dynamic_pointer_cast<ABlock>(m)) return a->forward(x);
  throw UsageError("unsupported unit type " + m->type());
}

}  // namespace

SobelConv::SobelConv(int64_t c) : Module("SobelConv"), channels(c) {
  std::vector<double> diff, smooth;
  for (int64_t i = 0; i < c; ++i) {
    diff.insert(diff.end(), {-1.0, 0.0, 1.0});
    smooth.insert(smooth.end(), {1.0, 2.0, 1.0});
  }
  diff_row_ = Tensor::from({c, 1, 1, 3}, diff);
  diff_col_ = Tensor::from({c, 1, 3, 1}, diff);
  smooth_row_ = Tensor::from({c, 1, 1, 3}, smooth);
  smooth_col_ = Tensor::from({c, 1, 3, 1}, std::move(smooth));
}

Tensor SobelConv::forward(const Tensor& x) const {
  // Separable form: the central difference runs first, so a constant input
  // cancels exactly; edge replication keeps that true at the border.
  const Tensor padded = pad_replicate(x, 1);
  const Conv2dOptions dw{1, 0, 0, channels};
  const Tensor gx = conv2d(conv2d(padded, diff_row_, Tensor(), dw), smooth_col_, Tensor(), dw);
  const Tensor gy = conv2d(conv2d(padded, diff_col_, Tensor(), dw), smooth_row_, Tensor(), dw);
  return add(abs(gx), abs(gy));
}

SpdConv::SpdConv(int64_t in, int64_t out, Rng& rng) : Module("SpdConv") {
  conv = register_module("conv", std::make_shared<ConvBnAct>(4 * in, out, 3, 1, rng));
}

Tensor SpdConv::forward(const Tensor& x) { return conv->forward(space_to_depth(x)); }

Sppf::Sppf(int64_t in, int64_t out, Rng& rng, int64_t k) : Module("SPPF"), pool_kernel(k) {
  const int64_t mid = std::max<int64_t>(in / 2, 1);
  cv1 = register_module("cv1", std::make_shared<ConvBnAct>(in, mid, 1, 1, rng));
  cv2 = register_module("cv2", std::make_shared<ConvBnAct>(4 * mid, out, 1, 1, rng));
}

Tensor Sppf::forward(const Tensor& x) {
  std::vector<Tensor> stages{cv1->forward(x)};
  for (int i = 0; i < 3; ++i) {
    stages.push_back(maxpool2d(stages.back(), pool_kernel, 1, pool_kernel / 2));
  }
  return cv2->forward(concat_channels(stages));
}

Bottleneck::Bottleneck(int64_t in, int64_t out, bool shortcut, double e, Rng& rng)
    : Module("Bottleneck"), residual(shortcut && in == out) {
  const int64_t mid = std::max<int64_t>(static_cast<int64_t>(out * e), 1);
  cv1 = register_module("cv1", std::make_shared<ConvBnAct>(in, mid, 3, 1, rng));
  cv2 = register_module("cv2", std::make_shared<ConvBnAct>(mid, out, 3, 1, rng));
}

Tensor Bottleneck::forward(const Tensor& x) {
  Tensor y = cv2->forward(cv1->forward(x));
  return residual ? add(x, y) : y;
}

C3k::C3k(int64_t in, int64_t out, int n, bool shortcut, Rng& rng) : Module("C3k") {
  const int64_t mid = std::max<int64_t>(out / 2, 1);
  cv1 = register_module("cv1", std::make_shared<ConvBnAct>(in, mid, 1, 1, rng));
  cv2 = register_module("cv2", std::make_shared<ConvBnAct>(in, mid, 1, 1, rng));
  cv3 = register_module("cv3", std::make_shared<ConvBnAct>(2 * mid, out, 1, 1, rng));
  for (int i = 0; i < n; ++i) {
    units.push_back(register_module("m." + std::to_string(i),
                                    std::make_shared<Bottleneck>(mid, mid, shortcut, 1.0, rng)));
  }
}

Tensor C3k::forward(const Tensor& x) {
  Tensor a = cv1->forward(x);
  for (auto& u : units) a = u->forward(a);
  return cv3->forward(concat_channels({a, cv2->forward(x)}));
}

C3k2::C3k2(int64_t in, int64_t out, int n, bool use_c3k, Rng& rng, double e, bool shortcut)
    : Module("C3k2") {
  hidden = std::max<int64_t>(static_cast<int64_t>(out * e), 1);
  cv1 = register_module("cv1", std::make_shared<ConvBnAct>(in, 2 * hidden, 1, 1, rng));
  for (int i = 0; i < n; ++i) {
    std::shared_ptr<Module> unit;
    if (use_c3k) {
      unit = std::make_shared<C3k>(hidden, hidden, 2, shortcut, rng);
    } else {
      unit = std::make_shared<Bottleneck>(hidden, hidden, shortcut, 0.5, rng);
    }
    units.push_back(register_module("m." + std::to_string(i), unit));
  }
  cv2 = register_module("cv2",
                        std::make_shared<ConvBnAct>((2 + n) * hidden, out, 1, 1, rng));
}

Tensor C3k2::forward(const Tensor& x) {
  std::vector<Tensor> groups = split_channels(cv1->forward(x), {hidden, hidden});
  for (auto& u : units) groups.push_back(forward_unit(u, groups.back()));
  return cv2->forward(concat_channels(groups));
}

AreaAttention::AreaAttention(const AreaAttnParams& p, Rng& rng)
    : Module("AAttn"), params(p) {
  if (p.num_heads < 1 || p.dim % p.num_heads != 0) {
    throw ConfigError("AreaAttention: dim " + std::to_string(p.dim) +
                      " not divisible by num_heads " + std::to_string(p.num_heads));
  }
  if (p.area < 1) throw ConfigError("AreaAttention: area must be >= 1");
  qkv = register_module("qkv", std::make_shared<Conv2d>(p.dim, 3 * p.dim, 1, 1, true, rng));
  proj = register_module("proj", std::make_shared<Conv2d>(p.dim, p.dim, 1, 1, true, rng));
}

Tensor AreaAttention::forward(const Tensor& x) {
  const int64_t n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  if (c != params.dim) {
    throw DimensionError("AreaAttention: axis 1 (C) is " + std::to_string(c) + ", expected " +
                         std::to_string(params.dim));
  }
  const int64_t len = h * w;
  if (len % params.area != 0) {
    throw UsageError("AreaAttention: H*W = " + std::to_string(len) +
                     " not divisible by area = " + std::to_string(params.area));
  }
  const int64_t heads = params.num_heads, dh = c / heads, area = params.area;
  const int64_t seg = len / area;
  auto parts = split_channels(qkv->forward(x), {c, c, c});
  auto to_heads = [&](const Tensor& t) {
    Tensor r = reshape(t, {n, heads, dh, area, seg});
    r = permute(r, {0, 3, 1, 4, 2});
    return reshape(r, {n * area * heads, seg, dh});
  };
  const Tensor q = to_heads(parts[0]), k = to_heads(parts[1]), v = to_heads(parts[2]);
  Tensor attn = softmax_lastdim(scale(bmm(q, k, false, true), 1.0 / std::sqrt(double(dh))));
  if (keep_attention) last_attention = attn;
  Tensor o = reshape(bmm(attn, v), {n, area, heads, seg, dh});
  o = reshape(permute(o, {0, 2, 4, 1, 3}), {n, c, h, w});
  return proj->forward(o);
}

ABlock::ABlock(int64_t dim, int64_t num_heads, int64_t area, Rng& rng, double mlp_ratio)
    : Module("ABlock") {
  attn = register_module("attn",
                         std::make_shared<AreaAttention>(AreaAttnParams{dim, num_heads, area}, rng));
  const int64_t hidden = std::max<int64_t>(static_cast<int64_t>(dim * mlp_ratio), 1);
  mlp_in = register_module("mlp.0", std::make_shared<ConvBnAct>(dim, hidden, 1, 1, rng));
  mlp_out = register_module("mlp.1", std::make_shared<ConvBnAct>(hidden, dim, 1, 1, rng, false));
}

Tensor ABlock::forward(const Tensor& x) {
  Tensor y = add(x, attn->forward(x));
  return add(y, mlp_out->forward(mlp_in->forward(y)));
}

A2C2f::A2C2f(int64_t in, int64_t out, int n, int64_t area, bool c3k, Rng& rng,
             int64_t num_heads, double e)
    : Module("A2C2f"), use_c3k(c3k) {
  hidden = std::max<int64_t>(static_cast<int64_t>(out * e), 1);
  if (num_heads <= 0) num_heads = std::max<int64_t>(hidden / 32, 1);
  cv1 = register_module("cv1", std::make_shared<ConvBnAct>(in, hidden, 1, 1, rng));
  for (int i = 0; i < n; ++i) {
    std::vector<std::shared_ptr<Module>> unit;
    const std::string base = "m." + std::to_string(i);
    if (use_c3k) {
      unit.push_back(register_module(base, std::make_shared<C3k>(hidden, hidden, 2, true, rng)));
    } else {
      for (int j = 0; j < 2; ++j) {
        unit.push_back(register_module(base + "." + std::to_string(j),
                                       std::make_shared<ABlock>(hidden, num_heads, area, rng)));
      }
    }
    units.push_back(std::move(unit));
  }
  cv2 = register_module("cv2", std::make_shared<ConvBnAct>((1 + n) * hidden, out, 1, 1, rng));
}

Tensor A2C2f::forward(const Tensor& x) {
  std::vector<Tensor> ys{cv1->forward(x)};
  for (auto& unit : units) {
    Tensor y = ys.back();
    for (auto& m : unit) y = forward_unit(m, y);
    ys.push_back(y);
  }
  return cv2->forward(concat_channels(ys));
}

}  // namespace hieraedge::nn
