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

#include "hieraedge/nn/module.hpp"

#include <cmath>

namespace hieraedge::nn {

void Module::set_training(bool on) {
  training_ = on;
  for (auto& [name, child] : children_) child->set_training(on);
}

Tensor Module::register_parameter(const std::string& name, Tensor t) {
  t.set_requires_grad(true);
  params_.emplace_back(name, t);
  return t;
}

Tensor Module::register_buffer(const std::string& name, Tensor t) {
  buffers_.emplace_back(name, t);
  return t;
}

void Module::collect(NamedTensors& out, const std::string& prefix, bool buffers) const {
  for (const auto& [name, t] : buffers ? buffers_ : params_) out.emplace_back(prefix + name, t);
  for (const auto& [name, child] : children_) child->collect(out, prefix + name + ".", buffers);
}

NamedTensors Module::named_parameters() const {
  NamedTensors out;
  collect(out, "", false);
  return out;
}

NamedTensors Module::named_buffers() const {
  NamedTensors out;
  collect(out, "", true);
  return out;
}

int64_t Module::parameter_count() const {
  int64_t n = 0;
  for (const auto& [name, t] : named_parameters()) n += t.numel();
  return n;
}

Tensor init_uniform(const Shape& shape, int64_t fan_in, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(std::max<int64_t>(fan_in, 1)));
  Tensor t = Tensor::zeros(shape);
  for (double& v : t.data()) v = rng.uniform(-bound, bound);
  return t;
}

Conv2d::Conv2d(int64_t in, int64_t out, int64_t kernel_h, int64_t kernel_w,
               const Conv2dOptions& o, bool with_bias, Rng& rng)
    : Module("Conv2d"), opts(o), in_channels(in), out_channels(out) {
  if (in < 1 || out < 1 || in % o.groups != 0 || out % o.groups != 0) {
    throw ConfigError("Conv2d: channels " + std::to_string(in) + "->" + std::to_string(out) +
                      " incompatible with groups=" + std::to_string(o.groups));
  }
  const int64_t fan_in = in / o.groups * kernel_h * kernel_w;
  weight = register_parameter("weight",
                              init_uniform({out, in / o.groups, kernel_h, kernel_w}, fan_in, rng));
  if (with_bias) bias = register_parameter("bias", init_uniform({out}, fan_in, rng));
}

Conv2d::Conv2d(int64_t in, int64_t out, int64_t kernel, int64_t stride, bool with_bias, Rng& rng,
               int64_t groups)
    : Conv2d(in, out, kernel, kernel, Conv2dOptions{stride, kernel / 2, kernel / 2, groups},
             with_bias, rng) {}

Tensor Conv2d::forward(const Tensor& x) const { return conv2d(x, weight, bias, opts); }

BatchNorm2d::BatchNorm2d(int64_t channels) : Module("BatchNorm2d") {
  gamma = register_parameter("weight", Tensor::ones({channels}));
  beta = register_parameter("bias", Tensor::zeros({channels}));
  state.running_mean = register_buffer("running_mean", Tensor::zeros({channels}));
  state.running_var = register_buffer("running_var", Tensor::ones({channels}));
}

Tensor BatchNorm2d::forward(const Tensor& x) {
  return batchnorm2d(x, gamma, beta, state, training(), kMomentum, kEps);
}

ConvBnAct::ConvBnAct(const ConvBlockParams& p, Rng& rng, bool with_act)
    : Module("ConvBnAct"), act(with_act) {
  if (p.out_channels < 1) throw ConfigError("ConvBnAct: out_channels must be >= 1");
  const int64_t pad = p.padding < 0 ? p.kernel / 2 : p.padding;
  conv = register_module("conv", std::make_shared<Conv2d>(
                                     p.in_channels, p.out_channels, p.kernel, p.kernel,
                                     Conv2dOptions{p.stride, pad, pad, p.groups}, false, rng));
  bn = register_module("bn", std::make_shared<BatchNorm2d>(p.out_channels));
}

ConvBnAct::ConvBnAct(int64_t in, int64_t out, int64_t kernel, int64_t stride, Rng& rng,
                     bool with_act)
    : ConvBnAct(ConvBlockParams{in, out, kernel, stride, -1, 1}, rng, with_act) {}

Tensor ConvBnAct::forward(const Tensor& x) {
  Tensor y = bn->forward(conv->forward(x));
  return act ? silu(y) : y;
}

}  // namespace hieraedge::nn
