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

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "hieraedge/ops.hpp"
#include "hieraedge/rng.hpp"
#include "hieraedge/tensor.hpp"

namespace hieraedge::nn {

using NamedTensors = std::vector<std::pair<std::string, Tensor>>;

// Parameter-owning building block. Parameters and buffers are registered by
// name; Tensor handles share storage, so the registry and the members alias
// the same buffers. Modules are neither copyable nor movable.
class Module {
 public:
  explicit Module(std::string type) : type_(std::move(type)) {}
  virtual ~Module() = default;
  Module(const Module&) = delete;
  Module& operator=(const Module&) = delete;

  const std::string& type() const { return type_; }

  void set_training(bool on);
  bool training() const { return training_; }

  // Trainable parameters, dotted names, registration order.
  NamedTensors named_parameters() const;
  // Non-trainable persistent state (batch-norm running statistics).
  NamedTensors named_buffers() const;
  int64_t parameter_count() const;

  const std::vector<std::pair<std::string, std::shared_ptr<Module>>>& children() const {
    return children_;
  }

 protected:
  Tensor register_parameter(const std::string& name, Tensor t);
  Tensor register_buffer(const std::string& name, Tensor t);
  template <typename M>
  std::shared_ptr<M> register_module(const std::string& name, std::shared_ptr<M> m) {
    children_.emplace_back(name, m);
    return m;
  }

 private:
  void collect(NamedTensors& out, const std::string& prefix, bool buffers) const;

  std::string type_;
  bool training_ = true;
  NamedTensors params_;
  NamedTensors buffers_;
  std::vector<std::pair<std::string, std::shared_ptr<Module>>> children_;
};

// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)), the usual default for conv layers.
Tensor init_uniform(const Shape& shape, int64_t fan_in, Rng& rng);

class Conv2d : public Module {
 public:
  Conv2d(int64_t in, int64_t out, int64_t kernel_h, int64_t kernel_w, const Conv2dOptions& opts,
         bool bias, Rng& rng);
  Conv2d(int64_t in, int64_t out, int64_t kernel, int64_t stride, bool bias, Rng& rng,
         int64_t groups = 1);

  Tensor forward(const Tensor& x) const;

  Tensor weight;
  Tensor bias;  // undefined when constructed without bias
  Conv2dOptions opts;
  int64_t in_channels, out_channels;
};

class BatchNorm2d : public Module {
 public:
  explicit BatchNorm2d(int64_t channels);
  Tensor forward(const Tensor& x);

  Tensor gamma, beta;
  BatchNormState state;
  static constexpr double kMomentum = 0.03;
  static constexpr double kEps = 1e-5;
};

struct ConvBlockParams {
  int64_t in_channels = 0;
  int64_t out_channels = 0;
  int64_t kernel = 1;
  int64_t stride = 1;
  int64_t padding = -1;  // -1: kernel / 2, "same" at stride 1
  int64_t groups = 1;
};

// conv (no bias) -> batch norm -> SiLU. `act = false` drops the SiLU.
class ConvBnAct : public Module {
 public:
  ConvBnAct(const ConvBlockParams& p, Rng& rng, bool act = true);
  ConvBnAct(int64_t in, int64_t out, int64_t kernel, int64_t stride, Rng& rng, bool act = true);

  Tensor forward(const Tensor& x);

  std::shared_ptr<Conv2d> conv;
  std::shared_ptr<BatchNorm2d> bn;
  bool act;
};

}  // namespace hieraedge::nn
