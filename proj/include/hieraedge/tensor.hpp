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

#include <cstdint>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hieraedge/errors.hpp"

namespace hieraedge {

using Shape = std::vector<int64_t>;

std::string shape_str(const Shape& shape);
int64_t shape_numel(const Shape& shape);

struct TensorImpl;
class Tensor;

// One recorded operation. `backward` reads the output's value and grad and
// accumulates into the grads of `inputs` that require them.
struct Node {
  std::string name;
  std::vector<Tensor> inputs;
  std::function<void(const TensorImpl& out)> backward;
};

struct TensorImpl {
  Shape shape;
  std::vector<double> data;
  std::vector<double> grad;  // empty until something flows into it
  bool requires_grad = false;
  bool retain_grad = false;
  std::shared_ptr<Node> node;  // null for leaves and constants
};

// Dense row-major float64 array with optional reverse-mode gradient state.
// Copies share storage; use clone() or detach() for a distinct buffer.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::shared_ptr<TensorImpl> impl) : impl_(std::move(impl)) {}

  static Tensor zeros(const Shape& shape);
  static Tensor ones(const Shape& shape);
  static Tensor full(const Shape& shape, double value);
  static Tensor from(const Shape& shape, std::vector<double> values);
  static Tensor scalar(double value);

  bool defined() const { return impl_ != nullptr; }
  const Shape& shape() const { return impl_->shape; }
  int rank() const { return static_cast<int>(impl_->shape.size()); }
  // Negative axes count from the back.
  int64_t dim(int axis) const;
  int64_t numel() const { return static_cast<int64_t>(impl_->data.size()); }

  std::span<double> data() { return impl_->data; }
  std::span<const double> data() const { return impl_->data; }
  std::vector<double>& values() { return impl_->data; }
  const std::vector<double>& values() const { return impl_->data; }

  bool has_grad() const { return !impl_->grad.empty(); }
  std::span<double> grad() { return impl_->grad; }
  std::span<const double> grad() const { return impl_->grad; }
  void zero_grad();

  bool requires_grad() const { return impl_->requires_grad; }
  Tensor& set_requires_grad(bool on = true);
  // Keep the gradient of a non-leaf tensor after backward().
  Tensor& retain_grad();
  bool is_leaf() const { return impl_->node == nullptr; }
  const std::shared_ptr<Node>& node() const { return impl_->node; }

  double item() const;
  double& at(int64_t n, int64_t c, int64_t h, int64_t w);
  double at(int64_t n, int64_t c, int64_t h, int64_t w) const;

  // New leaf with a copy of the values, no graph, requires_grad = false.
  Tensor detach() const;
  Tensor clone() const { return detach(); }

  // Reverse-mode sweep from a scalar. Accumulates into every reachable
  // requires_grad leaf; the graph is consumed.
  void backward() const;

  TensorImpl* impl() const { return impl_.get(); }
  bool same(const Tensor& other) const { return impl_ == other.impl_; }

 private:
  std::shared_ptr<TensorImpl> impl_;
};

// Graph recording is on by default; NoGradGuard switches it off for the
// current thread (inference, optimizer updates, oracles).
bool grad_enabled();

class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

namespace autodiff {

using BackwardFn = std::function<void(const TensorImpl& out)>;

// Builds an op result and, when recording, attaches a node.
Tensor make_result(Shape shape, std::vector<double> data, std::string_view name,
                   std::vector<Tensor> inputs, BackwardFn backward);

// Grad buffer of `t`, allocated as zeros on first touch. Returns an empty span
// when `t` does not take gradients.
std::span<double> grad_sink(const Tensor& t);

bool needs_grad(const Tensor& t);

// Fault injection for the verification battery: every node whose name equals
// `op_name` receives a negated upstream gradient. Empty string disables.
void set_backward_fault(std::string op_name);
const std::string& backward_fault();
// Nodes negated since the fault was last set.
int64_t backward_fault_hits();

}  // namespace autodiff

}  // namespace hieraedge
