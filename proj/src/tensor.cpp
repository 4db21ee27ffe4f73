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

#include "hieraedge/tensor.hpp"

#include <algorithm>
#include <sstream>
#include <unordered_set>
#include <utility>

namespace hieraedge {

namespace {

thread_local bool g_grad_enabled = true;
std::string g_backward_fault;
int64_t g_fault_hits = 0;

std::shared_ptr<TensorImpl> new_impl(const Shape& shape, std::vector<double> data) {
  auto impl = std::make_shared<TensorImpl>();
  impl->shape = shape;
  impl->data = std::move(data);
  return impl;
}

}  // namespace

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '(';
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ", ";
    os << shape[i];
  }
  os << ')';
  return os.str();
}

int64_t shape_numel(const Shape& shape) {
  int64_t n = 1;
  for (int64_t e : shape) n *= e;
  return n;
}

Tensor Tensor::zeros(const Shape& shape) { return full(shape, 0.0); }
Tensor Tensor::ones(const Shape& shape) { return full(shape, 1.0); }

Tensor Tensor::full(const Shape& shape, double value) {
  for (int64_t e : shape) {
    if (e < 0) throw DimensionError("negative extent in shape " + shape_str(shape));
  }
  return Tensor(new_impl(shape, std::vector<double>(shape_numel(shape), value)));
}

Tensor Tensor::from(const Shape& shape, std::vector<double> values) {
  if (shape_numel(shape) != static_cast<int64_t>(values.size())) {
    throw DimensionError("shape " + shape_str(shape) + " holds " +
                         std::to_string(shape_numel(shape)) + " values, got " +
                         std::to_string(values.size()));
  }
  return Tensor(new_impl(shape, std::move(values)));
}

Tensor Tensor::scalar(double value) { return from({1}, {value}); }

int64_t Tensor::dim(int axis) const {
  const int r = rank();
  if (axis < 0) axis += r;
  if (axis < 0 || axis >= r) {
    throw DimensionError("axis " + std::to_string(axis) + " out of range for shape " +
                         shape_str(shape()));
  }
  return impl_->shape[axis];
}

void Tensor::zero_grad() { impl_->grad.clear(); }

Tensor& Tensor::set_requires_grad(bool on) {
  impl_->requires_grad = on;
  return *this;
}

Tensor& Tensor::retain_grad() {
  impl_->retain_grad = true;
  return *this;
}

double Tensor::item() const {
  if (numel() != 1) {
    throw UsageError("item() on tensor of shape " + shape_str(shape()));
  }
  return impl_->data[0];
}

double& Tensor::at(int64_t n, int64_t c, int64_t h, int64_t w) {
  const Shape& s = impl_->shape;
  return impl_->data[((n * s[1] + c) * s[2] + h) * s[3] + w];
}

double Tensor::at(int64_t n, int64_t c, int64_t h, int64_t w) const {
  const Shape& s = impl_->shape;
  return impl_->data[((n * s[1] + c) * s[2] + h) * s[3] + w];
}

Tensor Tensor::detach() const { return Tensor(new_impl(impl_->shape, impl_->data)); }

void Tensor::backward() const {
  if (numel() != 1) {
    throw UsageError("backward() requires a scalar loss, got shape " + shape_str(shape()));
  }
  // Iterative post-order DFS gives a topological order. The order holds
  // owning handles: releasing a node may drop the last other reference.
  std::vector<Tensor> order;
  std::unordered_set<TensorImpl*> seen;
  std::vector<std::pair<Tensor, size_t>> stack;
  stack.emplace_back(*this, 0);
  seen.insert(impl_.get());
  while (!stack.empty()) {
    auto& [t, next] = stack.back();
    const auto& node = t.impl()->node;
    if (node && next < node->inputs.size()) {
      const Tensor& child = node->inputs[next++];
      if ((child.impl()->node || child.impl()->requires_grad) &&
          seen.insert(child.impl()).second) {
        stack.emplace_back(child, 0);
      }
      continue;
    }
    order.push_back(std::move(t));
    stack.pop_back();
  }

  impl_->grad.assign(1, 1.0);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    TensorImpl* t = it->impl();
    if (t->node) {
      if (!t->grad.empty()) {
        if (!g_backward_fault.empty() && t->node->name == g_backward_fault) {
          for (double& g : t->grad) g = -g;
          ++g_fault_hits;
        }
        t->node->backward(*t);
      }
      t->node.reset();
      if (!t->retain_grad && t != impl_.get()) {
        std::vector<double>().swap(t->grad);
      }
    }
    *it = Tensor();
  }
}

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

namespace autodiff {

bool needs_grad(const Tensor& t) {
  return t.defined() && (t.requires_grad() || t.node() != nullptr);
}

Tensor make_result(Shape shape, std::vector<double> data, std::string_view name,
                   std::vector<Tensor> inputs, BackwardFn backward) {
  Tensor out = Tensor::from(shape, std::move(data));
  if (!g_grad_enabled) return out;
  const bool any = std::any_of(inputs.begin(), inputs.end(),
                               [](const Tensor& t) { return needs_grad(t); });
  if (!any) return out;
  auto node = std::make_shared<Node>();
  node->name = std::string(name);
  node->inputs = std::move(inputs);
  node->backward = std::move(backward);
  out.impl()->node = std::move(node);
  return out;
}

std::span<double> grad_sink(const Tensor& t) {
  if (!needs_grad(t)) return {};
  TensorImpl* impl = t.impl();
  if (impl->grad.empty()) impl->grad.assign(impl->data.size(), 0.0);
  return impl->grad;
}

void set_backward_fault(std::string op_name) {
  g_backward_fault = std::move(op_name);
  g_fault_hits = 0;
}
int64_t backward_fault_hits() { return g_fault_hits; }
const std::string& backward_fault() { return g_backward_fault; }

}  // namespace autodiff

}  // namespace hieraedge
