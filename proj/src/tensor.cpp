// Copyright (c) the Scaleform authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "scaleform/tensor.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cmath>
#include <sstream>
#include <unordered_map>
#include <utility>

#include "scaleform/errors.hpp"

namespace scaleform {

namespace {

thread_local bool g_grad_enabled = true;
thread_local Precision g_precision = Precision::kFloat64;

void check_finite(const char* op, const std::vector<double>& data) {
  // Integer test on the exponent field so the scan vectorizes.
  constexpr std::uint64_t kExp = 0x7ff0000000000000ULL;
  std::uint64_t bad = 0;
  for (double v : data) bad |= (std::bit_cast<std::uint64_t>(v) & kExp) == kExp;
  if (bad != 0) throw NumericError(std::string("non-finite value produced by ") + op);
}

}  // namespace

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ',';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

Tensor::Tensor(Shape shape, std::vector<double> data, bool requires_grad)
    : impl_(std::make_shared<detail::TensorImpl>()) {
  for (std::size_t d : shape) {
    if (d == 0) throw DimensionError("zero-sized dimension in " + shape_str(shape));
  }
  if (shape_numel(shape) != data.size()) {
    throw DimensionError("shape " + shape_str(shape) + " does not match " +
                         std::to_string(data.size()) + " values");
  }
  check_finite("tensor construction", data);
  impl_->shape = std::move(shape);
  impl_->data = std::move(data);
  impl_->requires_grad = requires_grad;
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  return full(std::move(shape), 0.0, requires_grad);
}

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
  const std::size_t n = shape_numel(shape);
  return Tensor(std::move(shape), std::vector<double>(n, value), requires_grad);
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return Tensor({1}, {value}, requires_grad);
}

const Shape& Tensor::shape() const { return impl_->shape; }

std::size_t Tensor::dim(int axis) const {
  const int n = static_cast<int>(impl_->shape.size());
  const int a = axis < 0 ? axis + n : axis;
  if (a < 0 || a >= n) {
    throw DimensionError("axis " + std::to_string(axis) + " out of range for " +
                         shape_str(impl_->shape));
  }
  return impl_->shape[static_cast<std::size_t>(a)];
}

std::size_t Tensor::numel() const { return impl_->data.size(); }

std::span<const double> Tensor::data() const { return impl_->data; }

std::span<double> Tensor::mutable_data() { return impl_->data; }

double Tensor::item() const {
  if (numel() != 1) {
    throw UsageError("item() on tensor of shape " + shape_str(shape()));
  }
  return impl_->data[0];
}

double Tensor::at(std::initializer_list<std::size_t> index) const {
  const Shape& s = shape();
  if (index.size() != s.size()) throw DimensionError("index rank mismatch");
  std::size_t off = 0;
  std::size_t k = 0;
  for (std::size_t i : index) {
    if (i >= s[k]) throw DimensionError("index out of range");
    off = off * s[k] + i;
    ++k;
  }
  return impl_->data[off];
}

bool Tensor::requires_grad() const { return impl_->requires_grad; }

Tensor& Tensor::set_requires_grad(bool on) {
  impl_->requires_grad = on;
  return *this;
}

std::span<const double> Tensor::grad() const { return impl_->grad; }

bool Tensor::has_grad() const { return !impl_->grad.empty(); }

void Tensor::zero_grad() {
  std::fill(impl_->grad.begin(), impl_->grad.end(), 0.0);
}

Tensor Tensor::detach() const { return Tensor(impl_->shape, impl_->data); }

Tensor Tensor::clone() const {
  return Tensor(impl_->shape, impl_->data, impl_->requires_grad && is_leaf());
}

bool Tensor::is_leaf() const { return impl_->node == nullptr; }

namespace {

std::shared_ptr<detail::TensorImpl> make_result_impl(const char* op, Shape shape, std::vector<double> data,
                        std::span<const Tensor> inputs,
                        detail::BackwardFn backward) {
  if (!g_grad_enabled && g_precision == Precision::kFloat32) {
    for (double& v : data) v = static_cast<double>(static_cast<float>(v));
  }
  check_finite(op, data);
  auto impl = std::make_shared<detail::TensorImpl>();
  impl->shape = std::move(shape);
  impl->data = std::move(data);
  if (g_grad_enabled) {
    const bool any = std::any_of(inputs.begin(), inputs.end(), [](const Tensor& t) {
      return t.defined() && t.requires_grad();
    });
    if (any) {
      auto node = std::make_shared<detail::Node>();
      node->op = op;
      node->inputs.reserve(inputs.size());
      for (const Tensor& t : inputs) node->inputs.push_back(t.impl());
      node->backward = std::move(backward);
      impl->node = std::move(node);
      impl->requires_grad = true;
    }
  }
  return impl;
}

}  // namespace

Tensor make_result(const char* op, Shape shape, std::vector<double> data,
                   std::initializer_list<Tensor> inputs,
                   detail::BackwardFn backward) {
  return Tensor(make_result_impl(op, std::move(shape), std::move(data),
                                 std::span<const Tensor>(inputs.begin(), inputs.size()),
                                 std::move(backward)));
}

Tensor make_result(const char* op, Shape shape, std::vector<double> data,
                   const std::vector<Tensor>& inputs,
                   detail::BackwardFn backward) {
  return Tensor(make_result_impl(op, std::move(shape), std::move(data), inputs,
                                 std::move(backward)));
}

void backward(const Tensor& loss) {
  if (!loss.defined() || loss.numel() != 1) {
    throw UsageError("backward() needs a scalar loss");
  }
  using detail::TensorImpl;
  TensorImpl* root = loss.impl().get();
  if (!root->requires_grad) return;

  // Post-order DFS gives a topological order; the reverse sweep then visits
  // each node once after all of its consumers.
  std::vector<TensorImpl*> order;
  std::unordered_map<TensorImpl*, bool> visited;
  std::vector<std::pair<TensorImpl*, std::size_t>> stack{{root, 0}};
  visited[root] = true;
  while (!stack.empty()) {
    auto& [t, next] = stack.back();
    if (t->node && next < t->node->inputs.size()) {
      TensorImpl* in = t->node->inputs[next++].get();
      if (in && in->requires_grad && !visited[in]) {
        visited[in] = true;
        stack.emplace_back(in, 0);
      }
      continue;
    }
    order.push_back(t);
    stack.pop_back();
  }

  std::unordered_map<TensorImpl*, std::vector<double>> grads;
  grads[root] = {1.0};
  std::vector<std::span<double>> spans;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    TensorImpl* t = *it;
    auto found = grads.find(t);
    if (found == grads.end()) continue;
    std::vector<double> g = std::move(found->second);
    grads.erase(found);
    if (!t->node) {
      if (t->grad.size() != g.size()) t->grad.assign(g.size(), 0.0);
      for (std::size_t i = 0; i < g.size(); ++i) t->grad[i] += g[i];
      continue;
    }
    spans.clear();
    for (const auto& in : t->node->inputs) {
      if (in && in->requires_grad) {
        auto& buf = grads[in.get()];
        if (buf.empty()) buf.assign(in->data.size(), 0.0);
        spans.emplace_back(buf);
      } else {
        spans.emplace_back();
      }
    }
    t->node->backward(g, spans);
  }
}

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

Precision inference_precision() { return g_precision; }

PrecisionGuard::PrecisionGuard(Precision precision) : previous_(g_precision) {
  g_precision = precision;
}
PrecisionGuard::~PrecisionGuard() { g_precision = previous_; }

}  // namespace scaleform
