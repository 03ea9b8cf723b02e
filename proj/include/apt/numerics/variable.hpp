/*
 * Copyright (c) 2026, The APT Workbench Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "apt/numerics/tensor.hpp"

namespace apt::numerics {

/// One vertex of the reverse-mode graph. Leaves (parameters, inputs) have no
/// parents; op results keep their parents alive until the result is dropped.
template <typename T>
struct Node {
  Tensor<T> value;
  Tensor<T> grad;  // empty until something accumulates into it
  bool requires_grad = false;
  std::string name;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward_fn;

  /// Grad storage, zero-initialised on first use.
  Tensor<T>& grad_buffer() {
    if (grad.empty()) grad = Tensor<T>::zeros_like(value);
    return grad;
  }
};

/// Shared handle to a graph node. Copies alias the same node, so a parameter
/// held by a model and by an optimizer is one object.
template <typename T>
class Var {
 public:
  Var() = default;
  explicit Var(Tensor<T> value, bool requires_grad = false, std::string name = {})
      : node_(std::make_shared<Node<T>>()) {
    node_->value = std::move(value);
    node_->requires_grad = requires_grad;
    node_->name = std::move(name);
  }
  explicit Var(std::shared_ptr<Node<T>> node) : node_(std::move(node)) {}

  explicit operator bool() const noexcept { return static_cast<bool>(node_); }
  bool defined() const noexcept { return static_cast<bool>(node_); }

  const Tensor<T>& value() const { return node_->value; }
  /// Direct write access, used by optimizers and initialisers only.
  Tensor<T>& mutable_value() { return node_->value; }
  const Shape& shape() const { return node_->value.shape(); }

  bool requires_grad() const { return node_->requires_grad; }
  void set_requires_grad(bool on) { node_->requires_grad = on; }

  bool has_grad() const { return !node_->grad.empty(); }
  const Tensor<T>& grad() const { return node_->grad; }
  void zero_grad() { node_->grad = Tensor<T>(); }

  const std::string& name() const { return node_->name; }
  void set_name(std::string name) { node_->name = std::move(name); }

  Node<T>* node() const noexcept { return node_.get(); }
  const std::shared_ptr<Node<T>>& shared() const noexcept { return node_; }

  bool same_node(const Var& other) const noexcept { return node_ == other.node_; }

 private:
  std::shared_ptr<Node<T>> node_;
};

/// Wraps an op result. When no parent needs a gradient the parents and the
/// backward closure are dropped, so frozen sub-graphs cost no tape memory.
template <typename T>
Var<T> make_result(Tensor<T> value, std::vector<Var<T>> parents,
                   std::function<void(Node<T>&)> backward_fn) {
  bool needs_grad = false;
  for (const auto& p : parents) needs_grad = needs_grad || (p && p.requires_grad());
  auto node = std::make_shared<Node<T>>();
  node->value = std::move(value);
  node->requires_grad = needs_grad;
  if (needs_grad) {
    node->parents.reserve(parents.size());
    for (auto& p : parents) node->parents.push_back(p.shared());
    node->backward_fn = std::move(backward_fn);
  }
  return Var<T>(std::move(node));
}

/// Runs reverse accumulation from a scalar root (shape [1]). Gradients are
/// added into every reachable node with requires_grad set.
template <typename T>
void backward(const Var<T>& root);

extern template void backward<float>(const Var<float>&);
extern template void backward<double>(const Var<double>&);

}  // namespace apt::numerics
