/* Copyright 2026 The tacmap Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#pragma once

#include <functional>
#include <memory>
#include <utility>
#include <vector>

#include "tacmap/nn/tensor.hpp"

namespace tacmap::nn {

// Global (per-thread) switch for graph recording. Inference runs inside a
// NoGradGuard so intermediate activations are not retained.
class GradMode {
 public:
  static bool enabled() noexcept { return enabled_; }
  static void set_enabled(bool on) noexcept { enabled_ = on; }

 private:
  static thread_local bool enabled_;
};

class NoGradGuard {
 public:
  NoGradGuard() : previous_(GradMode::enabled()) { GradMode::set_enabled(false); }
  ~NoGradGuard() { GradMode::set_enabled(previous_); }
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

template <typename T>
struct Node {
  BasicTensor<T> value;
  BasicTensor<T> grad;  // empty until something flows into it
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  // Reads this->grad and accumulates into the parents' grads.
  std::function<void(Node&)> backward;

  BasicTensor<T>& EnsureGrad() {
    if (grad.empty()) grad = BasicTensor<T>(value.shape(), T(0));
    return grad;
  }
};

// Handle to a node of the reverse-mode tape. Copies share the node.
template <typename T>
class Var {
 public:
  Var() = default;

  static Var Leaf(BasicTensor<T> value, bool requires_grad = false) {
    auto node = std::make_shared<Node<T>>();
    node->value = std::move(value);
    node->requires_grad = requires_grad;
    return Var(std::move(node));
  }

  // Result of an op. Parents and the backward rule are kept only when
  // recording is on and some parent needs a gradient.
  static Var FromOp(BasicTensor<T> value, std::vector<Var> parents, std::function<void(Node<T>&)> backward) {
    auto node = std::make_shared<Node<T>>();
    node->value = std::move(value);
    if (GradMode::enabled()) {
      for (const Var& p : parents) {
        if (p.requires_grad()) node->requires_grad = true;
      }
      if (node->requires_grad) {
        node->parents.reserve(parents.size());
        for (const Var& p : parents) node->parents.push_back(p.node_);
        node->backward = std::move(backward);
      }
    }
    return Var(std::move(node));
  }

  bool defined() const noexcept { return static_cast<bool>(node_); }
  bool requires_grad() const noexcept { return node_ && node_->requires_grad; }

  const BasicTensor<T>& value() const { return node_->value; }
  BasicTensor<T>& mutable_value() { return node_->value; }
  const Shape& shape() const { return node_->value.shape(); }

  bool has_grad() const { return node_ && !node_->grad.empty(); }
  const BasicTensor<T>& grad() const { return node_->EnsureGrad(); }
  BasicTensor<T>& mutable_grad() { return node_->EnsureGrad(); }
  void ZeroGrad() {
    if (node_ && !node_->grad.empty()) node_->grad.Fill(T(0));
  }

  Node<T>* node() const noexcept { return node_.get(); }

  // Reverse sweep from this node, seeding d(this)/d(this) = 1 elementwise.
  void Backward();

 private:
  explicit Var(std::shared_ptr<Node<T>> node) : node_(std::move(node)) {}

  std::shared_ptr<Node<T>> node_;
};

extern template class Var<float>;
extern template class Var<double>;

}  // namespace tacmap::nn
