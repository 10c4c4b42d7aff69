// Copyright 2026 The pamkit Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "pam/types.hpp"

namespace pam::nn {

using Shape = std::vector<int>;

inline std::int64_t numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::int64_t{1}, std::multiplies<>());
}

inline std::string shape_string(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) s += (i ? "," : "") + std::to_string(shape[i]);
  return s + "]";
}

template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// A value in the computation graph. `grad` is allocated on first use.
template <typename Scalar>
struct Node {
  Shape shape;
  Vec<Scalar> value;
  Vec<Scalar> grad;
  bool requires_grad = false;
  /// Propagates this node's grad into its inputs; receives the node itself so
  /// closures never capture their own output.
  std::function<void(Node&)> backward;

  Vec<Scalar>& grad_buffer() {
    if (grad.size() != value.size()) grad = Vec<Scalar>::Zero(value.size());
    return grad;
  }
  void zero_grad() { grad.resize(0); }
  Scalar* data() { return value.data(); }
  const Scalar* data() const { return value.data(); }
};

template <typename Scalar>
using Var = std::shared_ptr<Node<Scalar>>;

template <typename Scalar>
Var<Scalar> make_var(Shape shape, Vec<Scalar> value, bool requires_grad = false) {
  if (numel(shape) != value.size()) {
    throw InvalidArgument("tensor: value length does not match shape " + shape_string(shape));
  }
  auto v = std::make_shared<Node<Scalar>>();
  v->shape = std::move(shape);
  v->value = std::move(value);
  v->requires_grad = requires_grad;
  return v;
}

template <typename Scalar>
Var<Scalar> zeros(Shape shape, bool requires_grad = false) {
  const auto n = numel(shape);
  return make_var<Scalar>(std::move(shape), Vec<Scalar>::Zero(n), requires_grad);
}

/// Records operations in creation order so `backward` can replay them in
/// reverse. A tape built with `grad_enabled = false` records nothing and all
/// outputs are constants.
template <typename Scalar>
class Tape {
 public:
  explicit Tape(bool grad_enabled = true) : grad_enabled_(grad_enabled) {}

  bool grad_enabled() const { return grad_enabled_; }

  /// Creates an output node. `backward` is kept only when gradients are on
  /// and some input requires them.
  Var<Scalar> record(Shape shape, Vec<Scalar> value, bool any_input_requires_grad,
                     std::function<void(Node<Scalar>&)> backward) {
    auto out = make_var<Scalar>(std::move(shape), std::move(value));
    if (grad_enabled_ && any_input_requires_grad) {
      out->requires_grad = true;
      out->backward = std::move(backward);
      nodes_.push_back(out);
    }
    return out;
  }

  /// Seeds d(root)/d(root) = 1 for a scalar root and runs all recorded
  /// backward closures in reverse order.
  void backward(const Var<Scalar>& root) {
    if (root->value.size() != 1) throw InvalidArgument("backward: root must be a scalar");
    if (!root->requires_grad) return;
    root->grad_buffer().setConstant(Scalar(1));
    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
      Node<Scalar>& n = **it;
      if (n.grad.size() == n.value.size() && n.backward) n.backward(n);
    }
  }

 private:
  bool grad_enabled_;
  std::vector<Var<Scalar>> nodes_;
};

}  // namespace pam::nn
