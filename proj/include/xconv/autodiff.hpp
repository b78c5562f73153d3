// Copyright (c) 2026 The xconv Authors
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

#include <functional>
#include <memory>
#include <string_view>
#include <vector>

#include "xconv/tensor.hpp"

namespace xconv::ad {

struct Node;
using Var = std::shared_ptr<Node>;

/// One value in a define-by-run graph. A graph is owned by its root: dropping
/// the last Var to the loss frees every intermediate. Parameter nodes outlive
/// graphs and keep accumulating gradient until the optimizer clears it.
struct Node {
  Tensor value;
  Tensor grad;  // empty until materialized
  std::string_view op = "leaf";
  std::vector<Var> parents;
  std::function<void(Node&)> backward_fn;
  bool requires_grad = false;

  bool has_grad() const noexcept { return grad.size() == value.size() && grad.shape() == value.shape(); }
  /// Gradient buffer, zero-initialized on first access.
  Tensor& grad_buffer();
  void zero_grad() { grad = Tensor(); }
};

Var constant(Tensor value);
Var variable(Tensor value);

/// Builds a node whose requires_grad is inherited from `parents`. When no
/// parent needs a gradient the closure and parent links are dropped.
Var make_node(Tensor value, std::string_view op, std::vector<Var> parents,
              std::function<void(Node&)> backward_fn);

/// Seeds d(root)/d(root) = 1 (root must hold a single value) and propagates
/// to every reachable node that requires a gradient.
void backward(const Var& root);

/// When enabled every op checks its output for NaN/Inf and throws NumericError.
void set_check_finite(bool enabled) noexcept;
bool check_finite() noexcept;

}  // namespace xconv::ad
