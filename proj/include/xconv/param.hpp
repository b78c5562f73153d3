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

#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "xconv/autodiff.hpp"
#include "xconv/rng.hpp"
#include "xconv/tensor.hpp"

namespace xconv {

/// A named learnable tensor plus its ADAM moments. Buffers (batch-norm running
/// statistics) use the same record with trainable == false so checkpoints can
/// treat everything uniformly.
struct Parameter {
  std::string name;
  ad::Var node;
  Tensor first_moment;
  Tensor second_moment;
  std::uint64_t step = 0;
  bool trainable = true;

  const Tensor& value() const { return node->value; }
  Tensor& value() { return node->value; }
  std::size_t size() const { return node->value.size(); }
};

/// Owns every parameter of a model, keyed by hierarchical name ("conv1.mlp_x.fc.w").
class ParamStore {
 public:
  ParamStore() = default;
  ParamStore(const ParamStore&) = delete;
  ParamStore& operator=(const ParamStore&) = delete;
  ParamStore(ParamStore&&) = default;
  ParamStore& operator=(ParamStore&&) = default;

  Parameter& create(const std::string& name, Tensor init, bool trainable = true);

  /// Glorot-uniform weight in +-sqrt(6 / (fan_in + fan_out)).
  Parameter& create_glorot(const std::string& name, Shape shape, std::size_t fan_in, std::size_t fan_out,
                           Rng& rng);

  Parameter* find(const std::string& name);
  const Parameter* find(const std::string& name) const;
  Parameter& at(const std::string& name);

  std::vector<Parameter*> all();
  std::vector<const Parameter*> all() const;
  std::vector<Parameter*> trainable();

  /// Number of learnable scalars (buffers excluded).
  std::size_t trainable_count() const;
  /// Learnable scalars whose name starts with `prefix`.
  std::size_t trainable_count(const std::string& prefix) const;

  /// Copies values of every same-named, same-shaped parameter from `other`.
  /// Returns the number of parameters copied.
  std::size_t copy_matching_from(const ParamStore& other);

  void zero_grad();

 private:
  std::vector<std::unique_ptr<Parameter>> params_;
  std::map<std::string, std::size_t> index_;
};

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Bias-corrected ADAM update; clears gradients afterwards. Throws StateError
/// if a trainable parameter has no gradient.
void adam_step(std::span<Parameter* const> params, double lr, const AdamConfig& config = {});

}  // namespace xconv
