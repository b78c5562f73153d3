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

#include "xconv/param.hpp"

#include <algorithm>
#include <cmath>

#include "xconv/errors.hpp"

namespace xconv {

Parameter& ParamStore::create(const std::string& name, Tensor init, bool trainable) {
  if (index_.count(name)) throw StateError("duplicate parameter name '" + name + "'");
  auto p = std::make_unique<Parameter>();
  p->name = name;
  p->first_moment = Tensor(init.shape(), 0.0);
  p->second_moment = Tensor(init.shape(), 0.0);
  p->node = trainable ? ad::variable(std::move(init)) : ad::constant(std::move(init));
  p->trainable = trainable;
  index_.emplace(name, params_.size());
  params_.push_back(std::move(p));
  return *params_.back();
}

Parameter& ParamStore::create_glorot(const std::string& name, Shape shape, std::size_t fan_in,
                                     std::size_t fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(std::max<std::size_t>(1, fan_in + fan_out)));
  Tensor init(std::move(shape));
  for (auto& v : init.data()) v = rng.uniform(-limit, limit);
  return create(name, std::move(init));
}

Parameter* ParamStore::find(const std::string& name) {
  auto it = index_.find(name);
  return it == index_.end() ? nullptr : params_[it->second].get();
}

const Parameter* ParamStore::find(const std::string& name) const {
  auto it = index_.find(name);
  return it == index_.end() ? nullptr : params_[it->second].get();
}

Parameter& ParamStore::at(const std::string& name) {
  Parameter* p = find(name);
  if (!p) throw StateError("no parameter named '" + name + "'");
  return *p;
}

std::vector<Parameter*> ParamStore::all() {
  std::vector<Parameter*> out;
  for (auto& p : params_) out.push_back(p.get());
  return out;
}

std::vector<const Parameter*> ParamStore::all() const {
  std::vector<const Parameter*> out;
  for (const auto& p : params_) out.push_back(p.get());
  return out;
}

std::vector<Parameter*> ParamStore::trainable() {
  std::vector<Parameter*> out;
  for (auto& p : params_) {
    if (p->trainable) out.push_back(p.get());
  }
  return out;
}

std::size_t ParamStore::trainable_count() const { return trainable_count(""); }

std::size_t ParamStore::trainable_count(const std::string& prefix) const {
  std::size_t n = 0;
  for (const auto& p : params_) {
    if (p->trainable && p->name.compare(0, prefix.size(), prefix) == 0) n += p->size();
  }
  return n;
}

std::size_t ParamStore::copy_matching_from(const ParamStore& other) {
  std::size_t copied = 0;
  for (auto& p : params_) {
    const Parameter* src = other.find(p->name);
    if (src && src->value().shape() == p->value().shape()) {
      p->value() = src->value();
      ++copied;
    }
  }
  return copied;
}

void ParamStore::zero_grad() {
  for (auto& p : params_) p->node->zero_grad();
}

void adam_step(std::span<Parameter* const> params, double lr, const AdamConfig& config) {
  for (Parameter* p : params) {
    if (p->trainable && !p->node->has_grad()) {
      throw StateError("parameter '" + p->name + "' has no gradient; run backward() before adam_step");
    }
  }
  for (Parameter* p : params) {
    if (!p->trainable) continue;
    ++p->step;
    const double t = static_cast<double>(p->step);
    const double correction1 = 1.0 - std::pow(config.beta1, t);
    const double correction2 = 1.0 - std::pow(config.beta2, t);
    auto value = p->value().data();
    auto grad = p->node->grad.data();
    auto m = p->first_moment.data();
    auto v = p->second_moment.data();
    for (std::size_t i = 0; i < value.size(); ++i) {
      m[i] = config.beta1 * m[i] + (1.0 - config.beta1) * grad[i];
      v[i] = config.beta2 * v[i] + (1.0 - config.beta2) * grad[i] * grad[i];
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      value[i] -= lr * m_hat / (std::sqrt(v_hat) + config.epsilon);
    }
    p->node->zero_grad();
  }
}

}  // namespace xconv
