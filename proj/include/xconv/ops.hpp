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

#include <cstddef>
#include <span>
#include <string>

#include "xconv/autodiff.hpp"
#include "xconv/param.hpp"
#include "xconv/rng.hpp"

// Differentiable primitives. Every function validates shapes eagerly and
// throws DimensionError naming both operands on mismatch.
namespace xconv::ad {

enum class Mode { train, infer };

/// Learnable per-channel affine (scale, shift) plus running statistics.
struct BatchNormState {
  Parameter* scale = nullptr;
  Parameter* shift = nullptr;
  Parameter* running_mean = nullptr;  // buffer
  Parameter* running_var = nullptr;   // buffer
  double momentum = 0.9;
  double epsilon = 1e-5;

  std::size_t channels() const { return scale->size(); }
};

BatchNormState make_batchnorm(ParamStore& store, const std::string& prefix, std::size_t channels,
                              double momentum = 0.9, double epsilon = 1e-5);

// [m x k] x [k x n] -> [m x n]
Var matmul(const Var& a, const Var& b);
// [B x m x k] x [B x k x n] -> [B x m x n]
Var batched_matmul(const Var& a, const Var& b);

Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& x, double factor);
// x[..., C] + bias[C]
Var add_bias(const Var& x, const Var& bias);
Var sum(const Var& x);
Var mean(const Var& x);

Var elu(const Var& x, double alpha = 1.0);

Var reshape(const Var& x, Shape shape);
// [R x C1], [R x C2] -> [R x (C1 + C2)]; rank-1 operands are treated as a single row.
Var concat_cols(const Var& a, const Var& b);
// x[N x C] -> x[idx] of shape [idx.size() x C]; backward scatter-adds.
Var gather_rows(const Var& x, std::span<const std::size_t> idx);

/// F filters per column: out[c*F + f] = sum_r x[r, c] * w[r, c, f].
/// x is [R x C] (result [C*F]) or a batch [B x R x C] (result [B x C*F]).
Var depthwise_matrix_conv(const Var& x, const Var& w);

/// Depthwise stage over the K rows (depth multiplier DM), then a dense map to
/// C2 channels plus bias. f is [K x Cin] or [B x K x Cin]; depthwise_w
/// [K x Cin x DM]; pointwise_w [(Cin*DM) x C2]; bias [C2].
Var separable_conv(const Var& f, const Var& depthwise_w, const Var& pointwise_w, const Var& bias);

// x[B x Cin] * w[Cin x Cout] + b[Cout]
Var fully_connected(const Var& x, const Var& w, const Var& b);

/// Per-channel batch normalization over every row of x[..., C].
/// Training normalizes by batch statistics and updates the running buffers.
Var batchnorm(const Var& x, BatchNormState& state, Mode mode);

/// Mean over rows of -log softmax(logits)[label].
Var softmax_cross_entropy(const Var& logits, std::span<const int> labels);

/// Inverted dropout: survivors scaled by 1/(1-rate). Identity at inference.
Var dropout(const Var& x, double rate, Mode mode, Rng& rng);

/// ceil(c2 / cin), the default depth multiplier.
std::size_t default_depth_multiplier(std::size_t cin, std::size_t c2);

}  // namespace xconv::ad
