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
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "xconv/ops.hpp"
#include "xconv/param.hpp"

namespace xconv {

enum class Sampler { random, fps };

/// Full operator, or the baseline with the learned K x K transform removed.
enum class Variant { full, ablated };

std::size_t default_c_delta(std::size_t c_in, std::size_t c_out);

/// Hyperparameters of one X-Conv layer.
struct XConvSpec {
  std::size_t k = 8;      // neighbors per representative point
  std::size_t d = 1;      // dilation: k drawn from the k*d nearest
  std::size_t n_out = 0;  // representative points; 0 keeps every point of the previous level
  std::size_t c_in = 0;   // channels of the incoming features (0: coordinates only)
  std::size_t c_out = 32;
  std::size_t c_delta = 0;  // 0 selects default_c_delta(c_in, c_out)
  bool with_global = false;
  Sampler sampler = Sampler::random;

  std::size_t lifted_channels() const { return c_delta ? c_delta : default_c_delta(c_in, c_out); }
  /// Width of F_*: lifted coordinates plus incoming features.
  std::size_t star_channels() const { return lifted_channels() + c_in; }
  std::size_t depth_multiplier() const;
  std::size_t global_channels() const;
  /// c_out, plus the global lift when enabled.
  std::size_t output_channels() const { return c_out + (with_global ? global_channels() : 0); }

  void validate() const;
};

/// Learnable scalars per sub-network. `mlp_x_depthwise` and `sep_conv_core`
/// isolate the two depthwise stages of the transform MLP and the separable
/// convolution's depthwise + pointwise weights (no bias, no batch norm).
struct ParamCount {
  std::size_t mlp_delta = 0;
  std::size_t mlp_x = 0;
  std::size_t mlp_x_depthwise = 0;
  std::size_t sep_conv = 0;
  std::size_t sep_conv_core = 0;
  std::size_t mlp_g = 0;
  std::size_t total = 0;
};

ParamCount count_params(const XConvSpec& spec, std::size_t dim, Variant variant = Variant::full);

/// B neighborhoods of K points each, already moved into the local frame of
/// their representative point.
struct NeighborhoodBatch {
  std::size_t count = 0;
  std::size_t k = 0;
  Tensor local_coords;                    // [B*K x Dim]
  std::vector<std::size_t> feature_rows;  // B*K rows of the incoming feature matrix
  Tensor global_coords;                   // [B x Dim], normalized; read only with_global
};

/// Intermediate values of one forward pass, for analysis and tests.
struct XConvTrace {
  ad::Var f_star;  // [B x K x C*]
  ad::Var x;       // [B x K x K]; null for the ablated pipeline
  ad::Var f_x;     // [B x K x C*]; equals f_star for the ablated pipeline
};

/// FC -> ELU -> BN.
struct DenseBlock {
  Parameter* weight = nullptr;
  Parameter* bias = nullptr;
  ad::BatchNormState bn;
};

/// One X-Conv layer and its parameters, registered in a ParamStore under `prefix`.
class XConvLayer {
 public:
  XConvLayer(ParamStore& store, const std::string& prefix, const XConvSpec& spec, std::size_t dim,
             Variant variant, Rng& init_rng);

  const XConvSpec& spec() const { return spec_; }
  std::size_t dim() const { return dim_; }
  Variant variant() const { return variant_; }
  const std::string& prefix() const { return prefix_; }

  /// Batched operator. `features` is [rows x c_in] (null when c_in == 0);
  /// returns [B x output_channels()].
  ad::Var forward(const NeighborhoodBatch& batch, const ad::Var& features, ad::Mode mode,
                  XConvTrace* trace = nullptr);
  /// Same, with the K x K transform supplied as [B x K x K] instead of learned.
  ad::Var forward_with_x(const NeighborhoodBatch& batch, const ad::Var& features, const ad::Var& x,
                         ad::Mode mode, XConvTrace* trace = nullptr);
  /// Baseline pipeline on this layer's parameters: F_p = Conv(K, F_*).
  ad::Var forward_ablated(const NeighborhoodBatch& batch, const ad::Var& features, ad::Mode mode,
                          XConvTrace* trace = nullptr);

  /// MLP_delta applied to every row: [R x Dim] -> [R x c_delta].
  ad::Var lift(const Tensor& local_coords, ad::Mode mode);
  /// [B*K x Dim] -> [B x K x K].
  ad::Var learn_x(const Tensor& local_coords, std::size_t batch, ad::Mode mode);

  /// Test hook: zero every transform weight and bias and set the last batch
  /// norm so the learned matrix is exactly the identity.
  void force_identity_x();

 private:
  enum class XSource { learned, given, none };
  ad::Var run(const NeighborhoodBatch& batch, const ad::Var& features, ad::Mode mode, XSource source,
              const ad::Var& given_x, XConvTrace* trace);
  DenseBlock make_dense(ParamStore& store, const std::string& name, std::size_t in, std::size_t out, Rng& rng);
  ad::Var apply(DenseBlock& block, const ad::Var& x, ad::Mode mode, bool activate = true);

  XConvSpec spec_;
  std::size_t dim_;
  Variant variant_;
  std::string prefix_;

  DenseBlock delta1_, delta2_;
  // transform MLP (full variant only)
  DenseBlock x_fc_;
  Parameter* x_dc1_ = nullptr;
  ad::BatchNormState x_bn1_;
  Parameter* x_dc2_ = nullptr;
  ad::BatchNormState x_bn2_;
  // separable convolution
  Parameter* sep_depthwise_ = nullptr;
  Parameter* sep_pointwise_ = nullptr;
  Parameter* sep_bias_ = nullptr;
  ad::BatchNormState sep_bn_;
  // global position lift
  std::optional<DenseBlock> global1_, global2_;
};

/// Single-neighborhood forms of the operator.
ad::Var lift_coords(XConvLayer& layer, const Tensor& p_local, ad::Mode mode);
/// [K x Dim] -> [K x K].
ad::Var learn_x(XConvLayer& layer, const Tensor& p_local, ad::Mode mode);

/// Runs the operator for representative point `rep` with neighbors `neighbor_coords`
/// [K x Dim] and features [K x c_in] (null when c_in == 0). Returns [output_channels()].
/// `global_coord` feeds the global lift; it defaults to `rep`.
ad::Var xconv_forward(XConvLayer& layer, std::span<const double> rep, const Tensor& neighbor_coords,
                      const ad::Var& neighbor_features, ad::Mode mode, std::span<const double> global_coord = {},
                      XConvTrace* trace = nullptr);
ad::Var xconv_forward_ablated(XConvLayer& layer, std::span<const double> rep, const Tensor& neighbor_coords,
                              const ad::Var& neighbor_features, ad::Mode mode,
                              std::span<const double> global_coord = {}, XConvTrace* trace = nullptr);
/// Operator with a caller-supplied [K x K] transform.
ad::Var xconv_forward_with_x(XConvLayer& layer, std::span<const double> rep, const Tensor& neighbor_coords,
                             const ad::Var& neighbor_features, const ad::Var& x, ad::Mode mode,
                             std::span<const double> global_coord = {});

}  // namespace xconv
