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

#include "xconv/xconv.hpp"

#include <algorithm>
#include <numeric>

#include "xconv/errors.hpp"
#include "xconv/geometry.hpp"

namespace xconv {

using ad::Mode;
using ad::Var;

std::size_t default_c_delta(std::size_t c_in, std::size_t c_out) {
  return std::max<std::size_t>(1, (c_in > 0 ? c_in : c_out) / 4);
}

std::size_t XConvSpec::depth_multiplier() const { return ad::default_depth_multiplier(star_channels(), c_out); }

std::size_t XConvSpec::global_channels() const { return std::max<std::size_t>(1, c_out / 4); }

void XConvSpec::validate() const {
  if (k < 1) throw ConfigError("x-conv: k must be >= 1");
  if (d < 1) throw ConfigError("x-conv: dilation must be >= 1");
  if (c_out < 1) throw ConfigError("x-conv: c_out must be >= 1");
}

ParamCount count_params(const XConvSpec& spec, std::size_t dim, Variant variant) {
  auto dense = [](std::size_t in, std::size_t out) { return in * out + out + 2 * out; };
  const std::size_t k = spec.k, cd = spec.lifted_channels(), cs = spec.star_channels();
  const std::size_t dm = spec.depth_multiplier();
  ParamCount c;
  c.mlp_delta = dense(dim, cd) + dense(cd, cd);
  if (variant == Variant::full) {
    c.mlp_x_depthwise = 2 * k * k * k;
    c.mlp_x = dense(dim * k, k * k) + c.mlp_x_depthwise + 2 * (2 * k * k);
  }
  c.sep_conv_core = k * cs * dm + cs * dm * spec.c_out;
  c.sep_conv = c.sep_conv_core + spec.c_out + 2 * spec.c_out;
  if (spec.with_global) {
    const std::size_t cg = spec.global_channels();
    c.mlp_g = dense(dim, cg) + dense(cg, cg);
  }
  c.total = c.mlp_delta + c.mlp_x + c.sep_conv + c.mlp_g;
  return c;
}

XConvLayer::XConvLayer(ParamStore& store, const std::string& prefix, const XConvSpec& spec, std::size_t dim,
                       Variant variant, Rng& rng)
    : spec_(spec), dim_(dim), variant_(variant), prefix_(prefix) {
  spec_.validate();
  if (dim != 2 && dim != 3) throw ConfigError("x-conv: point dimension must be 2 or 3");
  const std::size_t k = spec_.k, cd = spec_.lifted_channels(), cs = spec_.star_channels();
  const std::size_t dm = spec_.depth_multiplier();

  delta1_ = make_dense(store, prefix + ".mlp_delta.fc1", dim, cd, rng);
  delta2_ = make_dense(store, prefix + ".mlp_delta.fc2", cd, cd, rng);

  if (variant == Variant::full) {
    x_fc_ = make_dense(store, prefix + ".mlp_x.fc", dim * k, k * k, rng);
    x_dc1_ = &store.create_glorot(prefix + ".mlp_x.dc1.w", Shape{k, k, k}, k, k, rng);
    x_bn1_ = ad::make_batchnorm(store, prefix + ".mlp_x.dc1.bn", k * k);
    x_dc2_ = &store.create_glorot(prefix + ".mlp_x.dc2.w", Shape{k, k, k}, k, k, rng);
    x_bn2_ = ad::make_batchnorm(store, prefix + ".mlp_x.dc2.bn", k * k);
  }

  sep_depthwise_ = &store.create_glorot(prefix + ".conv.depthwise", Shape{k, cs, dm}, k, dm, rng);
  sep_pointwise_ = &store.create_glorot(prefix + ".conv.pointwise", Shape{cs * dm, spec_.c_out}, cs * dm,
                                        spec_.c_out, rng);
  sep_bias_ = &store.create(prefix + ".conv.bias", Tensor(Shape{spec_.c_out}));
  sep_bn_ = ad::make_batchnorm(store, prefix + ".conv.bn", spec_.c_out);

  if (spec_.with_global) {
    const std::size_t cg = spec_.global_channels();
    global1_ = make_dense(store, prefix + ".mlp_g.fc1", dim, cg, rng);
    global2_ = make_dense(store, prefix + ".mlp_g.fc2", cg, cg, rng);
  }
}

DenseBlock XConvLayer::make_dense(ParamStore& store, const std::string& name, std::size_t in, std::size_t out,
                                  Rng& rng) {
  DenseBlock b;
  b.weight = &store.create_glorot(name + ".w", Shape{in, out}, in, out, rng);
  b.bias = &store.create(name + ".b", Tensor(Shape{out}));
  b.bn = ad::make_batchnorm(store, name + ".bn", out);
  return b;
}

Var XConvLayer::apply(DenseBlock& block, const Var& x, Mode mode, bool activate) {
  Var h = ad::fully_connected(x, block.weight->node, block.bias->node);
  if (activate) h = ad::elu(h);
  return ad::batchnorm(h, block.bn, mode);
}

Var XConvLayer::lift(const Tensor& local_coords, Mode mode) {
  if (local_coords.rank() != 2 || local_coords.dim(1) != dim_) {
    throw DimensionError("lift: expected [R x " + std::to_string(dim_) + "] coordinates, got " +
                         shape_str(local_coords.shape()));
  }
  Var x = ad::constant(local_coords);
  return apply(delta2_, apply(delta1_, x, mode), mode);
}

Var XConvLayer::learn_x(const Tensor& local_coords, std::size_t batch, Mode mode) {
  if (variant_ != Variant::full) throw StateError("learn_x on an ablated layer");
  const std::size_t k = spec_.k;
  if (local_coords.size() != batch * k * dim_) {
    throw DimensionError("learn_x: coordinates " + shape_str(local_coords.shape()) + " do not hold " +
                         std::to_string(batch) + " neighborhoods of " + std::to_string(k) + " points");
  }
  // Each neighborhood's K x Dim block flattened point-major into one row.
  Var flat = ad::constant(local_coords.reshaped(Shape{batch, k * dim_}));
  Var h = apply(x_fc_, flat, mode);                                       // [B x K*K]
  h = ad::depthwise_matrix_conv(ad::reshape(h, Shape{batch, k, k}), x_dc1_->node);
  h = ad::batchnorm(ad::elu(h), x_bn1_, mode);
  h = ad::depthwise_matrix_conv(ad::reshape(h, Shape{batch, k, k}), x_dc2_->node);
  h = ad::batchnorm(h, x_bn2_, mode);
  return ad::reshape(h, Shape{batch, k, k});
}

Var XConvLayer::forward(const NeighborhoodBatch& batch, const Var& features, Mode mode, XConvTrace* trace) {
  return run(batch, features, mode, variant_ == Variant::full ? XSource::learned : XSource::none, nullptr, trace);
}

Var XConvLayer::forward_with_x(const NeighborhoodBatch& batch, const Var& features, const Var& x, Mode mode,
                               XConvTrace* trace) {
  return run(batch, features, mode, XSource::given, x, trace);
}

Var XConvLayer::forward_ablated(const NeighborhoodBatch& batch, const Var& features, Mode mode,
                                XConvTrace* trace) {
  return run(batch, features, mode, XSource::none, nullptr, trace);
}

Var XConvLayer::run(const NeighborhoodBatch& batch, const Var& features, Mode mode, XSource source,
                    const Var& given_x, XConvTrace* trace) {
  const std::size_t b = batch.count, k = spec_.k, cs = spec_.star_channels();
  if (batch.k != k) {
    throw ValidationError("x-conv: neighborhood has " + std::to_string(batch.k) + " points, layer expects k=" +
                          std::to_string(k));
  }
  if (b == 0) throw ValidationError("x-conv: empty neighborhood batch");
  if (batch.local_coords.rank() != 2 || batch.local_coords.dim(0) != b * k || batch.local_coords.dim(1) != dim_) {
    throw DimensionError("x-conv: local coordinates " + shape_str(batch.local_coords.shape()) + " for " +
                         std::to_string(b) + " x " + std::to_string(k) + " points of dimension " +
                         std::to_string(dim_));
  }
  const std::size_t given_channels =
      features && features->value.rank() == 2 ? features->value.dim(1) : 0;
  if (given_channels != spec_.c_in) {
    throw ValidationError("x-conv: features have " + std::to_string(given_channels) + " channels, layer expects c_in=" +
                          std::to_string(spec_.c_in));
  }

  // lines 1-3: local frame (done by the caller), lift, concatenate
  Var f_star = lift(batch.local_coords, mode);
  if (spec_.c_in > 0) {
    if (batch.feature_rows.size() != b * k) throw DimensionError("x-conv: feature row list has the wrong length");
    f_star = ad::concat_cols(f_star, ad::gather_rows(features, batch.feature_rows));
  }
  f_star = ad::reshape(f_star, Shape{b, k, cs});

  // lines 4-5: learn X and weight/permute F_*
  Var x, f_x = f_star;
  if (source == XSource::learned) {
    x = learn_x(batch.local_coords, b, mode);
  } else if (source == XSource::given) {
    x = given_x;
    if (!x || x->value.shape() != Shape{b, k, k}) {
      throw DimensionError("x-conv: supplied transform must be " + shape_str(Shape{b, k, k}));
    }
  }
  if (x) f_x = ad::batched_matmul(x, f_star);

  // line 6: separable convolution over the K rows
  Var out = ad::separable_conv(f_x, sep_depthwise_->node, sep_pointwise_->node, sep_bias_->node);
  out = ad::batchnorm(ad::elu(out), sep_bn_, mode);

  if (spec_.with_global) {
    if (batch.global_coords.shape() != Shape{b, dim_}) {
      throw DimensionError("x-conv: global coordinates must be " + shape_str(Shape{b, dim_}));
    }
    Var g = apply(*global2_, apply(*global1_, ad::constant(batch.global_coords), mode), mode);
    out = ad::concat_cols(out, g);
  }

  if (trace) {
    trace->f_star = f_star;
    trace->x = x;
    trace->f_x = f_x;
  }
  return out;
}

void XConvLayer::force_identity_x() {
  if (variant_ != Variant::full) throw StateError("force_identity_x on an ablated layer");
  for (Parameter* p : {x_fc_.weight, x_fc_.bias, x_dc1_, x_dc2_}) p->value().fill(0.0);
  const std::size_t k = spec_.k;
  Tensor& shift = x_bn2_.shift->value();
  shift.fill(0.0);
  for (std::size_t i = 0; i < k; ++i) shift[i * k + i] = 1.0;
  x_bn2_.running_mean->value().fill(0.0);
}

namespace {

NeighborhoodBatch single_batch(const XConvLayer& layer, std::span<const double> rep, const Tensor& neighbor_coords,
                               std::span<const double> global_coord) {
  NeighborhoodBatch batch;
  batch.count = 1;
  batch.k = neighbor_coords.rank() == 2 ? neighbor_coords.dim(0) : 0;
  if (batch.k != layer.spec().k) {
    throw ValidationError("xconv_forward: got " + std::to_string(batch.k) + " neighbors, layer expects k=" +
                          std::to_string(layer.spec().k));
  }
  batch.local_coords = localize(neighbor_coords, rep);
  batch.feature_rows.resize(batch.k);
  std::iota(batch.feature_rows.begin(), batch.feature_rows.end(), 0);
  std::span<const double> g = global_coord.empty() ? rep : global_coord;
  batch.global_coords = Tensor(Shape{1, g.size()}, std::vector<double>(g.begin(), g.end()));
  return batch;
}

Var squeeze(const Var& v) { return ad::reshape(v, Shape{v->value.size()}); }

}  // namespace

Var lift_coords(XConvLayer& layer, const Tensor& p_local, Mode mode) { return layer.lift(p_local, mode); }

Var learn_x(XConvLayer& layer, const Tensor& p_local, Mode mode) {
  const std::size_t k = layer.spec().k;
  return ad::reshape(layer.learn_x(p_local, 1, mode), Shape{k, k});
}

Var xconv_forward(XConvLayer& layer, std::span<const double> rep, const Tensor& neighbor_coords,
                  const Var& neighbor_features, Mode mode, std::span<const double> global_coord, XConvTrace* trace) {
  return squeeze(layer.forward(single_batch(layer, rep, neighbor_coords, global_coord), neighbor_features, mode, trace));
}

Var xconv_forward_ablated(XConvLayer& layer, std::span<const double> rep, const Tensor& neighbor_coords,
                          const Var& neighbor_features, Mode mode, std::span<const double> global_coord,
                          XConvTrace* trace) {
  return squeeze(
      layer.forward_ablated(single_batch(layer, rep, neighbor_coords, global_coord), neighbor_features, mode, trace));
}

Var xconv_forward_with_x(XConvLayer& layer, std::span<const double> rep, const Tensor& neighbor_coords,
                         const Var& neighbor_features, const Var& x, Mode mode, std::span<const double> global_coord) {
  const std::size_t k = layer.spec().k;
  Var x3 = x ? ad::reshape(x, Shape{1, k, k}) : x;
  return squeeze(
      layer.forward_with_x(single_batch(layer, rep, neighbor_coords, global_coord), neighbor_features, x3, mode));
}

}  // namespace xconv
