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
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "xconv/geometry.hpp"
#include "xconv/xconv.hpp"

namespace xconv {

enum class Task { classification, segmentation };

/// A decoder layer. Its representative points are the points of a level of
/// the encoder: `mirror` is a conv layer index, or -1 for the input points.
struct DeconvSpec {
  XConvSpec layer;
  int mirror = -1;
};

struct NetworkSpec {
  Task task = Task::classification;
  std::size_t dim = 3;
  std::size_t input_channels = 0;
  std::size_t input_points = 0;  // nominal cloud size; sizes the levels and multipass chunks
  std::vector<XConvSpec> conv;
  std::vector<DeconvSpec> deconv;  // segmentation only
  bool skip_links = true;
  std::vector<std::size_t> fc_widths;  // hidden FC -> ELU -> BN blocks of the head
  bool dropout = true;                 // before the last FC, training only
  double dropout_rate = 0.5;
  std::size_t num_classes = 0;

  /// Fills every layer's c_in from the layer below it. Idempotent.
  void resolve();
  /// Structural checks against the nominal point counts; throws ConfigError.
  /// Calls resolve() first on a copy, so the spec itself need not be resolved.
  void validate() const;
  /// Nominal point count of each level: [0] the input, [i + 1] conv layer i.
  std::vector<std::size_t> level_points() const;
  /// Channels of each encoder level (after the conv layer, before any skip concatenation).
  std::vector<std::size_t> level_channels() const;
  /// Feature width entering the head.
  std::size_t head_channels() const;
};

/// Rejects a spec whose last conv layer is not a valid subvolume head:
/// the global lift must be on and the receptive field must stay below 1.
NetworkSpec subvolume_head(const NetworkSpec& spec);

/// Outputs of one network level for a batch of clouds. Rows of cloud c are
/// [offsets[c], offsets[c + 1]).
struct LayerActivation {
  Tensor rep_coords;  // [rows x Dim]
  ad::Var features;   // [rows x C]; null when C == 0
  std::vector<std::size_t> offsets;
  std::vector<Neighborhood> neighborhoods;  // per row; neighbor indices are local to the cloud's previous level
};

struct ForwardResult {
  ad::Var logits;                   // [rows x num_classes]
  std::vector<std::size_t> offsets;  // logits rows of each cloud
  std::vector<LayerActivation> levels;  // [0] input, then one per conv and deconv layer in order
};

/// A PointCNN: conv stack, optional deconv stack with skip links, and an FC head.
class PointCNN {
 public:
  PointCNN(NetworkSpec spec, Variant variant, std::uint64_t seed);
  PointCNN(const PointCNN&) = delete;
  PointCNN& operator=(const PointCNN&) = delete;

  const NetworkSpec& spec() const { return spec_; }
  Variant variant() const { return variant_; }
  ParamStore& params() { return store_; }
  const ParamStore& params() const { return store_; }
  std::size_t conv_count() const { return conv_.size(); }
  XConvLayer& conv_layer(std::size_t i) { return *conv_.at(i); }
  std::size_t deconv_count() const { return deconv_.size(); }
  XConvLayer& deconv_layer(std::size_t i) { return *deconv_.at(i); }

  /// Classification: logits for every final representative point.
  /// Segmentation: logits for every input point.
  ForwardResult forward(std::span<const PointSet> clouds, ad::Mode mode, Rng& rng);

 private:
  LayerActivation run_layer(XConvLayer& layer, const LayerActivation& prev, const LayerActivation* reps,
                            std::span<const double> radii, ad::Mode mode, Rng& rng);
  ad::Var head(const ad::Var& features, ad::Mode mode, Rng& rng);

  NetworkSpec spec_;
  Variant variant_;
  ParamStore store_;
  std::vector<std::unique_ptr<XConvLayer>> conv_;
  std::vector<std::unique_ptr<XConvLayer>> deconv_;
  std::vector<DenseBlock> fc_;
  Parameter* out_weight_ = nullptr;
  Parameter* out_bias_ = nullptr;
};

ForwardResult forward_classify(PointCNN& net, std::span<const PointSet> clouds, ad::Mode mode, Rng& rng);
ForwardResult forward_segment(PointCNN& net, std::span<const PointSet> clouds, ad::Mode mode, Rng& rng);

/// Mean cross-entropy over all logits rows: each representative point carries
/// its cloud's label (classification) or each point its own (segmentation).
ad::Var network_loss(const ForwardResult& result, std::span<const PointSet> clouds, Task task);

/// Per-cloud mean of the representative-point logits, [clouds x num_classes].
Tensor average_logits(const ForwardResult& result);

/// Row-wise argmax.
std::vector<int> argmax_rows(const Tensor& logits);

struct MultipassPrediction {
  Tensor logits;                    // [N x num_classes], mean over the passes that saw each point
  std::vector<std::size_t> counts;  // appearances per point
};

/// Segmentation inference in `r` passes. Each pass shuffles the cloud and splits
/// it into chunks of the nominal input size (the last chunk topped up with
/// other points), so every point is evaluated at least r times.
MultipassPrediction predict_multipass(PointCNN& net, const PointSet& cloud, std::size_t r, Rng& rng);

}  // namespace xconv
