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

#include "xconv/network.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "xconv/errors.hpp"

namespace xconv {

using ad::Mode;
using ad::Var;

namespace {

std::size_t level_index(int mirror) { return static_cast<std::size_t>(mirror + 1); }

// True when every conv layer up to and including `level - 1` keeps all of its
// input points in order, so the level's points are the input cloud itself.
bool is_input_level(const NetworkSpec& spec, std::size_t level) {
  for (std::size_t i = 0; i < level; ++i) {
    if (spec.conv[i].n_out != 0) return false;
  }
  return true;
}

std::string layer_name(const char* kind, std::size_t i) { return std::string(kind) + std::to_string(i); }

}  // namespace

void NetworkSpec::resolve() {
  std::size_t c = input_channels;
  for (auto& l : conv) {
    l.c_in = c;
    c = l.output_channels();
  }
  const std::vector<std::size_t> enc = level_channels();
  for (auto& dl : deconv) {
    dl.layer.c_in = c;
    c = dl.layer.output_channels();
    if (skip_links && dl.mirror >= -1 && level_index(dl.mirror) < enc.size()) c += enc[level_index(dl.mirror)];
  }
}

std::vector<std::size_t> NetworkSpec::level_points() const {
  std::vector<std::size_t> pts{input_points};
  for (const auto& l : conv) pts.push_back(l.n_out == 0 ? pts.back() : std::min(l.n_out, pts.back()));
  return pts;
}

std::vector<std::size_t> NetworkSpec::level_channels() const {
  std::vector<std::size_t> ch{input_channels};
  for (const auto& l : conv) ch.push_back(l.output_channels());
  return ch;
}

std::size_t NetworkSpec::head_channels() const {
  NetworkSpec r = *this;
  r.resolve();
  if (r.deconv.empty()) return r.conv.empty() ? input_channels : r.conv.back().output_channels();
  std::size_t c = r.deconv.back().layer.output_channels();
  if (r.skip_links) c += r.level_channels()[level_index(r.deconv.back().mirror)];
  return c;
}

void NetworkSpec::validate() const {
  NetworkSpec s = *this;
  s.resolve();
  if (s.dim != 2 && s.dim != 3) throw ConfigError("network: dim must be 2 or 3");
  if (s.num_classes < 1) throw ConfigError("network: num_classes must be >= 1");
  if (s.input_points < 1) throw ConfigError("network: input_points must be >= 1");
  if (s.conv.empty()) throw ConfigError("network: at least one conv layer is required");
  if (!(s.dropout_rate >= 0.0 && s.dropout_rate < 1.0)) throw ConfigError("network: dropout_rate must be in [0, 1)");
  for (std::size_t w : s.fc_widths) {
    if (w < 1) throw ConfigError("network: fc widths must be >= 1");
  }

  const std::vector<std::size_t> pts = s.level_points();
  for (std::size_t i = 0; i < s.conv.size(); ++i) {
    const XConvSpec& l = s.conv[i];
    const std::string name = layer_name("conv", i);
    l.validate();
    if (l.n_out > pts[i]) {
      throw ConfigError(name + ": n_out=" + std::to_string(l.n_out) + " exceeds the " + std::to_string(pts[i]) +
                        " points of the previous level");
    }
    if (l.k * l.d > pts[i]) {
      throw ConfigError(name + ": k*d=" + std::to_string(l.k * l.d) + " exceeds the " + std::to_string(pts[i]) +
                        " points of the previous level");
    }
    if (l.with_global && receptive_field(l.k, l.d, pts[i]) >= 1.0) {
      throw ConfigError(name + ": the global lift needs a receptive field below 1, got k*d/n_prev=" +
                        std::to_string(static_cast<double>(l.k * l.d) / static_cast<double>(pts[i])));
    }
  }

  if (s.task == Task::classification) {
    if (!s.deconv.empty()) throw ConfigError("network: deconv layers are only valid for segmentation");
    return;
  }
  std::size_t prev = pts.back();
  for (std::size_t j = 0; j < s.deconv.size(); ++j) {
    const DeconvSpec& dl = s.deconv[j];
    const std::string name = layer_name("deconv", j);
    dl.layer.validate();
    if (dl.mirror < -1 || dl.mirror >= static_cast<int>(s.conv.size())) {
      throw ConfigError(name + ": mirror " + std::to_string(dl.mirror) + " is not a conv layer");
    }
    const std::size_t target = pts[level_index(dl.mirror)];
    if (dl.layer.n_out != 0 && dl.layer.n_out != target) {
      throw ConfigError(name + ": n_out=" + std::to_string(dl.layer.n_out) + " differs from the mirrored level's " +
                        std::to_string(target) + " points");
    }
    if (target < prev) throw ConfigError(name + ": point counts must not decrease along the deconv stack");
    if (dl.layer.k * dl.layer.d > prev) {
      throw ConfigError(name + ": k*d=" + std::to_string(dl.layer.k * dl.layer.d) + " exceeds the " +
                        std::to_string(prev) + " points of the previous level");
    }
    if (dl.layer.with_global && receptive_field(dl.layer.k, dl.layer.d, prev) >= 1.0) {
      throw ConfigError(name + ": the global lift needs a receptive field below 1");
    }
    prev = target;
  }
  const std::size_t final_level = s.deconv.empty() ? s.conv.size() : level_index(s.deconv.back().mirror);
  if (!is_input_level(s, final_level)) {
    throw ConfigError("network: segmentation output must land on the input points; end the deconv stack on "
                      "mirror -1 or on a conv layer that keeps every point");
  }
}

NetworkSpec subvolume_head(const NetworkSpec& spec) {
  NetworkSpec s = spec;
  s.resolve();
  if (s.conv.empty()) throw ConfigError("subvolume head: no conv layers");
  const XConvSpec& last = s.conv.back();
  if (!last.with_global) throw ConfigError("subvolume head: the last conv layer must enable the global lift");
  const std::size_t n_prev = s.level_points()[s.conv.size() - 1];
  const double rf = receptive_field(last.k, last.d, n_prev);
  if (rf >= 1.0) {
    throw ConfigError("subvolume head: receptive field " + std::to_string(rf) + " must be below 1 with the global lift");
  }
  s.validate();
  return s;
}

PointCNN::PointCNN(NetworkSpec spec, Variant variant, std::uint64_t seed) : spec_(std::move(spec)), variant_(variant) {
  spec_.resolve();
  spec_.validate();
  Rng init(derive_seed(seed, 0x696e6974));
  for (std::size_t i = 0; i < spec_.conv.size(); ++i) {
    conv_.push_back(std::make_unique<XConvLayer>(store_, layer_name("conv", i), spec_.conv[i], spec_.dim, variant, init));
  }
  for (std::size_t j = 0; j < spec_.deconv.size(); ++j) {
    deconv_.push_back(
        std::make_unique<XConvLayer>(store_, layer_name("deconv", j), spec_.deconv[j].layer, spec_.dim, variant, init));
  }
  std::size_t c = spec_.head_channels();
  for (std::size_t i = 0; i < spec_.fc_widths.size(); ++i) {
    const std::size_t w = spec_.fc_widths[i];
    const std::string name = "head.fc" + std::to_string(i);
    DenseBlock b;
    b.weight = &store_.create_glorot(name + ".w", Shape{c, w}, c, w, init);
    b.bias = &store_.create(name + ".b", Tensor(Shape{w}));
    b.bn = ad::make_batchnorm(store_, name + ".bn", w);
    fc_.push_back(b);
    c = w;
  }
  out_weight_ = &store_.create_glorot("head.out.w", Shape{c, spec_.num_classes}, c, spec_.num_classes, init);
  out_bias_ = &store_.create("head.out.b", Tensor(Shape{spec_.num_classes}));
}

ForwardResult PointCNN::forward(std::span<const PointSet> clouds, Mode mode, Rng& rng) {
  if (clouds.empty()) throw ValidationError("forward: empty batch");
  const std::size_t dim = spec_.dim, cin = spec_.input_channels;
  std::size_t total = 0;
  for (const PointSet& cl : clouds) {
    cl.validate();
    if (cl.dim() != dim) throw ValidationError("forward: cloud dimension " + std::to_string(cl.dim()) + " != " + std::to_string(dim));
    if (cl.channels() != cin) {
      throw ValidationError("forward: cloud has " + std::to_string(cl.channels()) + " feature channels, network expects " +
                            std::to_string(cin));
    }
    total += cl.size();
  }

  LayerActivation input;
  input.rep_coords = Tensor(Shape{total, dim});
  Tensor feats(Shape{total, cin});
  input.offsets = {0};
  std::vector<double> radii;
  for (const PointSet& cl : clouds) {
    const std::size_t at = input.offsets.back();
    std::copy(cl.coords.data().begin(), cl.coords.data().end(), input.rep_coords.data().begin() + at * dim);
    std::copy(cl.features.data().begin(), cl.features.data().end(), feats.data().begin() + at * cin);
    input.offsets.push_back(at + cl.size());
    double r = 0.0;
    for (std::size_t i = 0; i < cl.size(); ++i) {
      double n2 = 0.0;
      for (double v : cl.point(i)) n2 += v * v;
      r = std::max(r, std::sqrt(n2));
    }
    radii.push_back(r > 0.0 ? r : 1.0);
  }
  if (cin > 0) input.features = ad::constant(std::move(feats));

  ForwardResult result;
  result.levels.push_back(std::move(input));
  for (auto& layer : conv_) {
    LayerActivation next = run_layer(*layer, result.levels.back(), nullptr, radii, mode, rng);
    result.levels.push_back(std::move(next));
  }
  for (std::size_t j = 0; j < deconv_.size(); ++j) {
    const std::size_t mirror = level_index(spec_.deconv[j].mirror);
    LayerActivation next = run_layer(*deconv_[j], result.levels.back(), &result.levels[mirror], radii, mode, rng);
    const Var& skip = result.levels[mirror].features;
    if (spec_.skip_links && skip) next.features = ad::concat_cols(next.features, skip);
    result.levels.push_back(std::move(next));
  }
  result.offsets = result.levels.back().offsets;
  result.logits = head(result.levels.back().features, mode, rng);
  return result;
}

LayerActivation PointCNN::run_layer(XConvLayer& layer, const LayerActivation& prev, const LayerActivation* reps,
                                    std::span<const double> radii, Mode mode, Rng& rng) {
  const XConvSpec& s = layer.spec();
  const std::size_t dim = spec_.dim, k = s.k;
  const std::size_t clouds = prev.offsets.size() - 1;

  LayerActivation out;
  out.offsets = {0};
  std::vector<Tensor> cloud_coords(clouds);
  std::vector<std::vector<std::size_t>> rep_local(clouds);
  for (std::size_t c = 0; c < clouds; ++c) {
    const std::size_t lo = prev.offsets[c], n_prev = prev.offsets[c + 1] - lo;
    if (k * s.d > n_prev) {
      throw ValidationError(layer.prefix() + ": cloud " + std::to_string(c) + " has " + std::to_string(n_prev) +
                            " points at this level, fewer than k*d=" + std::to_string(k * s.d));
    }
    cloud_coords[c] = Tensor(Shape{n_prev, dim}, std::vector<double>(prev.rep_coords.data().begin() + lo * dim,
                                                                      prev.rep_coords.data().begin() + (lo + n_prev) * dim));
    std::size_t n_out;
    if (reps) {
      n_out = reps->offsets[c + 1] - reps->offsets[c];
    } else if (s.n_out == 0 || s.n_out >= n_prev) {
      n_out = n_prev;
      rep_local[c].resize(n_prev);
      std::iota(rep_local[c].begin(), rep_local[c].end(), 0);
    } else {
      n_out = s.n_out;
      rep_local[c] = s.sampler == Sampler::fps ? farthest_point_sample(cloud_coords[c], n_out, rng)
                                               : random_downsample(n_prev, n_out, rng);
    }
    out.offsets.push_back(out.offsets.back() + n_out);
  }

  const std::size_t rows = out.offsets.back();
  NeighborhoodBatch batch;
  batch.count = rows;
  batch.k = k;
  batch.local_coords = Tensor(Shape{rows * k, dim});
  batch.global_coords = Tensor(Shape{rows, dim});
  batch.feature_rows.reserve(rows * k);
  out.rep_coords = Tensor(Shape{rows, dim});
  out.neighborhoods.reserve(rows);

  for (std::size_t c = 0; c < clouds; ++c) {
    for (std::size_t i = 0; i < out.offsets[c + 1] - out.offsets[c]; ++i) {
      const std::size_t row = out.offsets[c] + i;
      std::span<const double> rep =
          reps ? reps->rep_coords.row(reps->offsets[c] + i) : cloud_coords[c].row(rep_local[c][i]);
      Neighborhood nb = dilated_sample(cloud_coords[c], rep, k, s.d, rng);
      nb.rep_index = reps ? i : rep_local[c][i];
      for (std::size_t j = 0; j < dim; ++j) {
        out.rep_coords[row * dim + j] = rep[j];
        batch.global_coords[row * dim + j] = rep[j] / radii[c];
      }
      for (std::size_t n = 0; n < k; ++n) {
        const auto p = cloud_coords[c].row(nb.neighbor_indices[n]);
        for (std::size_t j = 0; j < dim; ++j) batch.local_coords[(row * k + n) * dim + j] = p[j] - rep[j];
        batch.feature_rows.push_back(prev.offsets[c] + nb.neighbor_indices[n]);
      }
      out.neighborhoods.push_back(std::move(nb));
    }
  }
  out.features = layer.forward(batch, prev.features, mode);
  return out;
}

Var PointCNN::head(const Var& features, Mode mode, Rng& rng) {
  Var h = features;
  for (DenseBlock& b : fc_) {
    h = ad::batchnorm(ad::elu(ad::fully_connected(h, b.weight->node, b.bias->node)), b.bn, mode);
  }
  if (spec_.dropout) h = ad::dropout(h, spec_.dropout_rate, mode, rng);
  return ad::fully_connected(h, out_weight_->node, out_bias_->node);
}

ForwardResult forward_classify(PointCNN& net, std::span<const PointSet> clouds, Mode mode, Rng& rng) {
  if (net.spec().task != Task::classification) throw ConfigError("forward_classify on a segmentation network");
  return net.forward(clouds, mode, rng);
}

ForwardResult forward_segment(PointCNN& net, std::span<const PointSet> clouds, Mode mode, Rng& rng) {
  if (net.spec().task != Task::segmentation) throw ConfigError("forward_segment on a classification network");
  return net.forward(clouds, mode, rng);
}

Var network_loss(const ForwardResult& result, std::span<const PointSet> clouds, Task task) {
  if (result.offsets.size() != clouds.size() + 1) throw ValidationError("network_loss: cloud count mismatch");
  std::vector<int> labels;
  labels.reserve(result.offsets.back());
  for (std::size_t c = 0; c < clouds.size(); ++c) {
    const std::size_t rows = result.offsets[c + 1] - result.offsets[c];
    if (task == Task::classification) {
      if (!clouds[c].cloud_label) throw ValidationError("network_loss: cloud " + std::to_string(c) + " has no label");
      labels.insert(labels.end(), rows, *clouds[c].cloud_label);
    } else {
      if (clouds[c].point_labels.size() != rows) {
        throw ValidationError("network_loss: cloud " + std::to_string(c) + " needs " + std::to_string(rows) +
                              " point labels");
      }
      labels.insert(labels.end(), clouds[c].point_labels.begin(), clouds[c].point_labels.end());
    }
  }
  return ad::softmax_cross_entropy(result.logits, labels);
}

Tensor average_logits(const ForwardResult& result) {
  const Tensor& lg = result.logits->value;
  const std::size_t clouds = result.offsets.size() - 1, classes = lg.dim(1);
  Tensor out(Shape{clouds, classes});
  for (std::size_t c = 0; c < clouds; ++c) {
    const std::size_t lo = result.offsets[c], hi = result.offsets[c + 1];
    for (std::size_t r = lo; r < hi; ++r) {
      for (std::size_t j = 0; j < classes; ++j) out.at(c, j) += lg.at(r, j);
    }
    for (std::size_t j = 0; j < classes; ++j) out.at(c, j) /= static_cast<double>(hi - lo);
  }
  return out;
}

std::vector<int> argmax_rows(const Tensor& logits) {
  std::vector<int> out(logits.dim(0));
  for (std::size_t r = 0; r < out.size(); ++r) {
    const auto row = logits.row(r);
    out[r] = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
  }
  return out;
}

MultipassPrediction predict_multipass(PointCNN& net, const PointSet& cloud, std::size_t r, Rng& rng) {
  if (r < 1) throw ValidationError("predict_multipass: r must be >= 1");
  if (net.spec().task != Task::segmentation) throw ConfigError("predict_multipass needs a segmentation network");
  const std::size_t n = cloud.size(), classes = net.spec().num_classes;
  const std::size_t chunk = std::min(n, net.spec().input_points);
  const std::size_t chunks = (n + chunk - 1) / chunk;

  MultipassPrediction pred;
  pred.logits = Tensor(Shape{n, classes});
  pred.counts.assign(n, 0);
  std::vector<std::size_t> order(n);
  for (std::size_t pass = 0; pass < r; ++pass) {
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(std::span<std::size_t>(order));
    std::vector<std::vector<std::size_t>> members(chunks);
    std::vector<PointSet> parts;
    for (std::size_t c = 0; c < chunks; ++c) {
      const std::size_t lo = c * chunk;
      members[c].assign(order.begin() + static_cast<std::ptrdiff_t>(lo),
                        order.begin() + static_cast<std::ptrdiff_t>(std::min(n, lo + chunk)));
      // top up a short last chunk with points from the front of this pass
      for (std::size_t t = 0; members[c].size() < chunk; ++t) members[c].push_back(order[t]);
      parts.push_back(cloud.subset(members[c]));
    }
    const ForwardResult res = net.forward(parts, Mode::infer, rng);
    const Tensor& lg = res.logits->value;
    for (std::size_t c = 0; c < chunks; ++c) {
      for (std::size_t i = 0; i < members[c].size(); ++i) {
        const std::size_t p = members[c][i];
        for (std::size_t j = 0; j < classes; ++j) pred.logits.at(p, j) += lg.at(res.offsets[c] + i, j);
        ++pred.counts[p];
      }
    }
  }
  for (std::size_t p = 0; p < n; ++p) {
    for (std::size_t j = 0; j < classes; ++j) pred.logits.at(p, j) /= static_cast<double>(pred.counts[p]);
  }
  return pred;
}

}  // namespace xconv
