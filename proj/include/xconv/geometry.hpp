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
#include <vector>

#include "xconv/rng.hpp"
#include "xconv/tensor.hpp"

namespace xconv {

/// N points in Dim (2 or 3) dimensions with optional per-point features and labels.
struct PointSet {
  Tensor coords;                  // N x Dim
  Tensor features;                // N x C, C == 0 when the cloud carries no features
  std::vector<int> point_labels;  // empty or length N
  std::optional<int> cloud_label;

  PointSet() = default;
  explicit PointSet(Tensor coords_);
  PointSet(Tensor coords_, Tensor features_);

  std::size_t size() const { return coords.rank() == 2 ? coords.dim(0) : 0; }
  std::size_t dim() const { return coords.rank() == 2 ? coords.dim(1) : 0; }
  std::size_t channels() const { return features.rank() == 2 ? features.dim(1) : 0; }
  std::span<const double> point(std::size_t i) const { return coords.row(i); }

  /// Throws ValidationError when an invariant is broken.
  void validate() const;
  /// Points (with features and point labels) at `idx`, in that order.
  PointSet subset(std::span<const std::size_t> idx) const;
};

/// K neighbors gathered around one representative point.
struct Neighborhood {
  std::size_t rep_index = 0;
  std::vector<double> rep_coord;
  std::vector<std::size_t> neighbor_indices;
};

/// Exact k nearest neighbors of `query` among the rows of `coords`, sorted by
/// ascending distance; equal distances are ordered by ascending index.
std::vector<std::size_t> knn(const Tensor& coords, std::span<const double> query, std::size_t k);
std::vector<std::size_t> knn(const PointSet& source, std::span<const double> query, std::size_t k);

/// k distinct indices drawn uniformly from the k*d nearest neighbors, in random order.
Neighborhood dilated_sample(const Tensor& coords, std::span<const double> query, std::size_t k, std::size_t d,
                            Rng& rng);
Neighborhood dilated_sample(const PointSet& source, std::span<const double> query, std::size_t k, std::size_t d,
                            Rng& rng);

/// Greedy farthest point sampling starting from an rng-chosen seed point.
std::vector<std::size_t> farthest_point_sample(const Tensor& coords, std::size_t m, Rng& rng);
std::vector<std::size_t> farthest_point_sample(const PointSet& source, std::size_t m, Rng& rng);
/// Same, with an explicit first point. Ties go to the lowest index.
std::vector<std::size_t> farthest_point_sample_from(const Tensor& coords, std::size_t m, std::size_t start);

/// m distinct uniformly chosen indices.
std::vector<std::size_t> random_downsample(std::size_t n, std::size_t m, Rng& rng);
std::vector<std::size_t> random_downsample(const PointSet& source, std::size_t m, Rng& rng);

/// P - p row-wise.
Tensor localize(const Tensor& neighbor_coords, std::span<const double> rep_coord);

/// (k * d) / n_prev clamped to 1.
double receptive_field(std::size_t k, std::size_t d, std::size_t n_prev);

struct ResampleBounds {
  std::size_t min_count = 1;
  std::size_t max_count = 0;  // 0 => 4 * n_target
};

/// round(Normal(n_target, (n_target/8)^2)) clamped to `bounds`.
std::size_t resample_count(std::size_t n_target, Rng& rng, const ResampleBounds& bounds = {});
/// n points in shuffled order: without replacement when n <= N, with replacement otherwise.
PointSet resample_to(const PointSet& source, std::size_t n, Rng& rng);
PointSet gaussian_resample(const PointSet& source, std::size_t n_target, Rng& rng,
                           const ResampleBounds& bounds = {});

}  // namespace xconv
