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

#include "xconv/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <utility>

#include "xconv/errors.hpp"

namespace xconv {

namespace {

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double t = a[i] - b[i];
    d += t * t;
  }
  return d;
}

std::size_t point_count(const Tensor& coords) {
  if (coords.rank() != 2) throw DimensionError("coordinates must be N x Dim, got " + shape_str(coords.shape()));
  return coords.dim(0);
}

void check_query(const Tensor& coords, std::span<const double> query) {
  if (query.size() != coords.dim(1)) {
    throw DimensionError("query of dimension " + std::to_string(query.size()) + " against coordinates " +
                         shape_str(coords.shape()));
  }
}

}  // namespace

PointSet::PointSet(Tensor coords_) : coords(std::move(coords_)) {
  features = Tensor(Shape{size(), 0});
}

PointSet::PointSet(Tensor coords_, Tensor features_) : coords(std::move(coords_)), features(std::move(features_)) {}

void PointSet::validate() const {
  if (coords.rank() != 2) throw ValidationError("point coordinates must be N x Dim");
  if (size() < 1) throw ValidationError("point set is empty");
  if (dim() != 2 && dim() != 3) throw ValidationError("point dimension must be 2 or 3, got " + std::to_string(dim()));
  if (!coords.all_finite()) throw ValidationError("point coordinates contain NaN/Inf");
  if (features.rank() != 2 || features.dim(0) != size()) {
    throw ValidationError("feature matrix " + shape_str(features.shape()) + " does not match " +
                          std::to_string(size()) + " points");
  }
  if (!point_labels.empty() && point_labels.size() != size()) {
    throw ValidationError("point label count " + std::to_string(point_labels.size()) + " != point count " +
                          std::to_string(size()));
  }
}

PointSet PointSet::subset(std::span<const std::size_t> idx) const {
  const std::size_t d = dim(), c = channels();
  PointSet out;
  out.coords = Tensor(Shape{idx.size(), d});
  out.features = Tensor(Shape{idx.size(), c});
  for (std::size_t i = 0; i < idx.size(); ++i) {
    std::copy_n(coords.data().data() + idx[i] * d, d, out.coords.data().data() + i * d);
    std::copy_n(features.data().data() + idx[i] * c, c, out.features.data().data() + i * c);
  }
  if (!point_labels.empty()) {
    out.point_labels.reserve(idx.size());
    for (std::size_t i : idx) out.point_labels.push_back(point_labels[i]);
  }
  out.cloud_label = cloud_label;
  return out;
}

std::vector<std::size_t> knn(const Tensor& coords, std::span<const double> query, std::size_t k) {
  const std::size_t n = point_count(coords);
  check_query(coords, query);
  if (k > n) {
    throw ValidationError("knn: k=" + std::to_string(k) + " exceeds point count " + std::to_string(n));
  }
  std::vector<std::pair<double, std::size_t>> dist(n);
  for (std::size_t i = 0; i < n; ++i) dist[i] = {squared_distance(coords.row(i), query), i};
  // pair ordering breaks distance ties by index
  std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
  std::vector<std::size_t> out(k);
  for (std::size_t i = 0; i < k; ++i) out[i] = dist[i].second;
  return out;
}

std::vector<std::size_t> knn(const PointSet& source, std::span<const double> query, std::size_t k) {
  return knn(source.coords, query, k);
}

Neighborhood dilated_sample(const Tensor& coords, std::span<const double> query, std::size_t k, std::size_t d,
                            Rng& rng) {
  if (d < 1) throw ValidationError("dilation must be >= 1");
  const std::size_t n = point_count(coords);
  if (k * d > n) {
    throw ValidationError("dilated_sample: k*d=" + std::to_string(k * d) + " exceeds point count " +
                          std::to_string(n));
  }
  std::vector<std::size_t> pool = knn(coords, query, k * d);
  // partial Fisher-Yates: the first k slots become a uniform k-subset in random order
  for (std::size_t i = 0; i < k; ++i) std::swap(pool[i], pool[i + rng.index(pool.size() - i)]);
  pool.resize(k);
  Neighborhood nb;
  nb.rep_coord.assign(query.begin(), query.end());
  nb.neighbor_indices = std::move(pool);
  return nb;
}

Neighborhood dilated_sample(const PointSet& source, std::span<const double> query, std::size_t k, std::size_t d,
                            Rng& rng) {
  return dilated_sample(source.coords, query, k, d, rng);
}

std::vector<std::size_t> farthest_point_sample_from(const Tensor& coords, std::size_t m, std::size_t start) {
  const std::size_t n = point_count(coords);
  if (m > n) throw ValidationError("farthest_point_sample: m=" + std::to_string(m) + " exceeds " + std::to_string(n));
  if (m == 0) return {};
  if (start >= n) throw ValidationError("farthest_point_sample: start index out of range");
  std::vector<std::size_t> chosen{start};
  chosen.reserve(m);
  std::vector<double> min_dist(n, std::numeric_limits<double>::infinity());
  std::size_t last = start;
  while (chosen.size() < m) {
    std::size_t best = n;
    double best_dist = -1.0;
    for (std::size_t i = 0; i < n; ++i) {
      min_dist[i] = std::min(min_dist[i], squared_distance(coords.row(i), coords.row(last)));
      if (min_dist[i] > best_dist) {  // strict: lowest index wins ties
        best_dist = min_dist[i];
        best = i;
      }
    }
    chosen.push_back(best);
    last = best;
  }
  return chosen;
}

std::vector<std::size_t> farthest_point_sample(const Tensor& coords, std::size_t m, Rng& rng) {
  const std::size_t n = point_count(coords);
  if (m > n) throw ValidationError("farthest_point_sample: m=" + std::to_string(m) + " exceeds " + std::to_string(n));
  if (m == 0) return {};
  return farthest_point_sample_from(coords, m, rng.index(n));
}

std::vector<std::size_t> farthest_point_sample(const PointSet& source, std::size_t m, Rng& rng) {
  return farthest_point_sample(source.coords, m, rng);
}

std::vector<std::size_t> random_downsample(std::size_t n, std::size_t m, Rng& rng) {
  if (m > n) throw ValidationError("random_downsample: m=" + std::to_string(m) + " exceeds " + std::to_string(n));
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  for (std::size_t i = 0; i < m; ++i) std::swap(idx[i], idx[i + rng.index(n - i)]);
  idx.resize(m);
  return idx;
}

std::vector<std::size_t> random_downsample(const PointSet& source, std::size_t m, Rng& rng) {
  return random_downsample(source.size(), m, rng);
}

Tensor localize(const Tensor& neighbor_coords, std::span<const double> rep_coord) {
  point_count(neighbor_coords);
  check_query(neighbor_coords, rep_coord);
  Tensor out = neighbor_coords;
  const std::size_t d = rep_coord.size();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= rep_coord[i % d];
  return out;
}

double receptive_field(std::size_t k, std::size_t d, std::size_t n_prev) {
  if (n_prev < 1) throw ValidationError("receptive_field: previous layer must have at least one point");
  return std::min(1.0, static_cast<double>(k * d) / static_cast<double>(n_prev));
}

std::size_t resample_count(std::size_t n_target, Rng& rng, const ResampleBounds& bounds) {
  const double target = static_cast<double>(n_target);
  const double draw = std::round(rng.normal(target, target / 8.0));
  const std::size_t hi = bounds.max_count ? bounds.max_count : std::max<std::size_t>(1, 4 * n_target);
  const std::size_t lo = std::max<std::size_t>(1, bounds.min_count);
  if (draw <= static_cast<double>(lo)) return lo;
  if (draw >= static_cast<double>(hi)) return hi;
  return static_cast<std::size_t>(draw);
}

PointSet resample_to(const PointSet& source, std::size_t n, Rng& rng) {
  const std::size_t total = source.size();
  if (total == 0) throw ValidationError("cannot resample an empty point set");
  std::vector<std::size_t> idx;
  if (n <= total) {
    idx = random_downsample(total, n, rng);
  } else {
    idx.resize(n);
    for (auto& i : idx) i = rng.index(total);
  }
  return source.subset(idx);
}

PointSet gaussian_resample(const PointSet& source, std::size_t n_target, Rng& rng, const ResampleBounds& bounds) {
  return resample_to(source, resample_count(n_target, rng, bounds), rng);
}

}  // namespace xconv
