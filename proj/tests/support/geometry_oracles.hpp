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

// Brute-force references for the geometry module. Deliberately naive.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "xconv/rng.hpp"
#include "xconv/tensor.hpp"

namespace xconv::testing {

inline Tensor random_cloud(std::size_t n, std::size_t dim, Rng& rng) {
  Tensor t(Shape{n, dim});
  for (auto& v : t.data()) v = rng.uniform(-1.0, 1.0);
  return t;
}

inline double oracle_distance(const Tensor& coords, std::size_t i, std::span<const double> q) {
  double s = 0.0;
  for (std::size_t j = 0; j < q.size(); ++j) s += (coords.at(i, j) - q[j]) * (coords.at(i, j) - q[j]);
  return std::sqrt(s);
}

/// Stable-sorts every index by Euclidean distance and keeps the first k.
inline std::vector<std::size_t> brute_force_knn(const Tensor& coords, std::span<const double> q, std::size_t k) {
  std::vector<std::size_t> idx(coords.dim(0));
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return oracle_distance(coords, a, q) < oracle_distance(coords, b, q);
  });
  idx.resize(k);
  return idx;
}

/// Greedy FPS by definition: each step rescans every candidate against every chosen point.
inline std::vector<std::size_t> greedy_fps_oracle(const Tensor& coords, std::size_t m, std::size_t start) {
  std::vector<std::size_t> chosen{start};
  while (chosen.size() < m) {
    std::size_t best = 0;
    double best_d = -1.0;
    for (std::size_t i = 0; i < coords.dim(0); ++i) {
      double dmin = std::numeric_limits<double>::infinity();
      for (std::size_t c : chosen) dmin = std::min(dmin, oracle_distance(coords, i, coords.row(c)));
      if (dmin > best_d) {
        best_d = dmin;
        best = i;
      }
    }
    chosen.push_back(best);
  }
  return chosen;
}

inline double min_pairwise_distance(const Tensor& coords, const std::vector<std::size_t>& idx) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < idx.size(); ++a) {
    for (std::size_t b = a + 1; b < idx.size(); ++b) {
      best = std::min(best, oracle_distance(coords, idx[a], coords.row(idx[b])));
    }
  }
  return best;
}

/// Exhaustive max over all m-subsets (m = 3) of the min pairwise distance.
inline double best_min_pairwise_distance(const Tensor& coords, std::size_t m) {
  const std::size_t n = coords.dim(0);
  double best = 0.0;
  if (m != 3) return best;
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a + 1; b < n; ++b) {
      for (std::size_t c = b + 1; c < n; ++c) best = std::max(best, min_pairwise_distance(coords, {a, b, c}));
    }
  }
  return best;
}

}  // namespace xconv::testing
