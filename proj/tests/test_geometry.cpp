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

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "support/geometry_oracles.hpp"
#include "xconv/errors.hpp"
#include "xconv/geometry.hpp"

using namespace xconv;
using namespace xconv::testing;

TEST_CASE("PointSet validation") {
  PointSet ok(Tensor::matrix({{0, 0, 0}, {1, 1, 1}}));
  CHECK_NOTHROW(ok.validate());
  CHECK(ok.channels() == 0);

  PointSet bad_dim(Tensor::matrix({{0, 0, 0, 0}}));
  CHECK_THROWS_AS(bad_dim.validate(), ValidationError);

  PointSet bad_features(Tensor::matrix({{0, 0}, {1, 1}}), Tensor(Shape{3, 2}));
  CHECK_THROWS_AS(bad_features.validate(), ValidationError);

  PointSet nan_coords(Tensor::matrix({{0, std::nan("")}}));
  CHECK_THROWS_AS(nan_coords.validate(), ValidationError);

  PointSet labelled = ok;
  labelled.point_labels = {1};
  CHECK_THROWS_AS(labelled.validate(), ValidationError);
}

TEST_CASE("knn") {
  SUBCASE("query on a source point") {
    Rng rng(1);
    PointSet cloud(random_cloud(20, 3, rng));
    for (std::size_t i = 0; i < 20; ++i) CHECK(knn(cloud, cloud.point(i), 1) == std::vector<std::size_t>{i});
  }
  SUBCASE("collinear points") {
    PointSet line(Tensor::matrix({{2, 0}, {0, 0}, {3, 0}, {1, 0}}));
    const std::vector<double> q{0, 0};
    CHECK(knn(line, q, 2) == std::vector<std::size_t>{1, 3});
  }
  SUBCASE("ties break by ascending index") {
    PointSet ring(Tensor::matrix({{1, 0}, {0, 1}, {-1, 0}, {0, -1}}));
    const std::vector<double> q{0, 0};
    CHECK(knn(ring, q, 3) == std::vector<std::size_t>{0, 1, 2});
  }
  SUBCASE("brute force agreement, N=512, k=16") {
    Rng rng(2);
    PointSet cloud(random_cloud(512, 3, rng));
    for (int q = 0; q < 20; ++q) {
      const std::vector<double> query{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
      CHECK(knn(cloud, query, 16) == brute_force_knn(cloud.coords, query, 16));
    }
  }
  SUBCASE("k > N") {
    PointSet cloud(Tensor::matrix({{0, 0}}));
    const std::vector<double> q{0, 0};
    CHECK_THROWS_AS(knn(cloud, q, 2), ValidationError);
  }
}

TEST_CASE("dilated_sample") {
  Rng rng(3);
  PointSet cloud(random_cloud(64, 3, rng));
  const std::vector<double> q{0.1, -0.2, 0.3};

  SUBCASE("d=1 is the knn set, shuffled") {
    auto nb = dilated_sample(cloud, q, 8, 1, rng);
    auto expect = knn(cloud, q, 8);
    auto got = nb.neighbor_indices;
    std::sort(got.begin(), got.end());
    std::sort(expect.begin(), expect.end());
    CHECK(got == expect);
  }
  SUBCASE("k=4, d=2 stays within the 8 nearest and is distinct") {
    const auto pool = knn(cloud, q, 8);
    for (int trial = 0; trial < 50; ++trial) {
      auto nb = dilated_sample(cloud, q, 4, 2, rng);
      REQUIRE(nb.neighbor_indices.size() == 4);
      std::set<std::size_t> uniq(nb.neighbor_indices.begin(), nb.neighbor_indices.end());
      CHECK(uniq.size() == 4);
      for (auto i : nb.neighbor_indices) CHECK(std::find(pool.begin(), pool.end(), i) != pool.end());
    }
  }
  SUBCASE("uniform over the pool") {
    PointSet square(Tensor::matrix({{1, 0}, {0, 1}, {-1, 0}, {0, -1}}));
    const std::vector<double> origin{0, 0};
    std::vector<int> hits(4, 0);
    const int draws = 10000;
    for (int i = 0; i < draws; ++i) {
      for (auto idx : dilated_sample(square, origin, 2, 2, rng).neighbor_indices) ++hits[idx];
    }
    for (int h : hits) CHECK(std::abs(static_cast<double>(h) / draws - 0.5) <= 0.02);
  }
  SUBCASE("k*d > N") { CHECK_THROWS_AS(dilated_sample(cloud, q, 16, 5, rng), ValidationError); }
}

TEST_CASE("farthest_point_sample") {
  SUBCASE("m=N returns every index") {
    Rng rng(4);
    PointSet cloud(random_cloud(30, 3, rng));
    auto idx = farthest_point_sample(cloud, 30, rng);
    std::sort(idx.begin(), idx.end());
    std::vector<std::size_t> all(30);
    std::iota(all.begin(), all.end(), 0);
    CHECK(idx == all);
  }
  SUBCASE("far endpoint is picked second") {
    const Tensor line2d = Tensor::matrix({{0.0, 0.0}, {0.1, 0.0}, {0.9, 0.0}, {1.0, 0.0}});
    CHECK(farthest_point_sample_from(line2d, 2, 0) == std::vector<std::size_t>{0, 3});
  }
  SUBCASE("matches the from-scratch greedy oracle") {
    Rng rng(5);
    for (int trial = 0; trial < 50; ++trial) {
      Tensor coords = random_cloud(8 + rng.index(56), 3, rng);
      const std::size_t n = coords.dim(0);
      const std::size_t m = 1 + rng.index(n);
      const std::size_t start = rng.index(n);
      CHECK(farthest_point_sample_from(coords, m, start) == greedy_fps_oracle(coords, m, start));
    }
  }
  SUBCASE("greedy is within a factor 2 of the exhaustive max-min 3-subset") {
    Rng rng(6);
    for (int trial = 0; trial < 100; ++trial) {
      Tensor coords = random_cloud(8, 3, rng);
      auto idx = farthest_point_sample(coords, 3, rng);
      CHECK(min_pairwise_distance(coords, idx) >= 0.5 * best_min_pairwise_distance(coords, 3) - 1e-12);
    }
  }
  SUBCASE("fixed seed is deterministic and prefixes are valid results") {
    Rng cloud_rng(7);
    Tensor coords = random_cloud(64, 3, cloud_rng);
    Rng a(99), b(99);
    auto full = farthest_point_sample(coords, 20, a);
    CHECK(full == farthest_point_sample(coords, 20, b));
    for (std::size_t m = 1; m <= 20; ++m) {
      auto prefix = farthest_point_sample_from(coords, m, full[0]);
      CHECK(std::equal(prefix.begin(), prefix.end(), full.begin()));
    }
  }
  SUBCASE("m > N") {
    Rng rng(8);
    CHECK_THROWS_AS(farthest_point_sample(random_cloud(4, 2, rng), 5, rng), ValidationError);
  }
}

TEST_CASE("random_downsample") {
  Rng rng(9);
  auto perm = random_downsample(10, 10, rng);
  std::sort(perm.begin(), perm.end());
  for (std::size_t i = 0; i < 10; ++i) CHECK(perm[i] == i);

  Rng a(5), b(5);
  CHECK(random_downsample(100, 7, a) == random_downsample(100, 7, b));

  std::vector<int> hits(10, 0);
  const int draws = 10000;
  for (int i = 0; i < draws; ++i) ++hits[random_downsample(10, 1, rng)[0]];
  for (int h : hits) CHECK(std::abs(static_cast<double>(h) / draws - 0.1) <= 0.01);

  CHECK_THROWS_AS(random_downsample(3, 4, rng), ValidationError);
}

TEST_CASE("localize") {
  const Tensor p = Tensor::matrix({{1, 2, 3}, {4, 5, 6}});
  const std::vector<double> rep{1, 1, 1};
  CHECK(max_abs_diff(localize(p, rep), Tensor::matrix({{0, 1, 2}, {3, 4, 5}})) == 0.0);

  const Tensor same = Tensor::matrix({{1, 1, 1}, {1, 1, 1}});
  const Tensor zero = localize(same, rep);
  for (double v : zero.data()) CHECK(v == 0.0);

  Rng rng(10);
  for (int trial = 0; trial < 20; ++trial) {
    Tensor pts = random_cloud(6, 3, rng);
    std::vector<double> pa{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
    std::vector<double> pb{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
    std::vector<double> t{rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(-5, 5)};
    // translation cancels
    Tensor shifted = pts;
    std::vector<double> pa_shift = pa;
    for (std::size_t i = 0; i < shifted.size(); ++i) shifted[i] += t[i % 3];
    for (std::size_t j = 0; j < 3; ++j) pa_shift[j] += t[j];
    CHECK(max_abs_diff(localize(shifted, pa_shift), localize(pts, pa)) < 1e-12);
    // equivariance: localize(P, a) + (a - b) == localize(P, b)
    Tensor lhs = localize(pts, pa);
    for (std::size_t i = 0; i < lhs.size(); ++i) lhs[i] += pa[i % 3] - pb[i % 3];
    CHECK(max_abs_diff(lhs, localize(pts, pb)) < 1e-12);
  }
}

TEST_CASE("receptive_field") {
  CHECK(receptive_field(4, 2, 8) == 1.0);
  CHECK(receptive_field(4, 1, 8) == 0.5);
  CHECK(receptive_field(9, 1, 9) == 1.0);
  CHECK(receptive_field(16, 4, 8) == 1.0);
  CHECK_THROWS_AS(receptive_field(1, 1, 0), ValidationError);
  for (std::size_t k = 1; k < 10; ++k) {
    for (std::size_t d = 1; d < 4; ++d) {
      for (std::size_t n = 1; n < 40; ++n) {
        const double r = receptive_field(k, d, n);
        CHECK(receptive_field(k + 1, d, n) >= r);
        CHECK(receptive_field(k, d + 1, n) >= r);
        CHECK(receptive_field(k, d, n + 1) <= r);
      }
    }
  }
}

TEST_CASE("gaussian_resample") {
  SUBCASE("count statistics") {
    Rng rng(11);
    const std::size_t target = 1024;
    const int draws = 10000;
    double s = 0.0, s2 = 0.0;
    for (int i = 0; i < draws; ++i) {
      const double n = static_cast<double>(resample_count(target, rng));
      s += n;
      s2 += n * n;
    }
    const double mean = s / draws;
    const double sd = std::sqrt(s2 / draws - mean * mean);
    CHECK(std::abs(mean - target) <= 0.02 * target);
    CHECK(std::abs(sd - target / 8.0) <= 0.05 * (target / 8.0));
  }
  SUBCASE("never below one point") {
    Rng rng(12);
    PointSet one(Tensor::matrix({{0, 0, 0}}));
    for (int i = 0; i < 1000; ++i) CHECK(gaussian_resample(one, 1, rng).size() >= 1);
  }
  SUBCASE("n == N gives a shuffled permutation") {
    Rng rng(13);
    PointSet cloud(random_cloud(40, 3, rng));
    PointSet out = resample_to(cloud, 40, rng);
    REQUIRE(out.size() == 40);
    std::multiset<std::vector<double>> a, b;
    for (std::size_t i = 0; i < 40; ++i) {
      a.insert({cloud.point(i).begin(), cloud.point(i).end()});
      b.insert({out.point(i).begin(), out.point(i).end()});
    }
    CHECK(a == b);
    CHECK(max_abs_diff(out.coords, cloud.coords) > 0.0);
  }
  SUBCASE("n > N samples with replacement, labels follow points") {
    Rng rng(14);
    PointSet cloud(random_cloud(5, 2, rng));
    cloud.point_labels = {0, 1, 2, 3, 4};
    PointSet out = resample_to(cloud, 12, rng);
    CHECK(out.size() == 12);
    for (std::size_t i = 0; i < 12; ++i) {
      const auto src = static_cast<std::size_t>(out.point_labels[i]);
      CHECK(out.coords.at(i, 0) == cloud.coords.at(src, 0));
    }
  }
  SUBCASE("bounds clamp the count") {
    Rng rng(15);
    ResampleBounds bounds{100, 110};
    for (int i = 0; i < 200; ++i) {
      const auto n = resample_count(104, rng, bounds);
      CHECK(n >= 100);
      CHECK(n <= 110);
    }
  }
}
