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
#include <string>
#include <vector>

#include "xconv/geometry.hpp"
#include "xconv/network.hpp"

namespace xconv {

enum class Split { train, test };

/// Clouds with a train/test assignment. For segmentation, `class_names` are
/// the shape categories (each cloud's cloud_label) and `part_names` the
/// per-point labels; `category_parts[c]` lists the parts of category c.
struct Dataset {
  Task task = Task::classification;
  std::vector<std::string> class_names;
  std::vector<std::string> part_names;
  std::vector<std::vector<int>> category_parts;
  std::vector<PointSet> clouds;
  std::vector<Split> split;
  std::uint64_t seed = 0;  // generator seed, carried through the manifest

  /// Size of the label space the network predicts: classes or parts.
  std::size_t num_labels() const;
  std::vector<std::size_t> indices(Split which) const;
  std::vector<PointSet> subset(Split which) const;
  /// Labels in range, one split entry per cloud; throws ValidationError.
  void validate() const;
};

enum class Primitive { sphere, cube, ring };

const char* primitive_name(Primitive p);
/// Throws ValidationError for an unknown name.
Primitive parse_primitive(const std::string& name);

/// `per_class` clouds of each listed primitive, labelled by position in
/// `classes`. Points are uniform on the surface, jittered by N(0, noise_sigma)
/// per coordinate, rotated about the z axis by a random angle and scaled so
/// the farthest point has norm 1. Every cloud starts in the train split.
Dataset gen_shapes(const std::vector<Primitive>& classes, std::size_t per_class, std::size_t n_points,
                   double noise_sigma, Rng& rng);

/// Two categories of two-part shapes: a sphere on a stem and a box on a stem.
/// Part ids are global: {0 sphere, 1 stem} and {2 box, 3 stem}. Each point
/// picks its part with a fixed target fraction and is sampled on that
/// primitive, so its label is the primitive it lies on.
Dataset gen_parts(std::size_t per_class, std::size_t n_points, Rng& rng);

/// Expected fraction of points on each part id of gen_parts.
std::vector<double> part_target_fractions();

/// Moves `test_per_class` randomly chosen clouds of every class to the test split.
void stratified_split(Dataset& data, std::size_t test_per_class, Rng& rng);

/// Writes one XPC1 file per cloud plus `manifest.json` into `dir` (created if
/// missing). Output is a pure function of the dataset.
void write_dataset(const std::string& dir, const Dataset& data);
/// Reads a manifest written by write_dataset; file paths are relative to it.
Dataset read_dataset(const std::string& manifest_path);

}  // namespace xconv
