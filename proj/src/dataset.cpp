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

#include "xconv/dataset.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>

#include <json.hpp>

#include "xconv/cloud_io.hpp"
#include "xconv/errors.hpp"

namespace xconv {

namespace fs = std::filesystem;
using Point = std::array<double, 3>;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

Point on_sphere(Rng& rng, double radius = 1.0) {
  for (;;) {
    Point p{rng.normal(), rng.normal(), rng.normal()};
    const double n = std::sqrt(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]);
    if (n < 1e-12) continue;
    for (double& v : p) v *= radius / n;
    return p;
  }
}

// Surface of the axis-aligned box [-h, h]^2 x [z0, z0 + 2h].
Point on_box(Rng& rng, double h, double z0) {
  const std::size_t face = rng.index(6);
  const std::size_t axis = face / 2;
  Point p{rng.uniform(-h, h), rng.uniform(-h, h), rng.uniform(-h, h)};
  p[axis] = face % 2 ? h : -h;
  p[2] += z0 + h;
  return p;
}

// Torus around the z axis, uniform in area: the tube angle is accepted in
// proportion to the local circumference.
Point on_ring(Rng& rng, double major, double minor) {
  for (;;) {
    const double u = rng.uniform(0.0, kTwoPi), v = rng.uniform(0.0, kTwoPi);
    const double w = major + minor * std::cos(v);
    if (rng.uniform() * (major + minor) > w) continue;
    return {w * std::cos(u), w * std::sin(u), minor * std::sin(v)};
  }
}

// Open-topped cylinder of radius r hanging from z = 0 down to z = -len:
// side wall plus bottom disk, uniform in area.
Point on_stem(Rng& rng, double r, double len) {
  const double side = kTwoPi * r * len, cap = std::numbers::pi * r * r;
  const double a = rng.uniform(0.0, kTwoPi);
  if (rng.uniform() * (side + cap) < side) return {r * std::cos(a), r * std::sin(a), -rng.uniform(0.0, len)};
  const double rho = r * std::sqrt(rng.uniform());
  return {rho * std::cos(a), rho * std::sin(a), -len};
}

// Shapes of gen_parts. Dimensions keep every point inside the unit ball.
constexpr double kSphereRadius = 0.5;  // centered at (0, 0, 0.5)
constexpr double kBoxHalf = 0.4;       // [-0.4, 0.4]^2 x [0, 0.8]
constexpr double kStemLength = 0.9;
constexpr double kSphereStemRadius = 0.15;
constexpr double kBoxStemRadius = 0.25;
constexpr double kHeadFraction = 0.6;

Point part_point(int category, bool head, Rng& rng) {
  if (category == 0) {
    if (!head) return on_stem(rng, kSphereStemRadius, kStemLength);
    Point p = on_sphere(rng, kSphereRadius);
    p[2] += kSphereRadius;
    return p;
  }
  if (!head) return on_stem(rng, kBoxStemRadius, kStemLength);
  for (;;) {
    // the stem covers a disk of the box's bottom face
    const Point p = on_box(rng, kBoxHalf, 0.0);
    if (p[2] == 0.0 && p[0] * p[0] + p[1] * p[1] < kBoxStemRadius * kBoxStemRadius) continue;
    return p;
  }
}

void rotate_z(Point& p, double c, double s) {
  const double x = p[0], y = p[1];
  p[0] = c * x - s * y;
  p[1] = s * x + c * y;
}

const char* split_name(Split s) { return s == Split::train ? "train" : "test"; }

[[noreturn]] void manifest_error(const std::string& path, const std::string& what) {
  throw FormatError("manifest '" + path + "': " + what, 0);
}

}  // namespace

std::size_t Dataset::num_labels() const {
  return task == Task::classification ? class_names.size() : part_names.size();
}

std::vector<std::size_t> Dataset::indices(Split which) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < split.size(); ++i) {
    if (split[i] == which) out.push_back(i);
  }
  return out;
}

std::vector<PointSet> Dataset::subset(Split which) const {
  std::vector<PointSet> out;
  for (std::size_t i : indices(which)) out.push_back(clouds[i]);
  return out;
}

void Dataset::validate() const {
  if (split.size() != clouds.size()) throw ValidationError("dataset: one split entry per cloud is required");
  const int classes = static_cast<int>(class_names.size());
  const int parts = static_cast<int>(part_names.size());
  if (task == Task::segmentation && category_parts.size() != class_names.size()) {
    throw ValidationError("dataset: category_parts must list the parts of every category");
  }
  for (std::size_t i = 0; i < clouds.size(); ++i) {
    const PointSet& c = clouds[i];
    c.validate();
    const std::string where = "dataset: cloud " + std::to_string(i);
    if (!c.cloud_label || *c.cloud_label < 0 || *c.cloud_label >= classes) {
      throw ValidationError(where + " has a missing or out-of-range class label");
    }
    if (task == Task::segmentation) {
      if (c.point_labels.size() != c.size()) throw ValidationError(where + " lacks per-point labels");
      for (int l : c.point_labels) {
        if (l < 0 || l >= parts) throw ValidationError(where + " has part label " + std::to_string(l) + " out of range");
      }
    }
  }
}

const char* primitive_name(Primitive p) {
  switch (p) {
    case Primitive::sphere: return "sphere";
    case Primitive::cube: return "cube";
    case Primitive::ring: return "ring";
  }
  return "?";
}

Primitive parse_primitive(const std::string& name) {
  for (Primitive p : {Primitive::sphere, Primitive::cube, Primitive::ring}) {
    if (name == primitive_name(p)) return p;
  }
  throw ValidationError("unknown shape class '" + name + "' (expected sphere, cube or ring)");
}

Dataset gen_shapes(const std::vector<Primitive>& classes, std::size_t per_class, std::size_t n_points,
                   double noise_sigma, Rng& rng) {
  if (n_points < 8) throw ValidationError("gen_shapes: n_points must be >= 8");
  if (classes.empty()) throw ValidationError("gen_shapes: no classes");
  if (!(noise_sigma >= 0.0)) throw ValidationError("gen_shapes: noise_sigma must be >= 0");
  Dataset data;
  data.task = Task::classification;
  for (Primitive p : classes) data.class_names.emplace_back(primitive_name(p));

  for (std::size_t c = 0; c < classes.size(); ++c) {
    for (std::size_t s = 0; s < per_class; ++s) {
      const double angle = rng.uniform(0.0, kTwoPi);
      const double cs = std::cos(angle), sn = std::sin(angle);
      std::vector<Point> pts(n_points);
      double max_norm = 0.0;
      for (Point& p : pts) {
        switch (classes[c]) {
          case Primitive::sphere: p = on_sphere(rng); break;
          case Primitive::cube: p = on_box(rng, 1.0, -1.0); break;
          case Primitive::ring: p = on_ring(rng, 0.75, 0.25); break;
        }
        if (noise_sigma > 0.0) {
          for (double& v : p) v += rng.normal(0.0, noise_sigma);
        }
        rotate_z(p, cs, sn);
        max_norm = std::max(max_norm, std::sqrt(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]));
      }
      PointSet cloud(Tensor(Shape{n_points, 3}));
      for (std::size_t i = 0; i < n_points; ++i) {
        for (std::size_t j = 0; j < 3; ++j) cloud.coords[i * 3 + j] = pts[i][j] / max_norm;
      }
      cloud.cloud_label = static_cast<int>(c);
      data.clouds.push_back(std::move(cloud));
      data.split.push_back(Split::train);
    }
  }
  return data;
}

std::vector<double> part_target_fractions() {
  return {kHeadFraction, 1.0 - kHeadFraction, kHeadFraction, 1.0 - kHeadFraction};
}

Dataset gen_parts(std::size_t per_class, std::size_t n_points, Rng& rng) {
  if (n_points < 8) throw ValidationError("gen_parts: n_points must be >= 8");
  Dataset data;
  data.task = Task::segmentation;
  data.class_names = {"sphere_on_stem", "box_on_stem"};
  data.part_names = {"sphere", "sphere_stem", "box", "box_stem"};
  data.category_parts = {{0, 1}, {2, 3}};
  for (int cat = 0; cat < 2; ++cat) {
    for (std::size_t s = 0; s < per_class; ++s) {
      const double angle = rng.uniform(0.0, kTwoPi);
      const double cs = std::cos(angle), sn = std::sin(angle);
      PointSet cloud(Tensor(Shape{n_points, 3}));
      cloud.cloud_label = cat;
      cloud.point_labels.resize(n_points);
      for (std::size_t i = 0; i < n_points; ++i) {
        const bool head = rng.uniform() < kHeadFraction;
        Point p = part_point(cat, head, rng);
        rotate_z(p, cs, sn);
        for (std::size_t j = 0; j < 3; ++j) cloud.coords[i * 3 + j] = p[j];
        cloud.point_labels[i] = 2 * cat + (head ? 0 : 1);
      }
      data.clouds.push_back(std::move(cloud));
      data.split.push_back(Split::train);
    }
  }
  return data;
}

void stratified_split(Dataset& data, std::size_t test_per_class, Rng& rng) {
  std::vector<std::vector<std::size_t>> by_class(data.class_names.size());
  for (std::size_t i = 0; i < data.clouds.size(); ++i) {
    const int label = data.clouds[i].cloud_label.value_or(-1);
    if (label < 0 || static_cast<std::size_t>(label) >= by_class.size()) {
      throw ValidationError("stratified_split: cloud " + std::to_string(i) + " has no valid class label");
    }
    by_class[static_cast<std::size_t>(label)].push_back(i);
  }
  data.split.assign(data.clouds.size(), Split::train);
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    auto& members = by_class[c];
    if (members.size() < test_per_class) {
      throw ValidationError("stratified_split: class " + data.class_names[c] + " has only " +
                            std::to_string(members.size()) + " clouds");
    }
    rng.shuffle(std::span<std::size_t>(members));
    for (std::size_t i = 0; i < test_per_class; ++i) data.split[members[i]] = Split::test;
  }
}

void write_dataset(const std::string& dir, const Dataset& data) {
  data.validate();
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory '" + dir + "': " + ec.message());

  nlohmann::ordered_json manifest;
  manifest["format"] = "xconv-dataset";
  manifest["version"] = 1;
  manifest["seed"] = data.seed;
  manifest["task"] = data.task == Task::classification ? "classification" : "segmentation";
  manifest["class_names"] = data.class_names;
  manifest["part_names"] = data.part_names;
  manifest["category_parts"] = data.category_parts;
  auto& list = manifest["clouds"] = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < data.clouds.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "cloud_%05zu.xpc", i);
    write_cloud((fs::path(dir) / name).string(), data.clouds[i]);
    list.push_back({{"file", name}, {"label", *data.clouds[i].cloud_label}, {"split", split_name(data.split[i])}});
  }
  const std::string path = (fs::path(dir) / "manifest.json").string();
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << manifest.dump(2) << '\n';
  if (!out) throw IoError("write failed for '" + path + "'");
}

Dataset read_dataset(const std::string& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) throw IoError("cannot open '" + manifest_path + "' for reading");
  nlohmann::json m;
  try {
    m = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError("manifest '" + manifest_path + "' is not valid JSON", e.byte);
  }
  Dataset data;
  try {
    if (m.at("format") != "xconv-dataset") manifest_error(manifest_path, "unknown format");
    if (m.at("version") != 1) manifest_error(manifest_path, "unsupported version");
    data.seed = m.value("seed", std::uint64_t{0});
    const std::string task = m.at("task");
    if (task == "classification") {
      data.task = Task::classification;
    } else if (task == "segmentation") {
      data.task = Task::segmentation;
    } else {
      manifest_error(manifest_path, "unknown task '" + task + "'");
    }
    data.class_names = m.at("class_names").get<std::vector<std::string>>();
    data.part_names = m.value("part_names", std::vector<std::string>{});
    data.category_parts = m.value("category_parts", std::vector<std::vector<int>>{});
    const fs::path base = fs::path(manifest_path).parent_path();
    for (const auto& entry : m.at("clouds")) {
      PointSet cloud = read_cloud((base / entry.at("file").get<std::string>()).string());
      cloud.cloud_label = entry.at("label").get<int>();
      const std::string split = entry.at("split");
      if (split != "train" && split != "test") manifest_error(manifest_path, "unknown split '" + split + "'");
      data.clouds.push_back(std::move(cloud));
      data.split.push_back(split == "train" ? Split::train : Split::test);
    }
  } catch (const nlohmann::json::exception& e) {
    manifest_error(manifest_path, e.what());
  }
  data.validate();
  return data;
}

}  // namespace xconv
