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

#include "xconv/network.hpp"

// Run configuration. Files are JSON; the schema is documented in
// docs/config.md. Unknown keys are rejected at every level.
namespace xconv {

struct OptimizerConfig {
  double lr = 0.01;
  double lr_decay = 1.0;  // multiplied into lr after every epoch
  std::size_t batch_size = 16;
  std::size_t epochs = 20;
};

struct AugmentConfig {
  bool enabled = true;
  std::size_t target_points = 0;  // 0: the network's input_points
};

struct PathsConfig {
  std::string dataset;         // manifest.json
  std::string checkpoint_dir;  // best.ckpt and last.ckpt
  std::string metrics;         // per-epoch key=value lines
};

struct EvalConfig {
  std::size_t passes = 10;  // segmentation multipass r
};

struct FeatureConfig {
  std::size_t reps = 15;
  std::size_t draws = 32;
  int layer = -1;  // conv layer to analyze; negative counts from the end
};

struct RunConfig {
  NetworkSpec network;
  OptimizerConfig optimizer;
  AugmentConfig augmentation;
  PathsConfig paths;
  EvalConfig eval;
  FeatureConfig features;
  std::uint64_t seed = 0;

  /// Throws ConfigError.
  void validate() const;
};

/// Throws ConfigError naming the offending key path.
RunConfig parse_config(const std::string& json_text);
RunConfig load_config(const std::string& path);
/// Canonical JSON with every field spelled out; parse_config(to_json(c)) == c.
std::string config_to_json(const RunConfig& config);

}  // namespace xconv
