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
#include <map>
#include <string>
#include <vector>

#include "xconv/param.hpp"

namespace xconv {

/// "XCKP" checkpoint file.
///
///   magic "XCKP" | version u32 | entry count u32
///   per entry: name length u32, UTF-8 name,
///              value   (rank u32, dims u32 x rank, f64 LE x size),
///              moment1 (same layout), moment2 (same layout)
///
/// Every parameter of a ParamStore is written, buffers included (their moments
/// are zero). The optimizer step and trainer bookkeeping travel as extra named
/// entries whose names start with "meta.".
struct CheckpointEntry {
  std::string name;
  Tensor value;
  Tensor first_moment;
  Tensor second_moment;
};

struct Checkpoint {
  static constexpr std::uint32_t kVersion = 1;

  std::vector<CheckpointEntry> entries;

  const CheckpointEntry* find(const std::string& name) const;
  /// Scalar metadata value; `fallback` when absent.
  double meta(const std::string& key, double fallback) const;
};

Checkpoint snapshot(const ParamStore& store, const std::map<std::string, double>& meta = {});
void write_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint read_checkpoint(const std::string& path);

/// Loads values, moments and the ADAM step counter into `store`. Throws
/// ValidationError naming every parameter that is missing, extra or
/// differently shaped.
void restore(ParamStore& store, const Checkpoint& ckpt);

}  // namespace xconv
