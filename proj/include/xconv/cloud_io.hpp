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
#include <string_view>
#include <vector>

#include "xconv/geometry.hpp"

// Point cloud files.
//
// Binary "XPC1" layout, little-endian:
//   magic "XPC1", u32 version (1), u32 N, u32 Dim, u32 C, u32 label_mode,
//   N*Dim f32 coordinates, N*C f32 features (both row-major), then labels:
//   none (mode 0), one u32 (mode 1, per cloud) or N u32 (mode 2, per point).
//
// Text layout: a header line "N Dim C label_mode", with the cloud label as a
// fifth token when label_mode is 1, then one line per point holding Dim
// coordinates, C features and, for label_mode 2, the point's label.
namespace xconv {

enum class LabelMode : std::uint32_t { none = 0, per_cloud = 1, per_point = 2 };

inline constexpr std::uint32_t kCloudFormatVersion = 1;

/// Per-point labels win over a cloud label when both are present.
LabelMode label_mode_of(const PointSet& cloud);

std::vector<unsigned char> encode_cloud(const PointSet& cloud);
/// Throws FormatError (with the failing offset) on bad magic, unsupported
/// version, truncation or trailing bytes.
PointSet decode_cloud(const std::vector<unsigned char>& bytes);

std::string format_cloud_text(const PointSet& cloud);
PointSet parse_cloud_text(std::string_view text);

/// Binary format. Throws IoError when the path is not writable.
void write_cloud(const std::string& path, const PointSet& cloud);
void write_cloud_text(const std::string& path, const PointSet& cloud);
/// Reads either format, chosen by the leading bytes.
PointSet read_cloud(const std::string& path);

}  // namespace xconv
