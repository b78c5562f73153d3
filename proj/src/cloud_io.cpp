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

#include "xconv/cloud_io.hpp"

#include <cctype>
#include <charconv>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>

#include "xconv/binary_io.hpp"
#include "xconv/errors.hpp"

namespace xconv {

namespace {

constexpr char kMagic[4] = {'X', 'P', 'C', '1'};

std::uint32_t checked_label(int label) {
  if (label < 0) throw ValidationError("cannot store negative label " + std::to_string(label));
  return static_cast<std::uint32_t>(label);
}

int to_label(std::uint32_t v, std::size_t offset) {
  if (v > static_cast<std::uint32_t>(std::numeric_limits<int>::max())) {
    throw FormatError("label " + std::to_string(v) + " out of range", offset);
  }
  return static_cast<int>(v);
}

// Whitespace tokenizer that remembers where each token started.
class TextCursor {
 public:
  explicit TextCursor(std::string_view text) : text_(text) {}

  bool at_end() {
    skip_space();
    return pos_ >= text_.size();
  }
  // Only spaces and tabs; stops at a newline.
  bool line_has_more() {
    while (pos_ < text_.size() && (text_[pos_] == ' ' || text_[pos_] == '\t' || text_[pos_] == '\r')) ++pos_;
    return pos_ < text_.size() && text_[pos_] != '\n';
  }

  std::size_t offset() const { return pos_; }

  double number() {
    const std::string_view tok = token("number");
    double v = 0.0;
    auto [end, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || end != tok.data() + tok.size()) {
      throw FormatError("invalid number '" + std::string(tok) + "'", start_);
    }
    return v;
  }

  std::uint32_t count(const char* what) {
    const std::string_view tok = token(what);
    std::uint32_t v = 0;
    auto [end, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || end != tok.data() + tok.size()) {
      throw FormatError(std::string("invalid ") + what + " '" + std::string(tok) + "'", start_);
    }
    return v;
  }

  void end_line(const char* what) {
    if (line_has_more()) throw FormatError(std::string("unexpected extra value on ") + what + " line", pos_);
  }

 private:
  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }
  std::string_view token(const char* what) {
    skip_space();
    if (pos_ >= text_.size()) throw FormatError(std::string("unexpected end of text, expected ") + what, pos_);
    start_ = pos_;
    while (pos_ < text_.size() && !std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    return text_.substr(start_, pos_ - start_);
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  std::size_t start_ = 0;
};

}  // namespace

LabelMode label_mode_of(const PointSet& cloud) {
  if (!cloud.point_labels.empty()) return LabelMode::per_point;
  if (cloud.cloud_label) return LabelMode::per_cloud;
  return LabelMode::none;
}

std::vector<unsigned char> encode_cloud(const PointSet& cloud) {
  cloud.validate();
  const LabelMode mode = label_mode_of(cloud);
  ByteWriter w;
  w.bytes(kMagic, 4);
  w.u32(kCloudFormatVersion);
  w.u32(static_cast<std::uint32_t>(cloud.size()));
  w.u32(static_cast<std::uint32_t>(cloud.dim()));
  w.u32(static_cast<std::uint32_t>(cloud.channels()));
  w.u32(static_cast<std::uint32_t>(mode));
  for (double v : cloud.coords.data()) w.f32(static_cast<float>(v));
  for (double v : cloud.features.data()) w.f32(static_cast<float>(v));
  if (mode == LabelMode::per_cloud) w.u32(checked_label(*cloud.cloud_label));
  if (mode == LabelMode::per_point) {
    for (int l : cloud.point_labels) w.u32(checked_label(l));
  }
  return w.buffer();
}

PointSet decode_cloud(const std::vector<unsigned char>& bytes) {
  ByteReader r(bytes);
  char magic[4];
  r.bytes(magic, 4);
  if (std::memcmp(magic, kMagic, 4) != 0) throw FormatError("bad magic, expected XPC1", 0);
  const std::size_t version_at = r.offset();
  if (r.u32() != kCloudFormatVersion) throw FormatError("unsupported XPC1 version", version_at);
  const std::size_t n = r.u32(), dim = r.u32(), c = r.u32();
  const std::size_t mode_at = r.offset();
  const std::uint32_t mode = r.u32();
  if (mode > 2) throw FormatError("invalid label mode " + std::to_string(mode), mode_at);
  if (dim != 2 && dim != 3) throw FormatError("point dimension must be 2 or 3", 12);

  // Size check before allocating, so a corrupt header cannot request gigabytes.
  const std::size_t labels = mode == 2 ? n : (mode == 1 ? 1 : 0);
  const std::size_t needed = 4 * (n * dim + n * c + labels);
  if (needed > r.remaining()) {
    throw FormatError("truncated input: header promises " + std::to_string(needed) + " payload bytes, " +
                          std::to_string(r.remaining()) + " present",
                      r.offset() + r.remaining());
  }

  PointSet cloud;
  cloud.coords = Tensor(Shape{n, dim});
  cloud.features = Tensor(Shape{n, c});
  for (auto& v : cloud.coords.data()) v = r.f32();
  for (auto& v : cloud.features.data()) v = r.f32();
  if (mode == 1) {
    const std::size_t at = r.offset();
    cloud.cloud_label = to_label(r.u32(), at);
  } else if (mode == 2) {
    cloud.point_labels.resize(n);
    for (auto& l : cloud.point_labels) {
      const std::size_t at = r.offset();
      l = to_label(r.u32(), at);
    }
  }
  if (r.remaining() != 0) throw FormatError("trailing bytes after cloud", r.offset());
  return cloud;
}

std::string format_cloud_text(const PointSet& cloud) {
  cloud.validate();
  const LabelMode mode = label_mode_of(cloud);
  std::string out = std::to_string(cloud.size()) + " " + std::to_string(cloud.dim()) + " " +
                    std::to_string(cloud.channels()) + " " + std::to_string(static_cast<int>(mode));
  if (mode == LabelMode::per_cloud) out += " " + std::to_string(checked_label(*cloud.cloud_label));
  out += '\n';
  char buf[32];
  auto put = [&](double v, bool first) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    if (!first) out += ' ';
    out += buf;
  };
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    bool first = true;
    for (double v : cloud.coords.row(i)) {
      put(v, first);
      first = false;
    }
    for (double v : cloud.features.row(i)) put(v, false);
    if (mode == LabelMode::per_point) out += " " + std::to_string(checked_label(cloud.point_labels[i]));
    out += '\n';
  }
  return out;
}

PointSet parse_cloud_text(std::string_view text) {
  TextCursor cur(text);
  const std::size_t n = cur.count("point count");
  const std::size_t dim_at = cur.offset();
  const std::size_t dim = cur.count("dimension");
  if (dim != 2 && dim != 3) throw FormatError("point dimension must be 2 or 3", dim_at);
  const std::size_t c = cur.count("channel count");
  const std::size_t mode_at = cur.offset();
  const std::uint32_t mode = cur.count("label mode");
  if (mode > 2) throw FormatError("invalid label mode " + std::to_string(mode), mode_at);
  PointSet cloud;
  if (mode == 1) {
    const std::size_t at = cur.offset();
    cloud.cloud_label = to_label(cur.count("cloud label"), at);
  }
  cur.end_line("header");

  cloud.coords = Tensor(Shape{n, dim});
  cloud.features = Tensor(Shape{n, c});
  if (mode == 2) cloud.point_labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (auto& v : cloud.coords.row(i)) v = cur.number();
    for (auto& v : cloud.features.row(i)) v = cur.number();
    if (mode == 2) {
      const std::size_t at = cur.offset();
      cloud.point_labels[i] = to_label(cur.count("point label"), at);
    }
    cur.end_line("point");
  }
  if (!cur.at_end()) throw FormatError("more point lines than the header declares", cur.offset());
  return cloud;
}

void write_cloud(const std::string& path, const PointSet& cloud) {
  ByteWriter w;
  const auto bytes = encode_cloud(cloud);
  w.bytes(bytes.data(), bytes.size());
  w.save(path);
}

void write_cloud_text(const std::string& path, const PointSet& cloud) {
  const std::string text = format_cloud_text(cloud);
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << text;
  if (!out) throw IoError("write failed for '" + path + "'");
}

PointSet read_cloud(const std::string& path) {
  const ByteReader r = ByteReader::load(path);
  const auto& bytes = r.buffer();
  std::size_t first = 0;
  while (first < bytes.size() && std::isspace(bytes[first])) ++first;
  if (first < bytes.size() && std::isdigit(bytes[first])) {
    return parse_cloud_text(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
  }
  return decode_cloud(bytes);
}

}  // namespace xconv
