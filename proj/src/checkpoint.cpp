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

#include "xconv/checkpoint.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <set>

#include "xconv/binary_io.hpp"
#include "xconv/errors.hpp"

namespace xconv {

namespace {

constexpr char kMagic[4] = {'X', 'C', 'K', 'P'};
constexpr const char* kStepKey = "meta.adam_step";

void put_tensor(ByteWriter& out, const Tensor& t) {
  out.u32(static_cast<std::uint32_t>(t.rank()));
  for (std::size_t d : t.shape()) out.u32(static_cast<std::uint32_t>(d));
  for (double v : t.data()) out.f64(v);
}

Tensor get_tensor(ByteReader& in) {
  const std::uint32_t rank = in.u32();
  if (rank > 8) throw FormatError("implausible tensor rank " + std::to_string(rank), in.offset() - 4);
  Shape shape(rank);
  for (auto& d : shape) d = in.u32();
  const std::size_t n = shape_size(shape);
  if (n * 8 > in.remaining()) throw FormatError("truncated tensor data", in.offset());
  std::vector<double> data(n);
  for (auto& v : data) v = in.f64();
  return Tensor(std::move(shape), std::move(data));
}

}  // namespace

const CheckpointEntry* Checkpoint::find(const std::string& name) const {
  for (const auto& e : entries) {
    if (e.name == name) return &e;
  }
  return nullptr;
}

double Checkpoint::meta(const std::string& key, double fallback) const {
  const CheckpointEntry* e = find("meta." + key);
  return e && e->value.size() == 1 ? e->value[0] : fallback;
}

Checkpoint snapshot(const ParamStore& store, const std::map<std::string, double>& meta) {
  Checkpoint ckpt;
  std::uint64_t step = 0;
  for (const Parameter* p : store.all()) {
    ckpt.entries.push_back({p->name, p->value(), p->first_moment, p->second_moment});
    if (p->trainable) step = std::max(step, p->step);
  }
  auto add_meta = [&](const std::string& name, double v) {
    ckpt.entries.push_back({name, Tensor(Shape{1}, v), Tensor(Shape{1}, 0.0), Tensor(Shape{1}, 0.0)});
  };
  add_meta(kStepKey, static_cast<double>(step));
  for (const auto& [k, v] : meta) add_meta("meta." + k, v);
  return ckpt;
}

void write_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  ByteWriter out;
  out.bytes(kMagic, 4);
  out.u32(Checkpoint::kVersion);
  out.u32(static_cast<std::uint32_t>(ckpt.entries.size()));
  for (const auto& e : ckpt.entries) {
    out.u32(static_cast<std::uint32_t>(e.name.size()));
    out.bytes(e.name.data(), e.name.size());
    put_tensor(out, e.value);
    put_tensor(out, e.first_moment);
    put_tensor(out, e.second_moment);
  }
  out.save(path);
}

Checkpoint read_checkpoint(const std::string& path) {
  ByteReader in = ByteReader::load(path);
  char magic[4];
  in.bytes(magic, 4);
  if (std::memcmp(magic, kMagic, 4) != 0) throw FormatError("bad checkpoint magic in " + path, 0);
  const std::uint32_t version = in.u32();
  if (version != Checkpoint::kVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(version), 4);
  }
  const std::uint32_t count = in.u32();
  Checkpoint ckpt;
  for (std::uint32_t i = 0; i < count; ++i) {
    CheckpointEntry e;
    const std::uint32_t len = in.u32();
    if (len > in.remaining()) throw FormatError("truncated parameter name", in.offset());
    e.name.resize(len);
    in.bytes(e.name.data(), len);
    e.value = get_tensor(in);
    e.first_moment = get_tensor(in);
    e.second_moment = get_tensor(in);
    ckpt.entries.push_back(std::move(e));
  }
  if (in.remaining() != 0) throw FormatError("trailing bytes after checkpoint entries", in.offset());
  return ckpt;
}

void restore(ParamStore& store, const Checkpoint& ckpt) {
  std::vector<std::string> problems;
  std::set<std::string> seen;
  for (const auto& e : ckpt.entries) {
    if (e.name.rfind("meta.", 0) == 0) continue;
    seen.insert(e.name);
    const Parameter* p = store.find(e.name);
    if (!p) {
      problems.push_back("unexpected '" + e.name + "'");
    } else if (p->value().shape() != e.value.shape()) {
      problems.push_back("'" + e.name + "' shape " + shape_str(e.value.shape()) + " vs " +
                         shape_str(p->value().shape()));
    }
  }
  for (const Parameter* p : store.all()) {
    if (!seen.count(p->name)) problems.push_back("missing '" + p->name + "'");
  }
  if (!problems.empty()) {
    std::string msg = "checkpoint does not match network:";
    for (const auto& s : problems) msg += " " + s + ";";
    throw ValidationError(msg);
  }
  const auto step = static_cast<std::uint64_t>(ckpt.meta("adam_step", 0.0));
  for (const auto& e : ckpt.entries) {
    Parameter* p = store.find(e.name);
    if (!p) continue;
    p->value() = e.value;
    p->first_moment = e.first_moment;
    p->second_moment = e.second_moment;
    p->step = p->trainable ? step : 0;
    p->node->zero_grad();
  }
}

}  // namespace xconv
