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

#include "xconv/config.hpp"

#include <algorithm>
#include <fstream>
#include <initializer_list>
#include <iterator>
#include <type_traits>
#include <vector>

#include <json.hpp>

#include "xconv/errors.hpp"

namespace xconv {

using json = nlohmann::ordered_json;

namespace {

// Read-only view of one JSON object that tracks its key path and which keys
// were consumed, so leftovers can be reported as unknown.
class Node {
 public:
  Node(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail("expected an object");
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw ConfigError((path_.empty() ? std::string("config") : path_) + ": " + what);
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  const json* get(const std::string& key) {
    known_.push_back(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  Node child(const std::string& key) {
    const json* v = get(key);
    static const json empty = json::object();
    return Node(v ? *v : empty, sub(key));
  }

  std::vector<Node> array(const std::string& key) {
    std::vector<Node> out;
    const json* v = get(key);
    if (!v) return out;
    if (!v->is_array()) Node(json::object(), sub(key)).fail("expected an array");
    for (std::size_t i = 0; i < v->size(); ++i) out.emplace_back((*v)[i], sub(key) + "[" + std::to_string(i) + "]");
    return out;
  }

  template <class T>
  void read(const std::string& key, T& out) {
    const json* v = get(key);
    if (!v) return;
    try {
      if constexpr (std::is_same_v<T, bool>) {
        if (!v->is_boolean()) throw std::invalid_argument("expected true or false");
      } else if constexpr (std::is_unsigned_v<T>) {
        if (!v->is_number_unsigned()) throw std::invalid_argument("expected a non-negative integer");
      } else if constexpr (std::is_integral_v<T>) {
        if (!v->is_number_integer()) throw std::invalid_argument("expected an integer");
      } else if constexpr (std::is_floating_point_v<T>) {
        if (!v->is_number()) throw std::invalid_argument("expected a number");
      } else if constexpr (std::is_same_v<T, std::vector<std::size_t>>) {
        if (!v->is_array()) throw std::invalid_argument("expected an array of non-negative integers");
        for (const auto& e : *v) {
          if (!e.is_number_unsigned()) throw std::invalid_argument("expected an array of non-negative integers");
        }
      } else {
        if (!v->is_string()) throw std::invalid_argument("expected a string");
      }
      out = v->get<T>();
    } catch (const std::exception& e) {
      throw ConfigError(sub(key) + ": " + e.what());
    }
  }

  std::string choice(const std::string& key, std::initializer_list<const char*> options, const std::string& fallback) {
    std::string v = fallback;
    read(key, v);
    for (const char* o : options) {
      if (v == o) return v;
    }
    std::string list;
    for (const char* o : options) list += (list.empty() ? "" : ", ") + std::string(o);
    throw ConfigError(sub(key) + ": '" + v + "' is not one of " + list);
  }

  /// Call after every read; rejects keys nobody asked for.
  void done() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (std::find(known_.begin(), known_.end(), it.key()) == known_.end()) {
        throw ConfigError(sub(it.key()) + ": unknown key");
      }
    }
  }

 private:
  std::string sub(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  const json& j_;
  std::string path_;
  std::vector<std::string> known_;
};

XConvSpec parse_layer(Node& n, Task task) {
  XConvSpec s;
  n.read("k", s.k);
  n.read("d", s.d);
  n.read("n_out", s.n_out);
  n.read("c_out", s.c_out);
  n.read("c_delta", s.c_delta);
  n.read("with_global", s.with_global);
  const char* def = task == Task::classification ? "random" : "fps";
  s.sampler = n.choice("sampler", {"random", "fps"}, def) == "fps" ? Sampler::fps : Sampler::random;
  return s;
}

json layer_json(const XConvSpec& s) {
  return {{"k", s.k},
          {"d", s.d},
          {"n_out", s.n_out},
          {"c_out", s.c_out},
          {"c_delta", s.c_delta},
          {"with_global", s.with_global},
          {"sampler", s.sampler == Sampler::fps ? "fps" : "random"}};
}

}  // namespace

void RunConfig::validate() const {
  if (!(optimizer.lr > 0.0)) throw ConfigError("optimizer.lr must be > 0");
  if (!(optimizer.lr_decay > 0.0 && optimizer.lr_decay <= 1.0)) throw ConfigError("optimizer.lr_decay must be in (0, 1]");
  if (optimizer.batch_size < 1) throw ConfigError("optimizer.batch_size must be >= 1");
  if (eval.passes < 1) throw ConfigError("eval.passes must be >= 1");
  if (features.reps < 1) throw ConfigError("features.reps must be >= 1");
  network.validate();
}

RunConfig parse_config(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError("config is not valid JSON (byte " + std::to_string(e.byte) + ")");
  }
  RunConfig c;
  Node top(root, "");
  top.read("seed", c.seed);

  {
    Node n = top.child("network");
    NetworkSpec& s = c.network;
    s.task = n.choice("task", {"classification", "segmentation"}, "classification") == "classification"
                 ? Task::classification
                 : Task::segmentation;
    n.read("dim", s.dim);
    n.read("input_channels", s.input_channels);
    n.read("input_points", s.input_points);
    n.read("num_classes", s.num_classes);
    n.read("skip_links", s.skip_links);
    for (Node& l : n.array("conv")) {
      s.conv.push_back(parse_layer(l, s.task));
      l.done();
    }
    for (Node& l : n.array("deconv")) {
      DeconvSpec d;
      d.layer = parse_layer(l, s.task);
      l.read("mirror", d.mirror);
      s.deconv.push_back(d);
      l.done();
    }
    Node fc = n.child("fc");
    fc.read("widths", s.fc_widths);
    fc.read("dropout", s.dropout);
    fc.read("dropout_rate", s.dropout_rate);
    fc.done();
    n.done();
    s.resolve();
  }
  {
    Node n = top.child("optimizer");
    n.read("lr", c.optimizer.lr);
    n.read("lr_decay", c.optimizer.lr_decay);
    n.read("batch_size", c.optimizer.batch_size);
    n.read("epochs", c.optimizer.epochs);
    n.done();
  }
  {
    Node n = top.child("augmentation");
    n.read("enabled", c.augmentation.enabled);
    n.read("target_points", c.augmentation.target_points);
    n.done();
  }
  {
    Node n = top.child("paths");
    n.read("dataset", c.paths.dataset);
    n.read("checkpoint_dir", c.paths.checkpoint_dir);
    n.read("metrics", c.paths.metrics);
    n.done();
  }
  {
    Node n = top.child("eval");
    n.read("passes", c.eval.passes);
    n.done();
  }
  {
    Node n = top.child("features");
    n.read("reps", c.features.reps);
    n.read("draws", c.features.draws);
    n.read("layer", c.features.layer);
    n.done();
  }
  top.done();
  c.validate();
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config '" + path + "'");
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_config(text);
}

std::string config_to_json(const RunConfig& c) {
  const NetworkSpec& s = c.network;
  json conv = json::array(), deconv = json::array();
  for (const auto& l : s.conv) conv.push_back(layer_json(l));
  for (const auto& d : s.deconv) {
    json j = layer_json(d.layer);
    j["mirror"] = d.mirror;
    deconv.push_back(j);
  }
  json root = {
      {"seed", c.seed},
      {"network",
       {{"task", s.task == Task::classification ? "classification" : "segmentation"},
        {"dim", s.dim},
        {"input_channels", s.input_channels},
        {"input_points", s.input_points},
        {"num_classes", s.num_classes},
        {"skip_links", s.skip_links},
        {"conv", conv},
        {"deconv", deconv},
        {"fc", {{"widths", s.fc_widths}, {"dropout", s.dropout}, {"dropout_rate", s.dropout_rate}}}}},
      {"optimizer",
       {{"lr", c.optimizer.lr},
        {"lr_decay", c.optimizer.lr_decay},
        {"batch_size", c.optimizer.batch_size},
        {"epochs", c.optimizer.epochs}}},
      {"augmentation", {{"enabled", c.augmentation.enabled}, {"target_points", c.augmentation.target_points}}},
      {"paths",
       {{"dataset", c.paths.dataset}, {"checkpoint_dir", c.paths.checkpoint_dir}, {"metrics", c.paths.metrics}}},
      {"eval", {{"passes", c.eval.passes}}},
      {"features", {{"reps", c.features.reps}, {"draws", c.features.draws}, {"layer", c.features.layer}}},
  };
  return root.dump(2);
}

}  // namespace xconv
