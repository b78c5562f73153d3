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

// xconv command-line driver: gen-data, train, eval, ablate, features.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "xconv/checkpoint.hpp"
#include "xconv/config.hpp"
#include "xconv/dataset.hpp"
#include "xconv/errors.hpp"
#include "xconv/trainer.hpp"

namespace fs = std::filesystem;
using namespace xconv;

namespace {

enum Exit { kOk = 0, kOther = 1, kConfig = 2, kData = 3, kNumeric = 4 };

std::size_t worker_threads() {
  std::size_t n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("XCONV_THREADS")) {
    char* end = nullptr;
    const unsigned long cap = std::strtoul(env, &end, 10);
    if (end == env || *end != '\0' || cap == 0) throw ConfigError("XCONV_THREADS must be a positive integer");
    n = std::min<std::size_t>(n, cap);
  }
  return n;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, ',');) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << text;
  if (!out) throw IoError("write failed for '" + path + "'");
}

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string checkpoint;
  std::string out;
};

RunConfig load(const Common& c) {
  if (c.config.empty()) throw ConfigError("--config is required");
  RunConfig cfg = load_config(c.config);
  if (c.seed) cfg.seed = *c.seed;
  // paths inside a config file are relative to that file
  for (std::string* p : {&cfg.paths.dataset, &cfg.paths.checkpoint_dir, &cfg.paths.metrics}) {
    if (!p->empty() && fs::path(*p).is_relative()) *p = (fs::path(c.config).parent_path() / *p).string();
  }
  return cfg;
}

Dataset load_data(const RunConfig& cfg) {
  if (cfg.paths.dataset.empty()) throw ConfigError("paths.dataset is not set");
  return read_dataset(cfg.paths.dataset);
}

struct GenArgs {
  std::string task = "classification";
  std::string classes = "sphere,cube,ring";
  std::size_t per_class = 70;
  std::size_t points = 256;
  double noise = 0.01;
  std::size_t test_per_class = 20;
};

int cmd_gen_data(const Common& c, const GenArgs& g) {
  if (c.out.empty()) throw ConfigError("--out is required");
  Rng rng(c.seed.value_or(0));
  Dataset data;
  if (g.task == "classification") {
    std::vector<Primitive> classes;
    for (const std::string& name : split_list(g.classes)) classes.push_back(parse_primitive(name));
    data = gen_shapes(classes, g.per_class, g.points, g.noise, rng);
  } else if (g.task == "segmentation") {
    data = gen_parts(g.per_class, g.points, rng);
  } else {
    throw ConfigError("--task must be classification or segmentation");
  }
  if (g.test_per_class) stratified_split(data, g.test_per_class, rng);
  data.seed = c.seed.value_or(0);
  write_dataset(c.out, data);
  std::cout << "clouds=" << data.clouds.size() << " seed=" << data.seed << " manifest="
            << (fs::path(c.out) / "manifest.json").string() << '\n';
  return kOk;
}

int cmd_train(const Common& c, bool no_augment) {
  RunConfig cfg = load(c);
  if (no_augment) cfg.augmentation.enabled = false;
  if (!c.out.empty()) cfg.paths.metrics = c.out;
  const Dataset data = load_data(cfg);
  Trainer trainer(cfg, data, Variant::full, worker_threads());
  if (!c.checkpoint.empty()) trainer.resume(c.checkpoint);
  for (const EpochRecord& r : trainer.train()) std::cout << format_epoch(r, cfg.seed, Variant::full) << '\n';
  return kOk;
}

std::unique_ptr<PointCNN> load_model(const RunConfig& cfg, const std::string& path) {
  auto net = std::make_unique<PointCNN>(cfg.network, Variant::full, 0);
  const Checkpoint ck = read_checkpoint(path);
  if (ck.meta("variant", 0.0) != 0.0) throw ValidationError("checkpoint '" + path + "' holds an ablated model");
  restore(net->params(), ck);
  return net;
}

int cmd_eval(const Common& c, std::optional<std::size_t> passes, const std::string& split) {
  const RunConfig cfg = load(c);
  if (c.checkpoint.empty()) throw ConfigError("--checkpoint is required");
  const Dataset data = load_data(cfg);
  const auto net = load_model(cfg, c.checkpoint);
  std::vector<std::size_t> ids = data.indices(split == "train" ? Split::train : Split::test);
  if (ids.empty()) throw ValidationError("dataset has no " + split + " clouds");
  const Metrics m = evaluate(*net, data, ids, passes.value_or(cfg.eval.passes), stream_seed(cfg.seed, Stream::eval, 0, 1));
  write_text(c.out, "seed=" + std::to_string(cfg.seed) + "\nsplit=" + split + "\n" + format_metrics(m, cfg.network.task));
  return kOk;
}

int cmd_ablate(const Common& c, const std::string& seeds_arg) {
  const RunConfig cfg = load(c);
  const Dataset data = load_data(cfg);
  std::vector<std::uint64_t> seeds;
  for (const std::string& s : split_list(seeds_arg)) {
    try {
      std::size_t used = 0;
      seeds.push_back(std::stoull(s, &used));
      if (used != s.size()) throw std::invalid_argument(s);
    } catch (const std::exception&) {
      throw ConfigError("--seeds: '" + s + "' is not an unsigned integer");
    }
  }
  const AblationReport report = run_ablation(cfg, data, seeds, worker_threads());
  write_text(c.out, format_ablation(report, cfg));
  return kOk;
}

int cmd_features(const Common& c, std::optional<std::size_t> reps, std::optional<std::size_t> draws,
                 const std::string& ablated_path) {
  RunConfig cfg = load(c);
  if (c.checkpoint.empty()) throw ConfigError("--checkpoint is required");
  if (reps) cfg.features.reps = *reps;
  if (draws) cfg.features.draws = *draws;
  const Dataset data = load_data(cfg);
  const auto full = load_model(cfg, c.checkpoint);
  std::unique_ptr<PointCNN> ablated;
  if (!ablated_path.empty()) {
    ablated = std::make_unique<PointCNN>(cfg.network, Variant::ablated, 0);
    restore(ablated->params(), read_checkpoint(ablated_path));
  }
  std::vector<PointSet> clouds = data.subset(Split::test);
  if (clouds.empty()) clouds = data.subset(Split::train);
  const ConcentrationReport report =
      analyze_features(*full, ablated.get(), clouds, cfg.features, cfg.seed);
  if (!c.out.empty()) write_feature_dump(c.out, report);
  std::printf("seed=%llu reps=%zu draws=%zu layer=%zu acc_star=%.9g acc_x=%.9g acc_o=%.9g\n",
              static_cast<unsigned long long>(cfg.seed), report.reps, report.draws, report.layer, report.acc_star,
              report.acc_x, report.acc_o);
  return kOk;
}

int fail(int code, const char* kind, const std::string& what) {
  std::string line = what;
  for (char& ch : line) {
    if (ch == '\n' || ch == '\r') ch = ' ';
  }
  std::cerr << "error: " << kind << ": " << line << '\n';
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"X-Conv point cloud toolkit"};
  app.require_subcommand(1);

  Common common;
  auto add_common = [&common](CLI::App* sub) {
    sub->add_option("--config", common.config, "run configuration (JSON)");
    sub->add_option("--seed", common.seed, "run seed, overrides the config");
    sub->add_option("--checkpoint", common.checkpoint, "checkpoint to load or resume from");
    sub->add_option("--out", common.out, "output path");
  };

  GenArgs gen;
  CLI::App* gen_cmd = app.add_subcommand("gen-data", "generate a synthetic dataset");
  add_common(gen_cmd);
  gen_cmd->add_option("--task", gen.task, "classification or segmentation");
  gen_cmd->add_option("--classes", gen.classes, "comma-separated primitives (sphere, cube, ring)");
  gen_cmd->add_option("--per-class", gen.per_class, "clouds per class");
  gen_cmd->add_option("--points", gen.points, "points per cloud");
  gen_cmd->add_option("--noise", gen.noise, "coordinate noise sigma");
  gen_cmd->add_option("--test-per-class", gen.test_per_class, "clouds per class held out for testing");

  bool no_augment = false;
  CLI::App* train_cmd = app.add_subcommand("train", "train a network");
  add_common(train_cmd);
  train_cmd->add_flag("--no-augment", no_augment, "disable Gaussian resampling");

  std::optional<std::size_t> passes;
  std::string split = "test";
  CLI::App* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint");
  add_common(eval_cmd);
  eval_cmd->add_option("--passes", passes, "segmentation multipass count");
  eval_cmd->add_option("--split", split, "test or train")->check(CLI::IsMember({"test", "train"}));

  std::string seeds = "1,2,3";
  CLI::App* ablate_cmd = app.add_subcommand("ablate", "train full and ablated networks on paired seeds");
  add_common(ablate_cmd);
  ablate_cmd->add_option("--seeds", seeds, "comma-separated seeds");

  std::optional<std::size_t> reps, draws;
  std::string ablated;
  CLI::App* feat_cmd = app.add_subcommand("features", "export features and the concentration metric");
  add_common(feat_cmd);
  feat_cmd->add_option("--reps", reps, "representative points");
  feat_cmd->add_option("--draws", draws, "neighbor orderings per representative");
  feat_cmd->add_option("--ablated", ablated, "checkpoint of the ablated model");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail(kConfig, "usage", e.what());
  }

  try {
    if (*gen_cmd) return cmd_gen_data(common, gen);
    if (*train_cmd) return cmd_train(common, no_augment);
    if (*eval_cmd) return cmd_eval(common, passes, split);
    if (*ablate_cmd) return cmd_ablate(common, seeds);
    if (*feat_cmd) return cmd_features(common, reps, draws, ablated);
  } catch (const ConfigError& e) {
    return fail(kConfig, "config", e.what());
  } catch (const FormatError& e) {
    return fail(kData, "format", e.what());
  } catch (const IoError& e) {
    return fail(kData, "io", e.what());
  } catch (const ValidationError& e) {
    return fail(kData, "validation", e.what());
  } catch (const DimensionError& e) {
    return fail(kData, "dimension", e.what());
  } catch (const NumericError& e) {
    return fail(kNumeric, "numeric", e.what());
  } catch (const std::exception& e) {
    return fail(kOther, "internal", e.what());
  }
  return kOther;
}
