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

#include "xconv/trainer.hpp"

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <limits>
#include <numeric>
#include <sstream>

#include "xconv/checkpoint.hpp"
#include "xconv/errors.hpp"

namespace xconv {

namespace fs = std::filesystem;
using ad::Mode;

namespace {

class Fnv1a {
 public:
  void add(const void* p, std::size_t n) {
    const auto* b = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h_ ^= b[i];
      h_ *= 0x100000001b3ULL;
    }
  }
  void add_u64(std::uint64_t v) { add(&v, sizeof v); }
  std::uint64_t value() const { return h_; }

 private:
  std::uint64_t h_ = 0xcbf29ce484222325ULL;
};

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

std::string hex(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, v);
  return buf;
}

const char* variant_name(Variant v) { return v == Variant::full ? "full" : "ablated"; }
const char* task_name(Task t) { return t == Task::classification ? "classification" : "segmentation"; }

std::vector<int> truth_of(const PointSet& c, Task task) {
  if (task == Task::classification) return {*c.cloud_label};
  return c.point_labels;
}

}  // namespace

std::uint64_t stream_seed(std::uint64_t run_seed, Stream s, std::uint64_t a, std::uint64_t b) {
  return derive_seed(run_seed, static_cast<std::uint64_t>(s), a, b);
}

std::string format_epoch(const EpochRecord& r, std::uint64_t seed, Variant variant) {
  std::string s = "epoch=" + std::to_string(r.epoch);
  s += " seed=" + std::to_string(seed);
  s += std::string(" variant=") + variant_name(variant);
  s += " lr=" + fmt(r.lr);
  s += " loss=" + fmt(r.loss);
  s += " train_acc=" + fmt(r.train_acc);
  s += " val_acc=" + fmt(r.val_acc);
  s += std::string(" val_split=") + (r.val_on_test ? "test" : "train");
  s += " clouds=" + std::to_string(r.clouds);
  s += " points=" + std::to_string(r.points);
  s += " data_hash=" + hex(r.data_hash);
  return s;
}

std::size_t min_points(const NetworkSpec& spec) {
  std::size_t m = 1;
  for (const auto& l : spec.conv) m = std::max(m, l.k * l.d);
  for (const auto& l : spec.deconv) m = std::max(m, l.layer.k * l.layer.d);
  return m;
}

Trainer::Trainer(RunConfig config, const Dataset& data, Variant variant, std::size_t threads)
    : config_(std::move(config)), data_(data), variant_(variant), threads_(std::max<std::size_t>(1, threads)) {
  config_.validate();
  data_.validate();
  if (config_.network.task != data_.task) throw ConfigError("network task does not match the dataset");
  if (config_.network.num_classes != data_.num_labels()) {
    throw ConfigError("network.num_classes=" + std::to_string(config_.network.num_classes) + " but the dataset has " +
                      std::to_string(data_.num_labels()) + " labels");
  }
  model_ = std::make_unique<PointCNN>(config_.network, variant_, stream_seed(config_.seed, Stream::init));
  lr_ = config_.optimizer.lr;
}

Trainer::~Trainer() = default;

void Trainer::resume(const std::string& checkpoint_path) {
  const Checkpoint ck = read_checkpoint(checkpoint_path);
  restore(model_->params(), ck);
  epoch_ = static_cast<std::size_t>(ck.meta("epoch", 0.0));
  lr_ = ck.meta("lr", config_.optimizer.lr);
  best_val_ = ck.meta("best_val", -1.0);
  best_epoch_ = static_cast<std::size_t>(ck.meta("best_epoch", 0.0));
  metrics_started_ = true;  // append to the existing metrics file
}

std::vector<Batch> Trainer::prepare_epoch(std::size_t epoch) const {
  std::vector<std::size_t> ids = data_.indices(Split::train);
  if (ids.empty()) throw ValidationError("dataset has no training clouds");
  Rng rng(stream_seed(config_.seed, Stream::data, epoch));
  rng.shuffle(std::span<std::size_t>(ids));
  const std::size_t target =
      config_.augmentation.target_points ? config_.augmentation.target_points : config_.network.input_points;
  ResampleBounds bounds;
  bounds.min_count = min_points(config_.network);

  std::vector<Batch> batches;
  for (std::size_t lo = 0; lo < ids.size(); lo += config_.optimizer.batch_size) {
    Batch b;
    Fnv1a h;
    for (std::size_t i = lo; i < std::min(ids.size(), lo + config_.optimizer.batch_size); ++i) {
      const PointSet& src = data_.clouds[ids[i]];
      b.cloud_ids.push_back(ids[i]);
      b.clouds.push_back(config_.augmentation.enabled ? gaussian_resample(src, target, rng, bounds) : src);
      const PointSet& c = b.clouds.back();
      h.add_u64(ids[i]);
      h.add_u64(c.size());
      h.add(c.coords.data().data(), c.coords.size() * sizeof(double));
    }
    b.hash = h.value();
    batches.push_back(std::move(b));
  }
  return batches;
}

double Trainer::train_step(std::span<const PointSet> clouds, std::uint64_t batch_seed, std::size_t* correct,
                           std::size_t* total) {
  Rng rng(batch_seed);
  const Task task = config_.network.task;
  const ForwardResult res = model_->forward(clouds, Mode::train, rng);
  const ad::Var loss = network_loss(res, clouds, task);
  const double value = loss->value.item();
  if (!std::isfinite(value)) {
    throw NumericError("non-finite training loss at epoch " + std::to_string(epoch_ + 1) + ", batch seed 0x" +
                       hex(batch_seed));
  }
  ad::backward(loss);
  const auto params = model_->params().trainable();
  adam_step(params, lr_);

  if (correct && total) {
    const std::vector<int> pred =
        argmax_rows(task == Task::classification ? average_logits(res) : res.logits->value);
    std::size_t at = 0;
    for (const PointSet& c : clouds) {
      for (int t : truth_of(c, task)) {
        *correct += pred[at++] == t;
        ++*total;
      }
    }
  }
  return value;
}

EpochRecord Trainer::run_epoch() { return run_epoch(prepare_epoch(epoch_ + 1)); }

EpochRecord Trainer::run_epoch(const std::vector<Batch>& batches) {
  EpochRecord r;
  r.epoch = epoch_ + 1;
  r.lr = lr_;
  Fnv1a epoch_hash;
  std::size_t correct = 0, total = 0;
  double loss_sum = 0.0;
  for (std::size_t b = 0; b < batches.size(); ++b) {
    loss_sum += train_step(batches[b].clouds, stream_seed(config_.seed, Stream::model, r.epoch, b), &correct, &total);
    epoch_hash.add_u64(batches[b].hash);
    r.clouds += batches[b].clouds.size();
    for (const PointSet& c : batches[b].clouds) r.points += c.size();
  }
  r.loss = batches.empty() ? 0.0 : loss_sum / static_cast<double>(batches.size());
  r.train_acc = total ? static_cast<double>(correct) / static_cast<double>(total) : 0.0;
  r.data_hash = epoch_hash.value();

  std::vector<std::size_t> val_ids = data_.indices(Split::test);
  r.val_on_test = !val_ids.empty();
  if (val_ids.empty()) val_ids = data_.indices(Split::train);
  r.val_acc = evaluate(*model_, data_, val_ids, 1, stream_seed(config_.seed, Stream::eval, r.epoch)).overall_accuracy;

  epoch_ = r.epoch;
  lr_ *= config_.optimizer.lr_decay;
  const bool improved = r.val_acc > best_val_;
  if (improved) {
    best_val_ = r.val_acc;
    best_epoch_ = r.epoch;
  }
  if (!config_.paths.checkpoint_dir.empty()) {
    std::error_code ec;
    fs::create_directories(config_.paths.checkpoint_dir, ec);
    if (ec) throw IoError("cannot create '" + config_.paths.checkpoint_dir + "': " + ec.message());
    if (improved) write_checkpoint_file("best.ckpt");
    write_checkpoint_file("last.ckpt");
  }
  append_metrics(r);
  return r;
}

std::vector<EpochRecord> Trainer::train() {
  std::vector<EpochRecord> out;
  const std::size_t last = config_.optimizer.epochs;
  auto launch = [this](std::size_t e) { return std::async(std::launch::async, [this, e] { return prepare_epoch(e); }); };
  std::future<std::vector<Batch>> next;
  if (threads_ > 1 && epoch_ < last) next = launch(epoch_ + 1);
  while (epoch_ < last) {
    std::vector<Batch> batches = threads_ > 1 ? next.get() : prepare_epoch(epoch_ + 1);
    if (threads_ > 1 && epoch_ + 2 <= last) next = launch(epoch_ + 2);
    out.push_back(run_epoch(batches));
  }
  return out;
}

void Trainer::write_checkpoint_file(const std::string& name) const {
  std::map<std::string, double> meta{
      {"epoch", static_cast<double>(epoch_)},
      {"lr", lr_},
      {"best_val", best_val_},
      {"best_epoch", static_cast<double>(best_epoch_)},
      {"seed_hi", static_cast<double>(config_.seed >> 32)},
      {"seed_lo", static_cast<double>(config_.seed & 0xffffffffULL)},
      {"variant", variant_ == Variant::full ? 0.0 : 1.0},
  };
  write_checkpoint((fs::path(config_.paths.checkpoint_dir) / name).string(), snapshot(model_->params(), meta));
}

void Trainer::append_metrics(const EpochRecord& r) {
  if (config_.paths.metrics.empty()) return;
  std::ofstream out(config_.paths.metrics, metrics_started_ ? std::ios::app : std::ios::trunc);
  if (!out) throw IoError("cannot open metrics file '" + config_.paths.metrics + "'");
  out << format_epoch(r, config_.seed, variant_) << '\n';
  metrics_started_ = true;
}

Metrics evaluate(PointCNN& net, const Dataset& data, std::span<const std::size_t> cloud_ids, std::size_t passes,
                 std::uint64_t seed) {
  const Task task = net.spec().task;
  std::vector<int> pred, truth, category;
  if (task == Task::classification) {
    constexpr std::size_t kChunk = 32;
    for (std::size_t lo = 0; lo < cloud_ids.size(); lo += kChunk) {
      std::vector<PointSet> chunk;
      for (std::size_t i = lo; i < std::min(cloud_ids.size(), lo + kChunk); ++i) {
        chunk.push_back(data.clouds.at(cloud_ids[i]));
        truth.push_back(*chunk.back().cloud_label);
      }
      Rng rng(derive_seed(seed, lo));
      const std::vector<int> p = argmax_rows(average_logits(net.forward(chunk, Mode::infer, rng)));
      pred.insert(pred.end(), p.begin(), p.end());
    }
    return compute_metrics(pred, truth, net.spec().num_classes);
  }
  for (std::size_t id : cloud_ids) {
    const PointSet& c = data.clouds.at(id);
    Rng rng(derive_seed(seed, id));
    const MultipassPrediction mp = predict_multipass(net, c, passes, rng);
    if (*std::min_element(mp.counts.begin(), mp.counts.end()) < passes) {
      throw StateError("multipass evaluation left a point of cloud " + std::to_string(id) + " under-covered");
    }
    const std::vector<int> p = argmax_rows(mp.logits);
    pred.insert(pred.end(), p.begin(), p.end());
    truth.insert(truth.end(), c.point_labels.begin(), c.point_labels.end());
    category.insert(category.end(), c.size(), *c.cloud_label);
  }
  PartGroups groups{category, &data.category_parts};
  return compute_metrics(pred, truth, net.spec().num_classes, data.category_parts.empty() ? nullptr : &groups);
}

std::string format_metrics(const Metrics& m, Task task) {
  std::ostringstream out;
  out << "task=" << task_name(task) << '\n';
  out << "total=" << m.total << '\n';
  out << "overall_accuracy=" << fmt(m.overall_accuracy) << '\n';
  out << "mean_class_accuracy=" << fmt(m.mean_class_accuracy) << '\n';
  out << "mean_iou=" << fmt(m.mean_iou) << '\n';
  out << "part_avg_iou=" << fmt(m.part_avg_iou) << '\n';
  out << "mean_part_iou=" << fmt(m.mean_part_iou) << '\n';
  for (std::size_t c = 0; c < m.num_classes; ++c) {
    out << "class_accuracy." << c << '=' << fmt(m.class_accuracy[c]) << '\n';
    out << "class_iou." << c << '=' << fmt(m.class_iou[c]) << '\n';
  }
  for (std::size_t c = 0; c < m.num_classes; ++c) {
    out << "confusion." << c << '=';
    for (std::size_t j = 0; j < m.num_classes; ++j) out << (j ? "," : "") << m.confusion[c][j];
    out << '\n';
  }
  return out.str();
}

AblationReport run_ablation(const RunConfig& config, const Dataset& data, std::span<const std::uint64_t> seeds,
                            std::size_t threads) {
  if (seeds.empty()) throw ConfigError("ablation needs at least one seed");
  AblationReport report;
  std::size_t n_full = 0, n_abl = 0;
  for (std::uint64_t seed : seeds) {
    std::vector<std::uint64_t> hashes[2];
    for (Variant v : {Variant::full, Variant::ablated}) {
      RunConfig cfg = config;
      cfg.seed = seed;
      cfg.paths.checkpoint_dir.clear();
      if (!cfg.paths.metrics.empty()) cfg.paths.metrics += std::string(".") + variant_name(v) + "." + std::to_string(seed);
      Trainer t(cfg, data, v, threads);
      AblationRun run;
      run.seed = seed;
      run.variant = v;
      run.params = t.model().params().trainable_count();
      for (const EpochRecord& r : t.train()) run.batch_hashes.push_back(r.data_hash);
      run.test_oa = evaluate(t.model(), data, data.indices(Split::test), cfg.eval.passes,
                             stream_seed(seed, Stream::eval, 0, 1))
                        .overall_accuracy;
      if (v == Variant::full) {
        report.mean_full += run.test_oa;
        ++n_full;
        std::size_t census = 0;
        for (std::size_t i = 0; i < t.model().conv_count(); ++i) {
          census += t.model().params().trainable_count(t.model().conv_layer(i).prefix() + ".mlp_x.");
        }
        for (std::size_t i = 0; i < t.model().deconv_count(); ++i) {
          census += t.model().params().trainable_count(t.model().deconv_layer(i).prefix() + ".mlp_x.");
        }
        report.mlp_x_census = census;
      } else {
        report.mean_ablated += run.test_oa;
        ++n_abl;
      }
      hashes[v == Variant::full ? 0 : 1] = run.batch_hashes;
      report.runs.push_back(std::move(run));
    }
    report.paired = report.paired && hashes[0] == hashes[1];
  }
  report.mean_full /= static_cast<double>(n_full);
  report.mean_ablated /= static_cast<double>(n_abl);
  return report;
}

std::string format_ablation(const AblationReport& report, const RunConfig& config) {
  std::ostringstream out;
  out << "seeds=";
  bool first = true;
  for (const AblationRun& r : report.runs) {
    if (r.variant != Variant::full) continue;
    out << (first ? "" : ",") << r.seed;
    first = false;
  }
  out << '\n';
  for (std::size_t i = 0; i < report.runs.size(); ++i) {
    const AblationRun& r = report.runs[i];
    const std::string key = "run." + std::to_string(i) + ".";
    out << key << "seed=" << r.seed << '\n';
    out << key << "variant=" << variant_name(r.variant) << '\n';
    out << key << "params=" << r.params << '\n';
    out << key << "test_oa=" << fmt(r.test_oa) << '\n';
    out << key << "batch_hashes=";
    for (std::size_t e = 0; e < r.batch_hashes.size(); ++e) out << (e ? "," : "") << hex(r.batch_hashes[e]);
    out << '\n';
  }
  std::size_t p_full = 0, p_abl = 0;
  for (const AblationRun& r : report.runs) (r.variant == Variant::full ? p_full : p_abl) = r.params;
  out << "params.full=" << p_full << '\n';
  out << "params.ablated=" << p_abl << '\n';
  out << "mlp_x_census=" << report.mlp_x_census << '\n';
  out << "mean_test_oa.full=" << fmt(report.mean_full) << '\n';
  out << "mean_test_oa.ablated=" << fmt(report.mean_ablated) << '\n';
  out << "paired=" << (report.paired ? "true" : "false") << '\n';
  std::string cfg = config_to_json(config);
  std::replace(cfg.begin(), cfg.end(), '\n', ' ');
  out << "config=" << cfg << '\n';
  return out.str();
}

double nearest_center_accuracy(const std::vector<std::vector<std::vector<double>>>& groups) {
  if (groups.empty()) throw ValidationError("nearest_center_accuracy: no groups");
  const std::size_t dim = groups[0].at(0).size();
  std::vector<std::vector<double>> centers;
  for (const auto& g : groups) {
    if (g.empty()) throw ValidationError("nearest_center_accuracy: empty group");
    std::vector<double> c(dim, 0.0);
    for (const auto& v : g) {
      if (v.size() != dim) throw DimensionError("nearest_center_accuracy: feature lengths differ");
      for (std::size_t i = 0; i < dim; ++i) c[i] += v[i];
    }
    for (double& x : c) x /= static_cast<double>(g.size());
    centers.push_back(std::move(c));
  }
  std::size_t hit = 0, total = 0;
  for (std::size_t r = 0; r < groups.size(); ++r) {
    for (const auto& v : groups[r]) {
      std::size_t best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < centers.size(); ++c) {
        double d = 0.0;
        for (std::size_t i = 0; i < dim; ++i) d += (v[i] - centers[c][i]) * (v[i] - centers[c][i]);
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      hit += best == r;
      ++total;
    }
  }
  return static_cast<double>(hit) / static_cast<double>(total);
}

ConcentrationReport analyze_features(PointCNN& full, PointCNN* ablated, std::span<const PointSet> clouds,
                                     const FeatureConfig& cfg, std::uint64_t seed) {
  if (cfg.draws < 2) throw ValidationError("feature analysis needs draws >= 2, got " + std::to_string(cfg.draws));
  const int conv = static_cast<int>(full.conv_count());
  const int layer = cfg.layer < 0 ? conv + cfg.layer : cfg.layer;
  if (layer < 0 || layer >= conv) throw ValidationError("feature analysis: no conv layer " + std::to_string(cfg.layer));
  const std::size_t L = static_cast<std::size_t>(layer);

  ConcentrationReport report;
  report.reps = cfg.reps;
  report.draws = cfg.draws;
  report.layer = L;
  report.seed = seed;

  // sampling draws do not depend on weights, so both models see the same neighborhoods
  std::vector<ForwardResult> runs;
  std::vector<PointCNN*> nets{&full};
  if (ablated) nets.push_back(ablated);
  for (PointCNN* net : nets) {
    Rng rng(stream_seed(seed, Stream::features, 0));
    runs.push_back(net->forward(clouds, Mode::infer, rng));
  }
  const LayerActivation& reps_level = runs[0].levels[L + 1];
  const std::size_t rows = reps_level.rep_coords.dim(0);
  if (cfg.reps > rows) {
    throw ValidationError("feature analysis: " + std::to_string(cfg.reps) + " reps requested, layer has " +
                          std::to_string(rows));
  }
  Rng pick(stream_seed(seed, Stream::features, 1));
  const std::vector<std::size_t> chosen = random_downsample(rows, cfg.reps, pick);

  std::vector<double> radii;
  for (const PointSet& c : clouds) {
    double r = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i) {
      const auto p = c.point(i);
      r = std::max(r, std::sqrt(std::inner_product(p.begin(), p.end(), p.begin(), 0.0)));
    }
    radii.push_back(r > 0.0 ? r : 1.0);
  }

  const std::size_t k = full.conv_layer(L).spec().k, dim = full.spec().dim;
  std::vector<std::vector<std::vector<double>>> groups[3];  // F_*, F_X, F_o
  for (auto& g : groups) g.resize(cfg.reps);
  for (std::size_t ri = 0; ri < cfg.reps; ++ri) {
    const std::size_t row = chosen[ri];
    const std::size_t cloud =
        static_cast<std::size_t>(std::upper_bound(reps_level.offsets.begin(), reps_level.offsets.end(), row) -
                                 reps_level.offsets.begin()) - 1;
    const Neighborhood& nb = reps_level.neighborhoods[row];
    const auto rep = reps_level.rep_coords.row(row);
    std::vector<double> global(rep.begin(), rep.end());
    for (double& g : global) g /= radii[cloud];

    Rng order_rng(stream_seed(seed, Stream::features, 2, ri));
    for (std::size_t m = 0; m < cfg.draws; ++m) {
      std::vector<std::size_t> perm(k);
      std::iota(perm.begin(), perm.end(), 0);
      order_rng.shuffle(std::span<std::size_t>(perm));
      for (std::size_t n = 0; n < nets.size(); ++n) {
        const LayerActivation& prev = runs[n].levels[L];
        const std::size_t base = prev.offsets[cloud];
        Tensor coords(Shape{k, dim});
        for (std::size_t i = 0; i < k; ++i) {
          const auto p = prev.rep_coords.row(base + nb.neighbor_indices[perm[i]]);
          std::copy(p.begin(), p.end(), coords.row(i).begin());
        }
        ad::Var feats;
        if (prev.features) {
          const std::size_t c = prev.features->value.dim(1);
          Tensor f(Shape{k, c});
          for (std::size_t i = 0; i < k; ++i) {
            const auto src = prev.features->value.row(base + nb.neighbor_indices[perm[i]]);
            std::copy(src.begin(), src.end(), f.row(i).begin());
          }
          feats = ad::constant(std::move(f));
        }
        XConvTrace trace;
        xconv_forward(nets[n]->conv_layer(L), rep, coords, feats, Mode::infer, global, &trace);
        auto record = [&](int kind, const char* name, const Tensor& t) {
          groups[kind][ri].push_back(t.values());
          report.samples.push_back({name, cloud, row, m, t.values()});
        };
        if (n == 0) {
          record(0, "F_star", trace.f_star->value);
          record(1, "F_X", trace.f_x->value);
        } else {
          record(2, "F_o", trace.f_star->value);
        }
      }
    }
  }
  report.acc_star = nearest_center_accuracy(groups[0]);
  report.acc_x = nearest_center_accuracy(groups[1]);
  if (ablated) report.acc_o = nearest_center_accuracy(groups[2]);
  return report;
}

void write_feature_dump(const std::string& path, const ConcentrationReport& report) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << "# seed=" << report.seed << " reps=" << report.reps << " draws=" << report.draws << " layer=" << report.layer
      << " acc_star=" << fmt(report.acc_star) << " acc_x=" << fmt(report.acc_x) << " acc_o=" << fmt(report.acc_o) << '\n';
  char buf[32];
  for (const FeatureSample& s : report.samples) {
    out << s.kind << ' ' << s.cloud << ' ' << s.rep << ' ' << s.draw << ' ' << s.values.size();
    for (double v : s.values) {
      std::snprintf(buf, sizeof buf, "%.17g", v);
      out << ' ' << buf;
    }
    out << '\n';
  }
  if (!out) throw IoError("write failed for '" + path + "'");
}

std::vector<FeatureSample> read_feature_dump(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::vector<FeatureSample> out;
  std::string line;
  std::size_t offset = 0;
  while (std::getline(in, line)) {
    const std::size_t at = offset;
    offset += line.size() + 1;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    FeatureSample s;
    std::size_t n = 0;
    if (!(ls >> s.kind >> s.cloud >> s.rep >> s.draw >> n)) throw FormatError("bad feature dump line", at);
    s.values.resize(n);
    for (double& v : s.values) {
      if (!(ls >> v)) throw FormatError("feature dump line has fewer values than declared", at);
    }
    std::string extra;
    if (ls >> extra) throw FormatError("feature dump line has extra values", at);
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace xconv
