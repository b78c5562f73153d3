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
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "xconv/config.hpp"
#include "xconv/dataset.hpp"
#include "xconv/metrics.hpp"
#include "xconv/network.hpp"

namespace xconv {

/// Streams that feed every random draw of a run. Each epoch (and each batch)
/// gets its own generator derived from the run seed, so a resumed run replays
/// exactly the draws an uninterrupted run would have made.
enum class Stream : std::uint64_t { init = 1, data = 2, model = 3, eval = 4, features = 5 };
std::uint64_t stream_seed(std::uint64_t run_seed, Stream s, std::uint64_t a = 0, std::uint64_t b = 0);

/// One augmented training batch.
struct Batch {
  std::vector<std::size_t> cloud_ids;  // indices into Dataset::clouds
  std::vector<PointSet> clouds;
  std::uint64_t hash = 0;  // FNV-1a over ids, point counts and coordinates
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double lr = 0.0;
  double loss = 0.0;  // mean over batches
  double train_acc = 0.0;
  double val_acc = 0.0;
  bool val_on_test = true;  // false when the dataset has no test split
  std::size_t clouds = 0;
  std::size_t points = 0;
  std::uint64_t data_hash = 0;  // combined hash of the epoch's batches
};

/// key=value line, fixed field order, no timing values.
std::string format_epoch(const EpochRecord& r, std::uint64_t seed, Variant variant);

/// Fewest points a cloud may have for every layer's k*d to fit.
std::size_t min_points(const NetworkSpec& spec);

class Trainer {
 public:
  /// `data` must outlive the trainer. Threads > 1 prepares the next epoch's
  /// batches on a worker while the current epoch trains.
  Trainer(RunConfig config, const Dataset& data, Variant variant = Variant::full, std::size_t threads = 1);
  ~Trainer();
  Trainer(const Trainer&) = delete;
  Trainer& operator=(const Trainer&) = delete;

  PointCNN& model() { return *model_; }
  const RunConfig& config() const { return config_; }
  std::size_t epoch() const { return epoch_; }
  double lr() const { return lr_; }

  /// Continues from a checkpoint written by this trainer (values, moments,
  /// step counter and bookkeeping). Throws ValidationError on a layout mismatch.
  void resume(const std::string& checkpoint_path);

  /// Deterministic batches of a 1-based epoch.
  std::vector<Batch> prepare_epoch(std::size_t epoch) const;

  /// Trains one epoch, validates, appends the metrics line and writes the
  /// checkpoints. Throws NumericError on a non-finite loss.
  EpochRecord run_epoch();
  EpochRecord run_epoch(const std::vector<Batch>& batches);
  /// Runs the remaining epochs of the configuration.
  std::vector<EpochRecord> train();

  /// One forward/backward/ADAM step; returns the loss and, through
  /// `correct`/`total`, the training accuracy counts of the batch.
  double train_step(std::span<const PointSet> clouds, std::uint64_t batch_seed, std::size_t* correct = nullptr,
                    std::size_t* total = nullptr);

 private:
  void write_checkpoint_file(const std::string& name) const;
  void append_metrics(const EpochRecord& r);

  RunConfig config_;
  const Dataset& data_;
  Variant variant_;
  std::size_t threads_;
  std::unique_ptr<PointCNN> model_;
  std::size_t epoch_ = 0;
  double lr_;
  double best_val_ = -1.0;
  std::size_t best_epoch_ = 0;
  bool metrics_started_ = false;
};

/// Classification: one pass per cloud, logits averaged over the final
/// representative points. Segmentation: `passes`-pass multipass inference.
/// Throws NumericError if a segmentation point is left uncovered.
Metrics evaluate(PointCNN& net, const Dataset& data, std::span<const std::size_t> cloud_ids, std::size_t passes,
                 std::uint64_t seed);

/// key=value lines: summary metrics, per-class values and the confusion matrix.
std::string format_metrics(const Metrics& m, Task task);

struct AblationRun {
  std::uint64_t seed = 0;
  Variant variant = Variant::full;
  std::size_t params = 0;
  double test_oa = 0.0;
  std::vector<std::uint64_t> batch_hashes;  // one per epoch
};

struct AblationReport {
  std::vector<AblationRun> runs;
  double mean_full = 0.0;
  double mean_ablated = 0.0;
  std::size_t mlp_x_census = 0;  // trainable scalars under the transform MLPs of the full model
  bool paired = true;            // both variants saw identical batches for every seed
};

/// Trains the full and the ablated network for each seed on identical data
/// streams and evaluates both on the test split. Checkpoints are skipped;
/// metrics files, when configured, get a ".<variant>.<seed>" suffix.
AblationReport run_ablation(const RunConfig& config, const Dataset& data, std::span<const std::uint64_t> seeds,
                            std::size_t threads = 1);
std::string format_ablation(const AblationReport& report, const RunConfig& config);

/// Flattened K x C* matrices recorded by the feature analysis.
struct FeatureSample {
  std::string kind;  // "F_star", "F_X" or "F_o"
  std::size_t cloud = 0;
  std::size_t rep = 0;
  std::size_t draw = 0;
  std::vector<double> values;
};

struct ConcentrationReport {
  std::size_t reps = 0;
  std::size_t draws = 0;
  std::size_t layer = 0;
  std::uint64_t seed = 0;
  double acc_star = 0.0;
  double acc_x = 0.0;
  double acc_o = -1.0;  // -1 without an ablated model
  std::vector<FeatureSample> samples;
};

/// groups[r][m] is the feature of representative r under draw m. Each vector
/// is assigned to the nearest per-representative mean (Euclidean); returns the
/// fraction assigned to its own representative.
double nearest_center_accuracy(const std::vector<std::vector<std::vector<double>>>& groups);

/// Picks `reps` representative points of conv layer `layer` at random across
/// `clouds`, feeds each `draws` random orderings of its neighborhood and
/// records F_* and F_X (and F_o from `ablated`, which must share the layout).
/// Throws ValidationError when draws < 2.
ConcentrationReport analyze_features(PointCNN& full, PointCNN* ablated, std::span<const PointSet> clouds,
                                     const FeatureConfig& cfg, std::uint64_t seed);

void write_feature_dump(const std::string& path, const ConcentrationReport& report);
std::vector<FeatureSample> read_feature_dump(const std::string& path);

}  // namespace xconv
