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

#include <cstddef>
#include <span>
#include <vector>

namespace xconv {

/// Groups the per-point labels of a part-segmentation set: the category of
/// every sample and the part ids belonging to each category.
struct PartGroups {
  std::span<const int> category;  // one per sample
  const std::vector<std::vector<int>>* category_parts = nullptr;
};

struct Metrics {
  std::size_t num_classes = 0;
  std::size_t total = 0;
  std::vector<std::vector<std::size_t>> confusion;  // [truth][prediction]
  std::vector<double> class_accuracy;               // recall; NaN for classes absent from the truth
  std::vector<double> class_iou;                    // NaN when a class is absent from truth and prediction

  double overall_accuracy = 0.0;
  double mean_class_accuracy = 0.0;  // over classes present in the truth
  double mean_iou = 0.0;             // over classes present in truth or prediction
  double part_avg_iou = 0.0;         // over all classes, an absent class counting as 1
  double mean_part_iou = 0.0;        // mean over categories of the category's part IoU; equals part_avg_iou without groups
};

/// Confusion-matrix metrics. IoU terms are aggregated over every sample
/// (TP / (TP + FP + FN) per class). With `groups`, each category's part IoU
/// is computed on that category's samples only. Throws ValidationError on a
/// length mismatch or an out-of-range label.
Metrics compute_metrics(std::span<const int> predictions, std::span<const int> truth, std::size_t num_classes,
                        const PartGroups* groups = nullptr);

}  // namespace xconv
