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

#include "xconv/metrics.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "xconv/errors.hpp"

namespace xconv {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

using Confusion = std::vector<std::vector<std::size_t>>;

double iou(const Confusion& m, std::size_t c) {
  std::size_t tp = m[c][c], fp = 0, fn = 0;
  for (std::size_t j = 0; j < m.size(); ++j) {
    if (j == c) continue;
    fn += m[c][j];
    fp += m[j][c];
  }
  const std::size_t denom = tp + fp + fn;
  return denom ? static_cast<double>(tp) / static_cast<double>(denom) : kNaN;
}

double mean_ignoring_nan(const std::vector<double>& v, double absent_value) {
  double s = 0.0;
  std::size_t n = 0;
  for (double x : v) {
    if (std::isnan(x)) {
      if (std::isnan(absent_value)) continue;
      x = absent_value;
    }
    s += x;
    ++n;
  }
  return n ? s / static_cast<double>(n) : kNaN;
}

}  // namespace

Metrics compute_metrics(std::span<const int> predictions, std::span<const int> truth, std::size_t num_classes,
                        const PartGroups* groups) {
  if (predictions.size() != truth.size()) {
    throw ValidationError("compute_metrics: " + std::to_string(predictions.size()) + " predictions for " +
                          std::to_string(truth.size()) + " labels");
  }
  if (num_classes < 1) throw ValidationError("compute_metrics: num_classes must be >= 1");
  const int nc = static_cast<int>(num_classes);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] < 0 || truth[i] >= nc || predictions[i] < 0 || predictions[i] >= nc) {
      throw ValidationError("compute_metrics: label out of range at sample " + std::to_string(i));
    }
  }

  Metrics m;
  m.num_classes = num_classes;
  m.total = truth.size();
  m.confusion.assign(num_classes, std::vector<std::size_t>(num_classes, 0));
  for (std::size_t i = 0; i < truth.size(); ++i) ++m.confusion[truth[i]][predictions[i]];

  std::size_t correct = 0;
  for (std::size_t c = 0; c < num_classes; ++c) {
    correct += m.confusion[c][c];
    std::size_t row = 0;
    for (std::size_t n : m.confusion[c]) row += n;
    m.class_accuracy.push_back(row ? static_cast<double>(m.confusion[c][c]) / static_cast<double>(row) : kNaN);
    m.class_iou.push_back(iou(m.confusion, c));
  }
  m.overall_accuracy = m.total ? static_cast<double>(correct) / static_cast<double>(m.total) : kNaN;
  m.mean_class_accuracy = mean_ignoring_nan(m.class_accuracy, kNaN);
  m.mean_iou = mean_ignoring_nan(m.class_iou, kNaN);
  m.part_avg_iou = mean_ignoring_nan(m.class_iou, 1.0);
  m.mean_part_iou = m.part_avg_iou;

  if (groups && groups->category_parts) {
    if (groups->category.size() != truth.size()) {
      throw ValidationError("compute_metrics: category list length differs from the label count");
    }
    const auto& parts = *groups->category_parts;
    std::vector<Confusion> per_cat(parts.size(), Confusion(num_classes, std::vector<std::size_t>(num_classes, 0)));
    std::vector<bool> seen(parts.size(), false);
    for (std::size_t i = 0; i < truth.size(); ++i) {
      const int cat = groups->category[i];
      if (cat < 0 || static_cast<std::size_t>(cat) >= parts.size()) {
        throw ValidationError("compute_metrics: category out of range at sample " + std::to_string(i));
      }
      ++per_cat[cat][truth[i]][predictions[i]];
      seen[cat] = true;
    }
    double sum = 0.0;
    std::size_t cats = 0;
    for (std::size_t c = 0; c < parts.size(); ++c) {
      if (!seen[c] || parts[c].empty()) continue;
      double s = 0.0;
      for (int p : parts[c]) {
        if (p < 0 || p >= nc) throw ValidationError("compute_metrics: part id out of range in category list");
        const double v = iou(per_cat[c], static_cast<std::size_t>(p));
        s += std::isnan(v) ? 1.0 : v;
      }
      sum += s / static_cast<double>(parts[c].size());
      ++cats;
    }
    m.mean_part_iou = cats ? sum / static_cast<double>(cats) : kNaN;
  }
  return m;
}

}  // namespace xconv
