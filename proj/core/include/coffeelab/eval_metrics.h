/* Copyright 2026 The coffeelab Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef COFFEELAB_EVAL_METRICS_H_
#define COFFEELAB_EVAL_METRICS_H_

#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "coffeelab/annotation_io.h"

namespace coffeelab {

inline constexpr double kDefaultIouThreshold = 0.5;
// Shared by the eval report and the service's counting threshold.
inline constexpr double kDefaultConfidenceThreshold = 0.25;

double Iou(const NormalizedBox& a, const NormalizedBox& b);

struct PredictionOutcome {
  double confidence = 0.0;
  bool true_positive = false;
  int gt_index = -1;    // matched ground truth, -1 for a false positive
  int pred_index = -1;  // position in the source prediction list
};

// Matching result for one (image, category).
struct MatchResult {
  std::string image_id;
  int category = 0;
  double iou_threshold = kDefaultIouThreshold;
  // Sorted by descending confidence; ties keep input order.
  std::vector<PredictionOutcome> outcomes;
  int gt_count = 0;

  int tp() const;
  int fp() const { return static_cast<int>(outcomes.size()) - tp(); }
  int fn() const { return gt_count - tp(); }
};

// Greedy one-to-one matching inside a single (image, category): predictions
// in descending confidence each take the unmatched ground truth with the
// highest IoU >= threshold (ties to the lower index). Entries of other
// categories are ignored.
MatchResult MatchImageCategory(std::span<const PredictionEntry> predictions,
                               std::span<const NormalizedBox> ground_truth,
                               int category, double iou_threshold);

// All (image, category) pairs over the union of image ids, in image-id then
// category order. A missing prediction file means no predictions.
std::vector<MatchResult> MatchDetections(
    const std::map<std::string, PredictionFile>& predictions,
    const std::map<std::string, LabelFile>& ground_truth,
    double iou_threshold = kDefaultIouThreshold);

struct ScoredOutcome {
  double confidence = 0.0;
  bool true_positive = false;
};

// All-point interpolated AP: area under the monotone precision envelope.
// nullopt when gt_count == 0 and there are no predictions (category is
// excluded from mAP); 0 when gt_count == 0 but predictions exist.
std::optional<double> AveragePrecision(std::span<const ScoredOutcome> outcomes,
                                       int gt_count);

// Arithmetic mean over defined APs; throws NoCategories if none is defined.
double MeanAveragePrecision(std::span<const std::optional<double>> aps);

struct PrecisionRecall {
  double precision = 0.0;
  double recall = 0.0;
};

// P = TP/(TP+FP), R = TP/(TP+FN). With no predictions P is 1 if there was
// nothing to find and 0 otherwise; with no ground truth R is 1.
PrecisionRecall ComputePrecisionRecall(int tp, int fp, int fn);
inline PrecisionRecall ComputePrecisionRecall(const MatchResult& m) {
  return ComputePrecisionRecall(m.tp(), m.fp(), m.fn());
}

enum class EvalMode { kMono, kBinary, kMulticlass };

std::string_view EvalModeName(EvalMode mode);
EvalMode ParseEvalMode(std::string_view name);

struct EvalOptions {
  EvalMode mode = EvalMode::kMulticlass;
  double iou_threshold = kDefaultIouThreshold;
  double confidence_threshold = kDefaultConfidenceThreshold;
  // Category names of the input files. Required for binary mode.
  std::vector<std::string> names;
  // Stage names counted as ripe in binary mode.
  std::set<std::string> ripe_stages;
};

struct CategoryReport {
  int category = 0;
  std::string name;
  int gt = 0;
  int predictions = 0;  // at the confidence threshold
  int tp = 0;
  int fp = 0;
  int fn = 0;
  double precision = 0.0;
  double recall = 0.0;
  std::optional<double> ap50;
};

struct EvalReport {
  EvalMode mode = EvalMode::kMulticlass;
  double iou_threshold = kDefaultIouThreshold;
  double confidence_threshold = kDefaultConfidenceThreshold;
  std::vector<CategoryReport> categories;
  CategoryReport overall;  // pooled counts; ap50 holds mAP@.5
  std::optional<double> map50;
  int images = 0;
};

// Remaps categories for mono (everything -> "fruit") or binary
// ({unripe, ripe} by stage name) evaluation. Multiclass is the identity.
// Returns the category names of the projected space.
std::vector<std::string> ProjectedNames(const EvalOptions& options);
std::vector<int> CategoryProjection(const EvalOptions& options,
                                    int num_source_categories);

EvalReport Evaluate(const std::map<std::string, PredictionFile>& predictions,
                    const std::map<std::string, LabelFile>& ground_truth,
                    const EvalOptions& options);

std::string ReportToJson(const EvalReport& report);
// Fixed-width table with Class / Labels / P / R / mAP@.5 columns.
std::string ReportToTable(const EvalReport& report);

// Precision/recall points per category in sweep order:
// "category,confidence,precision,recall".
std::string CurvesToCsv(const std::map<std::string, PredictionFile>& predictions,
                        const std::map<std::string, LabelFile>& ground_truth,
                        const EvalOptions& options);

}  // namespace coffeelab

#endif  // COFFEELAB_EVAL_METRICS_H_
