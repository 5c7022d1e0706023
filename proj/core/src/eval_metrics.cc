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

#include "coffeelab/eval_metrics.h"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <numeric>

#include "coffeelab/error.h"
#include "json.hpp"

namespace coffeelab {
namespace {

using ordered_json = nlohmann::ordered_json;

struct CategoryOutcomes {
  std::vector<ScoredOutcome> outcomes;
  int gt = 0;
};

// Projects every file into the evaluation category space and groups sweep
// outcomes per category in image-id order.
struct ProjectedData {
  std::map<std::string, PredictionFile> predictions;
  std::map<std::string, LabelFile> ground_truth;
  std::vector<std::string> names;
};

int CountSourceCategories(const std::map<std::string, PredictionFile>& preds,
                          const std::map<std::string, LabelFile>& gt) {
  int max_cat = -1;
  for (const auto& [id, f] : preds)
    for (const auto& e : f.entries) max_cat = std::max(max_cat, e.box.category);
  for (const auto& [id, f] : gt)
    for (const auto& b : f.boxes) max_cat = std::max(max_cat, b.category);
  return max_cat + 1;
}

ProjectedData Project(const std::map<std::string, PredictionFile>& preds,
                      const std::map<std::string, LabelFile>& gt,
                      const EvalOptions& options) {
  int source = static_cast<int>(options.names.size());
  const int seen = CountSourceCategories(preds, gt);
  if (source == 0) {
    source = seen;
  } else if (seen > source) {
    throw Error(ErrorKind::kOutOfRange,
                "category " + std::to_string(seen - 1) + " has no name");
  }
  const std::vector<int> map = CategoryProjection(options, source);

  ProjectedData out;
  out.names = ProjectedNames(options);
  if (options.mode == EvalMode::kMulticlass && options.names.empty()) {
    for (int c = 0; c < source; ++c) out.names.push_back("class-" + std::to_string(c));
  }
  for (const auto& [id, f] : preds) {
    PredictionFile p = f;
    for (auto& e : p.entries) e.box.category = map[e.box.category];
    out.predictions.emplace(id, std::move(p));
  }
  for (const auto& [id, f] : gt) {
    LabelFile l = f;
    for (auto& b : l.boxes) b.category = map[b.category];
    out.ground_truth.emplace(id, std::move(l));
  }
  return out;
}

std::vector<CategoryOutcomes> GroupByCategory(
    const std::vector<MatchResult>& matches, int num_categories) {
  std::vector<CategoryOutcomes> per(static_cast<size_t>(num_categories));
  for (const MatchResult& m : matches) {
    auto& slot = per.at(static_cast<size_t>(m.category));
    slot.gt += m.gt_count;
    for (const auto& o : m.outcomes) {
      slot.outcomes.push_back({o.confidence, o.true_positive});
    }
  }
  for (auto& slot : per) {
    std::stable_sort(slot.outcomes.begin(), slot.outcomes.end(),
                     [](const ScoredOutcome& a, const ScoredOutcome& b) {
                       return a.confidence > b.confidence;
                     });
  }
  return per;
}

std::string Fmt(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

ordered_json CategoryJson(const CategoryReport& c) {
  ordered_json j;
  j["name"] = c.name;
  j["P"] = c.precision;
  j["R"] = c.recall;
  j["AP"] = c.ap50 ? ordered_json(*c.ap50) : ordered_json(nullptr);
  j["gt"] = c.gt;
  j["pred"] = c.predictions;
  j["TP"] = c.tp;
  j["FP"] = c.fp;
  j["FN"] = c.fn;
  return j;
}

}  // namespace

double Iou(const NormalizedBox& a, const NormalizedBox& b) {
  const double iw = std::min(a.x1(), b.x1()) - std::max(a.x0(), b.x0());
  const double ih = std::min(a.y1(), b.y1()) - std::max(a.y0(), b.y0());
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  // Areas from the same corners as the overlap, so IoU(a, a) is exactly 1.
  const double area_a = (a.x1() - a.x0()) * (a.y1() - a.y0());
  const double area_b = (b.x1() - b.x0()) * (b.y1() - b.y0());
  const double uni = area_a + area_b - inter;
  if (uni <= 0.0) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

int MatchResult::tp() const {
  return static_cast<int>(std::count_if(
      outcomes.begin(), outcomes.end(),
      [](const PredictionOutcome& o) { return o.true_positive; }));
}

MatchResult MatchImageCategory(std::span<const PredictionEntry> predictions,
                               std::span<const NormalizedBox> ground_truth,
                               int category, double iou_threshold) {
  MatchResult result;
  result.category = category;
  result.iou_threshold = iou_threshold;

  std::vector<int> gt_idx;
  for (size_t i = 0; i < ground_truth.size(); ++i) {
    if (ground_truth[i].category == category) gt_idx.push_back(static_cast<int>(i));
  }
  result.gt_count = static_cast<int>(gt_idx.size());

  std::vector<int> pred_idx;
  for (size_t i = 0; i < predictions.size(); ++i) {
    if (predictions[i].box.category == category) pred_idx.push_back(static_cast<int>(i));
  }
  std::stable_sort(pred_idx.begin(), pred_idx.end(), [&](int a, int b) {
    return predictions[a].confidence > predictions[b].confidence;
  });

  std::vector<bool> used(gt_idx.size(), false);
  for (int p : pred_idx) {
    PredictionOutcome o;
    o.confidence = predictions[p].confidence;
    o.pred_index = p;
    double best = -1.0;
    int best_slot = -1;
    for (size_t g = 0; g < gt_idx.size(); ++g) {
      if (used[g]) continue;
      const double v = Iou(predictions[p].box, ground_truth[gt_idx[g]]);
      if (v >= iou_threshold && v > best) {
        best = v;
        best_slot = static_cast<int>(g);
      }
    }
    if (best_slot >= 0) {
      used[best_slot] = true;
      o.true_positive = true;
      o.gt_index = gt_idx[best_slot];
    }
    result.outcomes.push_back(o);
  }
  return result;
}

std::vector<MatchResult> MatchDetections(
    const std::map<std::string, PredictionFile>& predictions,
    const std::map<std::string, LabelFile>& ground_truth,
    double iou_threshold) {
  std::set<std::string> ids;
  for (const auto& [id, f] : predictions) ids.insert(id);
  for (const auto& [id, f] : ground_truth) ids.insert(id);

  static const std::vector<PredictionEntry> kNoPreds;
  static const std::vector<NormalizedBox> kNoBoxes;
  std::vector<MatchResult> out;
  for (const std::string& id : ids) {
    auto pit = predictions.find(id);
    auto git = ground_truth.find(id);
    const auto& preds = pit == predictions.end() ? kNoPreds : pit->second.entries;
    const auto& gts = git == ground_truth.end() ? kNoBoxes : git->second.boxes;
    std::set<int> cats;
    for (const auto& e : preds) cats.insert(e.box.category);
    for (const auto& b : gts) cats.insert(b.category);
    for (int c : cats) {
      MatchResult m = MatchImageCategory(preds, gts, c, iou_threshold);
      m.image_id = id;
      out.push_back(std::move(m));
    }
  }
  return out;
}

std::optional<double> AveragePrecision(std::span<const ScoredOutcome> outcomes,
                                       int gt_count) {
  if (gt_count <= 0) {
    if (outcomes.empty()) return std::nullopt;
    return 0.0;
  }
  std::vector<ScoredOutcome> sorted(outcomes.begin(), outcomes.end());
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const ScoredOutcome& a, const ScoredOutcome& b) {
                     return a.confidence > b.confidence;
                   });
  const size_t n = sorted.size();
  std::vector<double> precision(n), recall(n);
  int tp = 0;
  for (size_t i = 0; i < n; ++i) {
    if (sorted[i].true_positive) ++tp;
    precision[i] = static_cast<double>(tp) / static_cast<double>(i + 1);
    recall[i] = static_cast<double>(tp) / static_cast<double>(gt_count);
  }
  // Monotone envelope: precision at i becomes the max over all later points.
  for (size_t i = n; i-- > 1;) {
    precision[i - 1] = std::max(precision[i - 1], precision[i]);
  }
  // Integrate per run of constant envelope precision so a flat envelope
  // contributes p * (r_end - r_start) exactly.
  double ap = 0.0;
  double run_start = 0.0;
  double run_end = 0.0;
  double run_precision = 0.0;
  for (size_t i = 0; i < n; ++i) {
    if (recall[i] <= run_end) continue;
    if (precision[i] != run_precision) {
      ap += run_precision * (run_end - run_start);
      run_start = run_end;
      run_precision = precision[i];
    }
    run_end = recall[i];
  }
  ap += run_precision * (run_end - run_start);
  return ap;
}

double MeanAveragePrecision(std::span<const std::optional<double>> aps) {
  double sum = 0.0;
  int n = 0;
  for (const auto& ap : aps) {
    if (!ap) continue;
    sum += *ap;
    ++n;
  }
  if (n == 0) throw Error(ErrorKind::kNoCategories, "no category has a defined AP");
  return sum / n;
}

PrecisionRecall ComputePrecisionRecall(int tp, int fp, int fn) {
  PrecisionRecall pr;
  if (tp + fp == 0) {
    pr.precision = fn == 0 ? 1.0 : 0.0;
  } else {
    pr.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
  }
  if (tp + fn == 0) {
    pr.recall = 1.0;
  } else {
    pr.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
  }
  return pr;
}

std::string_view EvalModeName(EvalMode mode) {
  switch (mode) {
    case EvalMode::kMono: return "mono";
    case EvalMode::kBinary: return "binary";
    case EvalMode::kMulticlass: return "multiclass";
  }
  return "multiclass";
}

EvalMode ParseEvalMode(std::string_view name) {
  if (name == "mono") return EvalMode::kMono;
  if (name == "binary") return EvalMode::kBinary;
  if (name == "multiclass") return EvalMode::kMulticlass;
  throw Error(ErrorKind::kBadConfig, "unknown eval mode '" + std::string(name) + "'");
}

std::vector<std::string> ProjectedNames(const EvalOptions& options) {
  switch (options.mode) {
    case EvalMode::kMono: return {"fruit"};
    case EvalMode::kBinary: return {"unripe", "ripe"};
    case EvalMode::kMulticlass: return options.names;
  }
  return options.names;
}

std::vector<int> CategoryProjection(const EvalOptions& options,
                                    int num_source_categories) {
  std::vector<int> map(static_cast<size_t>(num_source_categories));
  switch (options.mode) {
    case EvalMode::kMono:
      std::fill(map.begin(), map.end(), 0);
      break;
    case EvalMode::kBinary:
      if (static_cast<int>(options.names.size()) < num_source_categories) {
        throw Error(ErrorKind::kBadConfig,
                    "binary mode needs a name for every category");
      }
      for (int c = 0; c < num_source_categories; ++c) {
        map[c] = options.ripe_stages.count(options.names[c]) ? 1 : 0;
      }
      break;
    case EvalMode::kMulticlass:
      std::iota(map.begin(), map.end(), 0);
      break;
  }
  return map;
}

EvalReport Evaluate(const std::map<std::string, PredictionFile>& predictions,
                    const std::map<std::string, LabelFile>& ground_truth,
                    const EvalOptions& options) {
  ProjectedData data = Project(predictions, ground_truth, options);
  const int num_categories = static_cast<int>(data.names.size());
  auto matches =
      MatchDetections(data.predictions, data.ground_truth, options.iou_threshold);
  auto grouped = GroupByCategory(matches, num_categories);

  EvalReport report;
  report.mode = options.mode;
  report.iou_threshold = options.iou_threshold;
  report.confidence_threshold = options.confidence_threshold;
  {
    std::set<std::string> ids;
    for (const auto& [id, f] : data.predictions) ids.insert(id);
    for (const auto& [id, f] : data.ground_truth) ids.insert(id);
    report.images = static_cast<int>(ids.size());
  }

  std::vector<std::optional<double>> aps;
  CategoryReport& all = report.overall;
  all.category = -1;
  all.name = "all";
  for (int c = 0; c < num_categories; ++c) {
    const CategoryOutcomes& co = grouped[c];
    CategoryReport cr;
    cr.category = c;
    cr.name = data.names[c];
    cr.gt = co.gt;
    for (const auto& o : co.outcomes) {
      if (o.confidence < options.confidence_threshold) continue;
      ++cr.predictions;
      if (o.true_positive) ++cr.tp;
    }
    cr.fp = cr.predictions - cr.tp;
    cr.fn = cr.gt - cr.tp;
    const PrecisionRecall pr = ComputePrecisionRecall(cr.tp, cr.fp, cr.fn);
    cr.precision = pr.precision;
    cr.recall = pr.recall;
    cr.ap50 = AveragePrecision(co.outcomes, co.gt);
    aps.push_back(cr.ap50);

    all.gt += cr.gt;
    all.predictions += cr.predictions;
    all.tp += cr.tp;
    all.fp += cr.fp;
    all.fn += cr.fn;
    report.categories.push_back(std::move(cr));
  }
  const PrecisionRecall pr = ComputePrecisionRecall(all.tp, all.fp, all.fn);
  all.precision = pr.precision;
  all.recall = pr.recall;
  if (std::any_of(aps.begin(), aps.end(), [](const auto& a) { return a.has_value(); })) {
    report.map50 = MeanAveragePrecision(aps);
  }
  all.ap50 = report.map50;
  return report;
}

std::string ReportToJson(const EvalReport& report) {
  ordered_json j;
  j["mode"] = std::string(EvalModeName(report.mode));
  j["iou_threshold"] = report.iou_threshold;
  j["confidence_threshold"] = report.confidence_threshold;
  j["images"] = report.images;
  ordered_json cats = ordered_json::array();
  for (const auto& c : report.categories) cats.push_back(CategoryJson(c));
  j["per_category"] = std::move(cats);
  j["mAP50"] = report.map50 ? ordered_json(*report.map50) : ordered_json(nullptr);
  ordered_json counts;
  counts["gt"] = report.overall.gt;
  counts["pred"] = report.overall.predictions;
  counts["TP"] = report.overall.tp;
  counts["FP"] = report.overall.fp;
  counts["FN"] = report.overall.fn;
  counts["P"] = report.overall.precision;
  counts["R"] = report.overall.recall;
  j["counts"] = std::move(counts);
  return j.dump(2) + "\n";
}

std::string ReportToTable(const EvalReport& report) {
  std::string out;
  char line[256];
  std::snprintf(line, sizeof(line), "%-16s %8s %8s %8s %8s %8s\n", "Class",
                "Labels", "Preds", "P", "R", "mAP@.5");
  out += line;
  auto row = [&](const CategoryReport& c) {
    char ap[16];
    if (c.ap50) {
      std::snprintf(ap, sizeof(ap), "%.3f", *c.ap50);
    } else {
      std::snprintf(ap, sizeof(ap), "%s", "-");
    }
    std::snprintf(line, sizeof(line), "%-16s %8d %8d %8.3f %8.3f %8s\n",
                  c.name.c_str(), c.gt, c.predictions, c.precision, c.recall, ap);
    out += line;
  };
  row(report.overall);
  for (const auto& c : report.categories) row(c);
  std::snprintf(line, sizeof(line), "mode=%s iou=%s conf>=%s images=%d\n",
                std::string(EvalModeName(report.mode)).c_str(),
                Fmt(report.iou_threshold).c_str(),
                Fmt(report.confidence_threshold).c_str(), report.images);
  out += line;
  return out;
}

std::string CurvesToCsv(const std::map<std::string, PredictionFile>& predictions,
                        const std::map<std::string, LabelFile>& ground_truth,
                        const EvalOptions& options) {
  ProjectedData data = Project(predictions, ground_truth, options);
  auto matches =
      MatchDetections(data.predictions, data.ground_truth, options.iou_threshold);
  auto grouped = GroupByCategory(matches, static_cast<int>(data.names.size()));
  std::string out = "category,confidence,precision,recall\n";
  for (size_t c = 0; c < grouped.size(); ++c) {
    int tp = 0;
    const auto& co = grouped[c];
    for (size_t i = 0; i < co.outcomes.size(); ++i) {
      if (co.outcomes[i].true_positive) ++tp;
      const double p = static_cast<double>(tp) / static_cast<double>(i + 1);
      const double r = co.gt > 0 ? static_cast<double>(tp) / co.gt : 0.0;
      out += data.names[c] + "," + Fmt(co.outcomes[i].confidence) + "," +
             Fmt(p) + "," + Fmt(r) + "\n";
    }
  }
  return out;
}

}  // namespace coffeelab
