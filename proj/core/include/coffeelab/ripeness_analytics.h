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

#ifndef COFFEELAB_RIPENESS_ANALYTICS_H_
#define COFFEELAB_RIPENESS_ANALYTICS_H_

#include <chrono>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "coffeelab/annotation_io.h"

namespace coffeelab {

// Quality bar for a harvest: at least this share of fruit fully ripe.
inline constexpr double kHarvestReadyPercent = 98.0;

// Stages counted as ripe when none are configured. Raisin and dry are past
// ripe but still harvested; "ripe" covers two-class label sets.
std::set<std::string> DefaultRipeStages();

enum class CountMode { kCount, kBinary, kMulticlass };

std::string_view CountModeName(CountMode mode);
// Throws BadConfig for anything but count, binary, multiclass.
CountMode ParseCountMode(std::string_view name);

struct StageCounts {
  CountMode mode = CountMode::kMulticlass;
  // Ordered as configured.
  std::vector<std::pair<std::string, std::int64_t>> counts;

  std::int64_t Total() const;
  std::int64_t Get(std::string_view stage) const;

  bool operator==(const StageCounts&) const = default;
};

// Zero-filled multiclass counts over the configured stages.
StageCounts EmptyCounts(const std::vector<std::string>& stages);

// Tally of entries with confidence >= threshold, by category -> stage name.
// Throws UnknownStage for a category without a name.
StageCounts TallyStages(const PredictionFile& predictions,
                        const std::vector<std::string>& stages,
                        double confidence_threshold);

struct Ripeness {
  double ripeness_percent = 0.0;
  double unripeness_percent = 0.0;
};

// ripeness = 100 * ripe / total, unripeness = 100 - ripeness.
// Throws EmptyCounts when the total is zero.
Ripeness RipenessPercent(const StageCounts& counts,
                         const std::set<std::string>& ripe_stages);

// Two buckets {unripe, ripe}; the total is preserved. Throws UnknownStage
// for a key outside `configured_stages`.
StageCounts CollapseBinary(const StageCounts& counts,
                           const std::set<std::string>& ripe_stages,
                           const std::vector<std::string>& configured_stages);

// Single {fruit} bucket.
StageCounts CollapseCount(const StageCounts& counts);

struct RipenessSample {
  std::string captured_at;  // ISO-8601, kept verbatim
  StageCounts counts;       // multiclass
  // Empty when no fruit was counted.
  std::optional<Ripeness> ripeness;
};

RipenessSample MakeSample(std::string captured_at, StageCounts counts,
                          const std::set<std::string>& ripe_stages);

// Accepts YYYY-MM-DD and YYYY-MM-DDTHH:MM[:SS[.fff]] with an optional Z or
// +HH:MM offset (no offset = UTC). Returns nullopt on failure.
std::optional<std::chrono::sys_time<std::chrono::milliseconds>> ParseTimestamp(
    std::string_view text);

struct TimelineRow {
  std::string captured_at;
  StageCounts counts;  // in the series mode
  std::optional<Ripeness> ripeness;
};

struct TimelineSeries {
  CountMode mode = CountMode::kBinary;
  std::vector<TimelineRow> rows;
};

// Stable sort by timestamp, one row per sample, counts projected to `mode`.
// Throws BadTimestamp naming the offending sample index.
TimelineSeries BuildTimeline(std::span<const RipenessSample> samples,
                             CountMode mode,
                             const std::set<std::string>& ripe_stages,
                             const std::vector<std::string>& configured_stages);

// "captured_at,mode,stage,count,ripeness_percent,unripeness_percent", one
// line per (sample, stage). Percentages use the shortest exact decimal form;
// undefined ripeness is an empty field.
std::string TimelineToCsv(const TimelineSeries& series);
std::string TimelineToJson(const TimelineSeries& series);

// Capture schedule CSV: header "image_id,captured_at", one image per line.
struct ScheduleEntry {
  std::string image_id;
  std::string captured_at;

  bool operator==(const ScheduleEntry&) const = default;
};

// Throws MalformedLine (with line number) on a bad header or row.
std::vector<ScheduleEntry> ParseSchedule(std::string_view csv);
std::string SerializeSchedule(const std::vector<ScheduleEntry>& schedule);

// One multiclass sample per scheduled image from its prediction file.
// Throws MissingPredictions for a scheduled image without predictions.
std::vector<RipenessSample> SamplesFromPredictions(
    const std::vector<ScheduleEntry>& schedule,
    const std::map<std::string, PredictionFile>& predictions,
    const std::vector<std::string>& stages,
    const std::set<std::string>& ripe_stages, double confidence_threshold);

// Shortest round-trip decimal form of a double.
std::string FormatReal(double v);

}  // namespace coffeelab

#endif  // COFFEELAB_RIPENESS_ANALYTICS_H_
