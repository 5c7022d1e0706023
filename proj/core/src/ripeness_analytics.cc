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

#include "coffeelab/ripeness_analytics.h"

#include <algorithm>
#include <charconv>
#include <numeric>

#include "coffeelab/error.h"
#include "json.hpp"

namespace coffeelab {
namespace {

using ordered_json = nlohmann::ordered_json;

bool ParseInt(std::string_view s, int& out) {
  if (s.empty()) return false;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

bool AllDigits(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) {
    return c >= '0' && c <= '9';
  });
}

ordered_json CountsJson(const StageCounts& c) {
  ordered_json j = ordered_json::object();
  for (const auto& [stage, n] : c.counts) j[stage] = n;
  return j;
}

}  // namespace

std::set<std::string> DefaultRipeStages() {
  return {"cherry", "raisin", "dry", "ripe"};
}

std::string_view CountModeName(CountMode mode) {
  switch (mode) {
    case CountMode::kCount: return "count";
    case CountMode::kBinary: return "binary";
    case CountMode::kMulticlass: return "multiclass";
  }
  return "multiclass";
}

CountMode ParseCountMode(std::string_view name) {
  if (name == "count") return CountMode::kCount;
  if (name == "binary") return CountMode::kBinary;
  if (name == "multiclass") return CountMode::kMulticlass;
  throw Error(ErrorKind::kBadConfig, "unknown mode '" + std::string(name) + "'");
}

std::int64_t StageCounts::Total() const {
  std::int64_t t = 0;
  for (const auto& [stage, n] : counts) t += n;
  return t;
}

std::int64_t StageCounts::Get(std::string_view stage) const {
  for (const auto& [s, n] : counts) {
    if (s == stage) return n;
  }
  return 0;
}

StageCounts EmptyCounts(const std::vector<std::string>& stages) {
  StageCounts c;
  c.mode = CountMode::kMulticlass;
  for (const auto& s : stages) c.counts.emplace_back(s, 0);
  return c;
}

StageCounts TallyStages(const PredictionFile& predictions,
                        const std::vector<std::string>& stages,
                        double confidence_threshold) {
  StageCounts c = EmptyCounts(stages);
  for (const auto& e : predictions.entries) {
    if (e.confidence < confidence_threshold) continue;
    if (static_cast<size_t>(e.box.category) >= stages.size()) {
      throw Error(ErrorKind::kUnknownStage,
                  "category " + std::to_string(e.box.category) + " has no stage name");
    }
    ++c.counts[static_cast<size_t>(e.box.category)].second;
  }
  return c;
}

Ripeness RipenessPercent(const StageCounts& counts,
                         const std::set<std::string>& ripe_stages) {
  std::int64_t ripe = 0;
  std::int64_t total = 0;
  for (const auto& [stage, n] : counts.counts) {
    if (n < 0) throw Error(ErrorKind::kOutOfRange, "negative count for " + stage);
    total += n;
    if (ripe_stages.count(stage)) ripe += n;
  }
  if (total == 0) throw Error(ErrorKind::kEmptyCounts, "no fruit counted");
  Ripeness r;
  // 100 * ripe is exact for any realistic count, so this is the correctly
  // rounded quotient and does not change when all counts are scaled.
  r.ripeness_percent = (100.0 * static_cast<double>(ripe)) / static_cast<double>(total);
  r.unripeness_percent = 100.0 - r.ripeness_percent;
  return r;
}

StageCounts CollapseBinary(const StageCounts& counts,
                           const std::set<std::string>& ripe_stages,
                           const std::vector<std::string>& configured_stages) {
  StageCounts out;
  out.mode = CountMode::kBinary;
  std::int64_t unripe = 0;
  std::int64_t ripe = 0;
  for (const auto& [stage, n] : counts.counts) {
    if (std::find(configured_stages.begin(), configured_stages.end(), stage) ==
        configured_stages.end()) {
      throw Error(ErrorKind::kUnknownStage, stage);
    }
    (ripe_stages.count(stage) ? ripe : unripe) += n;
  }
  out.counts = {{"unripe", unripe}, {"ripe", ripe}};
  return out;
}

StageCounts CollapseCount(const StageCounts& counts) {
  StageCounts out;
  out.mode = CountMode::kCount;
  out.counts = {{"fruit", counts.Total()}};
  return out;
}

RipenessSample MakeSample(std::string captured_at, StageCounts counts,
                          const std::set<std::string>& ripe_stages) {
  RipenessSample s;
  s.captured_at = std::move(captured_at);
  if (counts.Total() > 0) s.ripeness = RipenessPercent(counts, ripe_stages);
  s.counts = std::move(counts);
  return s;
}

std::optional<std::chrono::sys_time<std::chrono::milliseconds>> ParseTimestamp(
    std::string_view t) {
  using namespace std::chrono;
  if (t.size() < 10 || t[4] != '-' || t[7] != '-') return std::nullopt;
  int y = 0, mo = 0, d = 0;
  if (!AllDigits(t.substr(0, 4)) || !AllDigits(t.substr(5, 2)) ||
      !AllDigits(t.substr(8, 2)) || !ParseInt(t.substr(0, 4), y) ||
      !ParseInt(t.substr(5, 2), mo) || !ParseInt(t.substr(8, 2), d)) {
    return std::nullopt;
  }
  year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)},
                     day{static_cast<unsigned>(d)}};
  if (!ymd.ok()) return std::nullopt;
  sys_time<milliseconds> tp = sys_days{ymd};
  std::string_view rest = t.substr(10);
  if (rest.empty()) return tp;
  if (rest[0] != 'T' && rest[0] != ' ') return std::nullopt;
  rest.remove_prefix(1);

  int hh = 0, mm = 0, ss = 0, ms = 0;
  if (rest.size() < 5 || rest[2] != ':' || !AllDigits(rest.substr(0, 2)) ||
      !AllDigits(rest.substr(3, 2))) {
    return std::nullopt;
  }
  ParseInt(rest.substr(0, 2), hh);
  ParseInt(rest.substr(3, 2), mm);
  rest.remove_prefix(5);
  if (!rest.empty() && rest[0] == ':') {
    if (rest.size() < 3 || !AllDigits(rest.substr(1, 2))) return std::nullopt;
    ParseInt(rest.substr(1, 2), ss);
    rest.remove_prefix(3);
    if (!rest.empty() && rest[0] == '.') {
      size_t n = 1;
      while (n < rest.size() && rest[n] >= '0' && rest[n] <= '9') ++n;
      if (n == 1) return std::nullopt;
      std::string frac(rest.substr(1, n - 1));
      frac.resize(3, '0');
      ParseInt(frac, ms);
      rest.remove_prefix(n);
    }
  }
  if (hh > 23 || mm > 59 || ss > 60) return std::nullopt;
  tp += hours{hh} + minutes{mm} + seconds{ss} + milliseconds{ms};

  if (rest.empty() || rest == "Z") return tp;
  if ((rest[0] == '+' || rest[0] == '-') && rest.size() == 6 && rest[3] == ':' &&
      AllDigits(rest.substr(1, 2)) && AllDigits(rest.substr(4, 2))) {
    int oh = 0, om = 0;
    ParseInt(rest.substr(1, 2), oh);
    ParseInt(rest.substr(4, 2), om);
    if (oh > 23 || om > 59) return std::nullopt;
    const minutes offset = hours{oh} + minutes{om};
    return rest[0] == '+' ? tp - offset : tp + offset;
  }
  return std::nullopt;
}

TimelineSeries BuildTimeline(std::span<const RipenessSample> samples,
                             CountMode mode,
                             const std::set<std::string>& ripe_stages,
                             const std::vector<std::string>& configured_stages) {
  std::vector<std::pair<std::chrono::sys_time<std::chrono::milliseconds>, size_t>>
      keys;
  keys.reserve(samples.size());
  for (size_t i = 0; i < samples.size(); ++i) {
    auto tp = ParseTimestamp(samples[i].captured_at);
    if (!tp) {
      throw Error(ErrorKind::kBadTimestamp,
                  "sample " + std::to_string(i) + ": '" + samples[i].captured_at + "'");
    }
    keys.emplace_back(*tp, i);
  }
  std::stable_sort(keys.begin(), keys.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });

  TimelineSeries series;
  series.mode = mode;
  series.rows.reserve(samples.size());
  for (const auto& [tp, i] : keys) {
    const RipenessSample& s = samples[i];
    TimelineRow row;
    row.captured_at = s.captured_at;
    row.ripeness = s.ripeness;
    switch (mode) {
      case CountMode::kCount: row.counts = CollapseCount(s.counts); break;
      case CountMode::kBinary:
        row.counts = CollapseBinary(s.counts, ripe_stages, configured_stages);
        break;
      case CountMode::kMulticlass: row.counts = s.counts; break;
    }
    series.rows.push_back(std::move(row));
  }
  return series;
}

std::vector<ScheduleEntry> ParseSchedule(std::string_view csv) {
  std::vector<ScheduleEntry> out;
  int line_no = 0;
  bool header = true;
  while (!csv.empty()) {
    const size_t nl = csv.find('\n');
    std::string_view line = csv.substr(0, nl);
    csv = nl == std::string_view::npos ? std::string_view() : csv.substr(nl + 1);
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    if (header) {
      header = false;
      if (line != "image_id,captured_at") {
        throw LineError(ErrorKind::kMalformedLine, line_no,
                        "expected header image_id,captured_at");
      }
      continue;
    }
    const size_t comma = line.find(',');
    if (comma == std::string_view::npos || comma == 0 || comma + 1 == line.size() ||
        line.find(',', comma + 1) != std::string_view::npos) {
      throw LineError(ErrorKind::kMalformedLine, line_no, "expected image_id,captured_at");
    }
    out.push_back({std::string(line.substr(0, comma)), std::string(line.substr(comma + 1))});
  }
  return out;
}

std::string SerializeSchedule(const std::vector<ScheduleEntry>& schedule) {
  std::string out = "image_id,captured_at\n";
  for (const auto& e : schedule) out += e.image_id + "," + e.captured_at + "\n";
  return out;
}

std::vector<RipenessSample> SamplesFromPredictions(
    const std::vector<ScheduleEntry>& schedule,
    const std::map<std::string, PredictionFile>& predictions,
    const std::vector<std::string>& stages,
    const std::set<std::string>& ripe_stages, double confidence_threshold) {
  std::vector<RipenessSample> samples;
  samples.reserve(schedule.size());
  for (const auto& e : schedule) {
    auto it = predictions.find(e.image_id);
    if (it == predictions.end()) throw Error(ErrorKind::kMissingPredictions, e.image_id);
    samples.push_back(MakeSample(e.captured_at,
                                 TallyStages(it->second, stages, confidence_threshold),
                                 ripe_stages));
  }
  return samples;
}

std::string FormatReal(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

std::string TimelineToCsv(const TimelineSeries& series) {
  std::string out =
      "captured_at,mode,stage,count,ripeness_percent,unripeness_percent\n";
  const std::string mode(CountModeName(series.mode));
  for (const TimelineRow& row : series.rows) {
    const std::string ripe = row.ripeness ? FormatReal(row.ripeness->ripeness_percent) : "";
    const std::string unripe =
        row.ripeness ? FormatReal(row.ripeness->unripeness_percent) : "";
    for (const auto& [stage, n] : row.counts.counts) {
      out += row.captured_at;
      out += ',';
      out += mode;
      out += ',';
      out += stage;
      out += ',';
      out += std::to_string(n);
      out += ',';
      out += ripe;
      out += ',';
      out += unripe;
      out += '\n';
    }
  }
  return out;
}

std::string TimelineToJson(const TimelineSeries& series) {
  ordered_json rows = ordered_json::array();
  for (const TimelineRow& row : series.rows) {
    ordered_json j;
    j["captured_at"] = row.captured_at;
    j["mode"] = std::string(CountModeName(series.mode));
    j["counts"] = CountsJson(row.counts);
    if (row.ripeness) {
      j["ripeness_percent"] = row.ripeness->ripeness_percent;
      j["unripeness_percent"] = row.ripeness->unripeness_percent;
    } else {
      j["ripeness_percent"] = nullptr;
      j["unripeness_percent"] = nullptr;
    }
    rows.push_back(std::move(j));
  }
  return rows.dump() + "\n";
}

}  // namespace coffeelab
