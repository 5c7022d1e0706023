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

#include "coffeelab/synth.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "coffeelab/cluster_engine.h"
#include "coffeelab/error.h"
#include "coffeelab/fs_util.h"

namespace coffeelab {
namespace {

// Portable draws; std distributions differ between standard libraries.
int UniformInt(std::mt19937_64& gen, int lo, int hi) {
  const auto span = static_cast<std::uint64_t>(hi - lo + 1);
  return lo + static_cast<int>(gen() % span);
}

double Uniform(std::mt19937_64& gen, double lo, double hi) {
  return lo + (hi - lo) * static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

template <typename T>
void Shuffle(std::vector<T>& v, std::mt19937_64& gen) {
  for (size_t i = v.size(); i > 1; --i) {
    const size_t j = static_cast<size_t>(gen() % i);
    std::swap(v[i - 1], v[j]);
  }
}

int GridSide(int berries) {
  int side = 1;
  while (side * side < berries) ++side;
  return side;
}

std::uint8_t Clamp8(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::floor(v + 0.5), 0.0, 255.0));
}

std::string DayStamp(int year, unsigned month, unsigned day, int offset) {
  using namespace std::chrono;
  const sys_days start{std::chrono::year{year} / std::chrono::month{month} /
                       std::chrono::day{day}};
  const year_month_day ymd{start + days{offset}};
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02uT08:00:00Z", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

}  // namespace

const std::array<Rgb, kSynthStages>& StagePalette() {
  static const std::array<Rgb, kSynthStages> palette = {{
      {60, 140, 40},   // green
      {175, 190, 50},  // green-yellow
      {190, 25, 35},   // cherry
      {85, 25, 75},    // raisin
      {120, 85, 50},   // dry
  }};
  return palette;
}

std::vector<std::string> SynthStageNames() { return DefaultStageNames(kSynthStages); }

Rgb Shade(Rgb c, double factor) {
  return {Clamp8(c[0] * factor), Clamp8(c[1] * factor), Clamp8(c[2] * factor)};
}

void DrawDisc(RgbImage& image, int cx, int cy, int radius, Rgb color) {
  for (int y = std::max(0, cy - radius); y <= std::min(image.height() - 1, cy + radius); ++y) {
    for (int x = std::max(0, cx - radius); x <= std::min(image.width() - 1, cx + radius); ++x) {
      const int dx = x - cx;
      const int dy = y - cy;
      if (dx * dx + dy * dy <= radius * radius) image.set(x, y, color);
    }
  }
}

NormalizedBox DiscBox(int width, int height, int cx, int cy, int radius,
                      int margin, int category) {
  const int x0 = std::max(0, cx - radius - margin);
  const int y0 = std::max(0, cy - radius - margin);
  const int x1 = std::min(width, cx + radius + margin + 1);
  const int y1 = std::min(height, cy + radius + margin + 1);
  NormalizedBox b;
  b.category = category;
  b.cx = (x0 + x1) / 2.0 / width;
  b.cy = (y0 + y1) / 2.0 / height;
  b.w = static_cast<double>(x1 - x0) / width;
  b.h = static_cast<double>(y1 - y0) / height;
  return b;
}

BerryDataset GenerateBerryDataset(const BerryDatasetOptions& o) {
  if (o.images < 0 || o.berries_per_image < 1 || o.image_size < 32) {
    throw Error(ErrorKind::kBadConfig, "bad berry dataset options");
  }
  BerryDataset ds;
  ds.stage_names = SynthStageNames();
  std::mt19937_64 gen(o.seed);
  const int side = GridSide(o.berries_per_image);
  const int cell = o.image_size / side;
  const Rgb background{128, 128, 128};
  int global = 0;
  for (int img = 0; img < o.images; ++img) {
    char id[32];
    std::snprintf(id, sizeof(id), "berry_%04d", img);
    RgbImage image(o.image_size, o.image_size, background);
    LabelFile labels;
    labels.image_id = id;
    labels.category_names = ds.stage_names;

    std::vector<int> cells(static_cast<size_t>(side * side));
    std::iota(cells.begin(), cells.end(), 0);
    Shuffle(cells, gen);
    for (int k = 0; k < o.berries_per_image; ++k, ++global) {
      const int stage = global % kSynthStages;
      const int cell_x = cells[static_cast<size_t>(k)] % side;
      const int cell_y = cells[static_cast<size_t>(k)] / side;
      const int max_r = cell / 2 - 4;
      const int r = UniformInt(gen, std::max(4, max_r * 2 / 3), max_r);
      const int slack = cell / 2 - r - 2;
      const int cx = cell_x * cell + cell / 2 + UniformInt(gen, -slack, slack);
      const int cy = cell_y * cell + cell / 2 + UniformInt(gen, -slack, slack);
      const double brightness = Uniform(gen, 0.8, 1.1);
      const Rgb base = StagePalette()[static_cast<size_t>(stage)];
      for (int y = cy - r; y <= cy + r; ++y) {
        for (int x = cx - r; x <= cx + r; ++x) {
          const double d2 = static_cast<double>((x - cx) * (x - cx) + (y - cy) * (y - cy));
          if (d2 > static_cast<double>(r * r)) continue;
          image.set(x, y, Shade(base, brightness * (1.0 - 0.2 * d2 / (r * r))));
        }
      }
      labels.boxes.push_back(DiscBox(o.image_size, o.image_size, cx, cy, r, 1, stage));
    }
    if (o.noise > 0) {
      auto bytes = image.mutable_bytes();
      for (auto& v : bytes) {
        v = Clamp8(static_cast<double>(v) + UniformInt(gen, -o.noise, o.noise));
      }
    }
    ds.images.push_back(std::move(image));
    ds.labels.push_back(std::move(labels));
  }
  return ds;
}

void WriteBerryDataset(const BerryDataset& ds, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir / "images");
  std::filesystem::create_directories(dir / "labels");
  for (size_t i = 0; i < ds.images.size(); ++i) {
    WritePng(dir / "images" / (ds.labels[i].image_id + ".png"), ds.images[i]);
    WriteLabelFile(dir / "labels", ds.labels[i]);
  }
  WriteFileAtomic(dir / "labels" / "names.txt", SerializeNames(ds.stage_names));
}

Season GenerateSeason(const SeasonOptions& o) {
  if (o.days < 1 || o.berries_per_image < 1 || o.image_size < 32) {
    throw Error(ErrorKind::kBadConfig, "bad season options");
  }
  Season season;
  season.stage_names = SynthStageNames();
  std::mt19937_64 gen(o.seed);
  const int side = GridSide(o.berries_per_image);
  const int cell = o.image_size / side;
  const int max_r = cell / 2 - 6;
  if (max_r < 6) throw Error(ErrorKind::kBadConfig, "season cells too small for berries");
  const int n = o.berries_per_image;
  const double span = std::max(1, o.days - 1);

  for (int t = 0; t < o.days; ++t) {
    // Calendar-relative day so shorter seasons still ripen fully.
    const double day = 89.0 * t / span;
    const double ripe_share = 1.0 / (1.0 + std::exp(-(day - 50.0) / 9.0));
    const int ripe = static_cast<int>(std::lround(n * ripe_share));
    const int unripe = n - ripe;
    const int green_yellow = static_cast<int>(std::lround(unripe * std::min(1.0, day / 60.0) * 0.6));
    const int green = unripe - green_yellow;
    const int raisin = static_cast<int>(std::lround(ripe * 0.15 * day / 89.0));
    const int dry = static_cast<int>(std::lround(ripe * 0.05 * day / 89.0));
    const int cherry = ripe - raisin - dry;
    const std::array<int, kSynthStages> per_stage = {green, green_yellow, cherry, raisin, dry};

    SeasonDay d;
    char id[32];
    std::snprintf(id, sizeof(id), "day_%03d", t);
    d.image_id = id;
    d.captured_at = DayStamp(o.start_year, o.start_month, o.start_day, t);
    d.image = RgbImage(o.image_size, o.image_size, {255, 255, 255});
    d.truth.image_id = id;
    d.truth.category_names = season.stage_names;
    d.counts = EmptyCounts(season.stage_names);

    std::vector<int> stages;
    for (int s = 0; s < kSynthStages; ++s) {
      stages.insert(stages.end(), static_cast<size_t>(per_stage[static_cast<size_t>(s)]), s);
      d.counts.counts[static_cast<size_t>(s)].second = per_stage[static_cast<size_t>(s)];
    }
    std::vector<int> cells(static_cast<size_t>(side * side));
    std::iota(cells.begin(), cells.end(), 0);
    Shuffle(cells, gen);
    for (int k = 0; k < n; ++k) {
      const int stage = stages[static_cast<size_t>(k)];
      const int cell_x = cells[static_cast<size_t>(k)] % side;
      const int cell_y = cells[static_cast<size_t>(k)] / side;
      const int r = UniformInt(gen, std::max(6, max_r - 4), max_r);
      const int slack = cell / 2 - r - 3;
      const int cx = cell_x * cell + cell / 2 + UniformInt(gen, -slack, slack);
      const int cy = cell_y * cell + cell / 2 + UniformInt(gen, -slack, slack);
      const double brightness = Uniform(gen, 0.9, 1.05);
      DrawDisc(d.image, cx, cy, r, Shade(StagePalette()[static_cast<size_t>(stage)], brightness));
      d.truth.boxes.push_back(DiscBox(o.image_size, o.image_size, cx, cy, r, 0, stage));
    }
    season.days.push_back(std::move(d));
  }
  return season;
}

std::vector<ScheduleEntry> SeasonSchedule(const Season& season) {
  std::vector<ScheduleEntry> out;
  for (const auto& d : season.days) out.push_back({d.image_id, d.captured_at});
  return out;
}

TimelineSeries SeasonTruth(const Season& season, CountMode mode,
                           const std::set<std::string>& ripe_stages) {
  std::vector<RipenessSample> samples;
  for (const auto& d : season.days) {
    samples.push_back(MakeSample(d.captured_at, d.counts, ripe_stages));
  }
  return BuildTimeline(samples, mode, ripe_stages, season.stage_names);
}

void WriteSeason(const Season& season, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir / "images");
  std::filesystem::create_directories(dir / "labels");
  for (const auto& d : season.days) {
    WritePng(dir / "images" / (d.image_id + ".png"), d.image);
    WriteLabelFile(dir / "labels", d.truth);
  }
  WriteFileAtomic(dir / "labels" / "names.txt", SerializeNames(season.stage_names));
  WriteFileAtomic(dir / "schedule.csv", SerializeSchedule(SeasonSchedule(season)));
  const auto ripe = DefaultRipeStages();
  WriteFileAtomic(dir / "truth_binary.csv",
                  TimelineToCsv(SeasonTruth(season, CountMode::kBinary, ripe)));
  WriteFileAtomic(dir / "truth_multiclass.csv",
                  TimelineToCsv(SeasonTruth(season, CountMode::kMulticlass, ripe)));
}

}  // namespace coffeelab
