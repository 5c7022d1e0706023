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

#ifndef COFFEELAB_SYNTH_H_
#define COFFEELAB_SYNTH_H_

#include <array>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "coffeelab/annotation_io.h"
#include "coffeelab/image.h"
#include "coffeelab/ripeness_analytics.h"

namespace coffeelab {

// Synthetic berries: flat-shaded discs in five stage colors. Used for tests,
// benchmarks and the hidden `synth` subcommand.

inline constexpr int kSynthStages = 5;

// green, green-yellow, cherry, raisin, dry.
const std::array<Rgb, kSynthStages>& StagePalette();
std::vector<std::string> SynthStageNames();

// Scales a color by `factor`, rounding and clamping to [0, 255].
Rgb Shade(Rgb c, double factor);

// Filled disc of pixels with distance <= radius from (cx, cy).
void DrawDisc(RgbImage& image, int cx, int cy, int radius, Rgb color);

// Bounding box of DrawDisc(cx, cy, radius) grown by `margin`, clamped and
// normalized. The category is set to `category`.
NormalizedBox DiscBox(int width, int height, int cx, int cy, int radius,
                      int margin, int category);

struct BerryDatasetOptions {
  int images = 40;
  int berries_per_image = 25;  // laid out on a square grid
  int image_size = 320;
  int noise = 6;               // uniform per-channel noise amplitude
  std::uint64_t seed = 7;
};

// Labels carry the true stage as category.
struct BerryDataset {
  std::vector<std::string> stage_names;
  std::vector<RgbImage> images;
  std::vector<LabelFile> labels;
};

// Stages are balanced: berry g (over all images) has stage g % 5, placed at a
// shuffled grid cell. Each berry gets a brightness in [0.8, 1.1] and radial
// darkening; the background is neutral gray.
BerryDataset GenerateBerryDataset(const BerryDatasetOptions& options);

// <dir>/images/<id>.png, <dir>/labels/<id>.txt and <dir>/labels/names.txt.
void WriteBerryDataset(const BerryDataset& dataset, const std::filesystem::path& dir);

struct SeasonOptions {
  int days = 90;
  int berries_per_image = 36;
  int image_size = 240;
  int start_year = 2024;
  unsigned start_month = 3;
  unsigned start_day = 1;
  std::uint64_t seed = 11;
};

struct SeasonDay {
  std::string image_id;
  std::string captured_at;
  RgbImage image;
  LabelFile truth;      // one box per disc, category = stage
  StageCounts counts;   // multiclass, stage order
};

struct Season {
  std::vector<std::string> stage_names;
  std::vector<SeasonDay> days;
};

// Logistic ripening: the ripe share on day t is 1 / (1 + exp(-(t - 50) / 9)),
// rounded to whole berries. Discs are flat colored (brightness 0.9 to 1.05)
// on white and never touch.
Season GenerateSeason(const SeasonOptions& options);

std::vector<ScheduleEntry> SeasonSchedule(const Season& season);

// The generator's own timeline, from its known per-day counts.
TimelineSeries SeasonTruth(const Season& season, CountMode mode,
                           const std::set<std::string>& ripe_stages);

// <dir>/images/<id>.png, <dir>/labels/, <dir>/schedule.csv and
// <dir>/truth_<mode>.csv for binary and multiclass.
void WriteSeason(const Season& season, const std::filesystem::path& dir);

}  // namespace coffeelab

#endif  // COFFEELAB_SYNTH_H_
