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

#ifndef COFFEELAB_DETECTOR_BACKENDS_H_
#define COFFEELAB_DETECTOR_BACKENDS_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "coffeelab/annotation_io.h"
#include "coffeelab/image.h"

namespace coffeelab {

// Rectangle in the a*/b* plane, inclusive bounds.
struct ChromaWindow {
  std::string stage;
  double a_min = 0.0;
  double a_max = 0.0;
  double b_min = 0.0;
  double b_max = 0.0;

  bool Contains(double a, double b) const {
    return a >= a_min && a <= a_max && b >= b_min && b <= b_max;
  }
};

struct ClassicalSpec {
  // Window i detects category i.
  std::vector<ChromaWindow> windows;
  int min_area = 20;      // pixels
  int morph_radius = 1;   // square structuring element half-width; 0 = none
};

struct DetectorSpec {
  enum class Kind { kExternal, kClassical };
  Kind kind = Kind::kClassical;
  std::filesystem::path predictions_dir;  // kExternal
  ClassicalSpec classical;                // kClassical

  std::vector<std::string> StageNames() const;
};

// Windows tuned to the synthetic berry palette (green, green-yellow, cherry,
// raisin, dry) on a neutral background.
DetectorSpec DefaultDetectorSpec();

// JSON schema:
//   {"kind": "classical", "min_area": 20, "morph_radius": 1,
//    "stages": [{"name": "green", "a": [-60, -32], "b": [25, 60]}, ...]}
//   {"kind": "external", "predictions_dir": "preds/"}
// Throws BadConfig.
DetectorSpec ParseDetectorSpec(std::string_view json_text);
std::string DetectorSpecToJson(const DetectorSpec& spec);

// <dir>/<image_id>.txt as 6-field prediction lines. Throws MissingPredictions.
PredictionFile LoadExternal(const std::filesystem::path& dir,
                            const std::string& image_id);

// Per-pixel Lab -> per-stage window mask -> open then close -> 4-connected
// components -> boxes for components of at least min_area pixels. Confidence
// is the share of in-window pixels inside the box. Output is ordered by each
// component's first pixel in raster order, then by stage.
PredictionFile DetectClassical(const RgbImage& image, const ClassicalSpec& spec,
                               std::string image_id = {});

namespace detail {

struct Mask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> bits;

  bool at(int x, int y) const { return bits[static_cast<size_t>(y) * width + x] != 0; }
};

struct Component {
  int first_pixel = 0;  // raster index of the top-left-most pixel
  int area = 0;
  int x0 = 0, y0 = 0, x1 = 0, y1 = 0;  // inclusive bounds
};

Mask Erode(const Mask& m, int radius);
Mask Dilate(const Mask& m, int radius);
Mask OpenClose(const Mask& m, int radius);
std::vector<Component> ConnectedComponents4(const Mask& m);

}  // namespace detail

}  // namespace coffeelab

#endif  // COFFEELAB_DETECTOR_BACKENDS_H_
