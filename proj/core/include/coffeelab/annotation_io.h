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

#ifndef COFFEELAB_ANNOTATION_IO_H_
#define COFFEELAB_ANNOTATION_IO_H_

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace coffeelab {

// Tolerance for coordinates that drift slightly outside [0, 1] through float
// round-trips. Anything further out is rejected.
inline constexpr double kCoordTolerance = 1e-6;

// One YOLO-format box: category plus normalized center and size.
struct NormalizedBox {
  int category = 0;
  double cx = 0.0;
  double cy = 0.0;
  double w = 0.0;
  double h = 0.0;

  double x0() const { return cx - w / 2.0; }
  double x1() const { return cx + w / 2.0; }
  double y0() const { return cy - h / 2.0; }
  double y1() const { return cy + h / 2.0; }

  bool operator==(const NormalizedBox&) const = default;
};

// Throws OutOfRange when the box breaks the normalized-geometry invariants.
void ValidateBox(const NormalizedBox& box);

struct LabelFile {
  std::string image_id;
  std::vector<NormalizedBox> boxes;
  std::vector<std::string> category_names;
};

struct PredictionEntry {
  NormalizedBox box;
  double confidence = 0.0;
};

struct PredictionFile {
  std::string image_id;
  std::vector<PredictionEntry> entries;
};

// "idx cx cy w h" per non-empty line. Values within kCoordTolerance of [0, 1]
// are clamped. Throws LineError(MalformedLine | OutOfRange).
LabelFile ParseYoloLabel(std::string_view text, std::string image_id = {});

// Exactly 6 decimals per real, LF-terminated lines.
std::string SerializeYoloLabel(const LabelFile& file);

// "idx conf cx cy w h" per non-empty line.
PredictionFile ParsePredictions(std::string_view text,
                                std::string image_id = {});
std::string SerializePredictions(const PredictionFile& file);

// names.txt: one category name per line, index = line number. Blank trailing
// lines are dropped.
std::vector<std::string> ParseNames(std::string_view text);
std::string SerializeNames(const std::vector<std::string>& names);

// Throws OutOfRange if any box category is not covered by `names`.
void CheckCategories(const LabelFile& file,
                     const std::vector<std::string>& names);

struct LabelStudioConversion {
  std::vector<LabelFile> files;
  // Category names in index order: either the supplied names or labels in
  // first-seen order.
  std::vector<std::string> names;
};

// Reads a Label Studio JSON-MIN export of rectangle labels. Each task needs an
// "image" key; rectangles live in any array-of-objects field whose items carry
// "rectanglelabels". Coordinates are percentages of the image size.
// Throws UnsupportedSchema or UnknownLabel.
LabelStudioConversion ConvertLabelStudio(
    std::string_view json_export,
    const std::optional<std::vector<std::string>>& names = std::nullopt);

// Directory helpers. Keys are image ids (file stems).
std::map<std::string, LabelFile> ReadLabelDir(const std::filesystem::path& dir);
std::map<std::string, PredictionFile> ReadPredictionDir(
    const std::filesystem::path& dir);
void WriteLabelFile(const std::filesystem::path& dir, const LabelFile& file);
void WritePredictionFile(const std::filesystem::path& dir,
                         const PredictionFile& file);

}  // namespace coffeelab

#endif  // COFFEELAB_ANNOTATION_IO_H_
