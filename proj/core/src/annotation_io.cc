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

#include "coffeelab/annotation_io.h"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>

#include "coffeelab/error.h"
#include "coffeelab/fs_util.h"
#include "json.hpp"

namespace coffeelab {
namespace {

using json = nlohmann::json;

std::vector<std::string_view> SplitFields(std::string_view line) {
  std::vector<std::string_view> fields;
  size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i])))
      ++i;
    size_t start = i;
    while (i < line.size() &&
           !std::isspace(static_cast<unsigned char>(line[i])))
      ++i;
    if (i > start) fields.push_back(line.substr(start, i - start));
  }
  return fields;
}

bool ParseDouble(std::string_view s, double& out) {
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && ptr == end && std::isfinite(out);
}

bool ParseCategory(std::string_view s, int& out) {
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && ptr == end && out >= 0;
}

// Clamps a coordinate that is within tolerance of [0, 1]; false otherwise.
bool ClampUnit(double& v) {
  if (v < -kCoordTolerance || v > 1.0 + kCoordTolerance) return false;
  v = std::clamp(v, 0.0, 1.0);
  return true;
}

// Returns an empty string on success, otherwise a description of the problem.
std::string NormalizeBox(NormalizedBox& box) {
  if (!ClampUnit(box.cx) || !ClampUnit(box.cy) || !ClampUnit(box.w) ||
      !ClampUnit(box.h)) {
    return "coordinate outside [0,1]";
  }
  if (box.w <= 0.0 || box.h <= 0.0) return "non-positive box size";
  if (box.x0() < -kCoordTolerance || box.x1() > 1.0 + kCoordTolerance ||
      box.y0() < -kCoordTolerance || box.y1() > 1.0 + kCoordTolerance) {
    return "box extends outside the image";
  }
  return {};
}

// Calls fn(line_no, fields) for each non-blank line.
template <typename Fn>
void ForEachLine(std::string_view text, Fn&& fn) {
  int line_no = 0;
  size_t pos = 0;
  while (pos < text.size()) {
    size_t nl = text.find('\n', pos);
    std::string_view line = text.substr(
        pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() : nl + 1;
    ++line_no;
    auto fields = SplitFields(line);
    if (fields.empty()) continue;
    fn(line_no, fields);
  }
}

void AppendReal(std::string& out, double v) {
  char buf[64];
  int n = std::snprintf(buf, sizeof(buf), "%.6f", v);
  out.append(buf, static_cast<size_t>(n));
}

void AppendGeometry(std::string& out, const NormalizedBox& b) {
  out += ' ';
  AppendReal(out, b.cx);
  out += ' ';
  AppendReal(out, b.cy);
  out += ' ';
  AppendReal(out, b.w);
  out += ' ';
  AppendReal(out, b.h);
}

}  // namespace

void ValidateBox(const NormalizedBox& box) {
  if (box.category < 0) throw Error(ErrorKind::kOutOfRange, "negative category");
  NormalizedBox copy = box;
  std::string problem = NormalizeBox(copy);
  if (!problem.empty()) throw Error(ErrorKind::kOutOfRange, problem);
}

LabelFile ParseYoloLabel(std::string_view text, std::string image_id) {
  LabelFile file;
  file.image_id = std::move(image_id);
  ForEachLine(text, [&](int line_no, const std::vector<std::string_view>& f) {
    if (f.size() != 5) {
      throw LineError(ErrorKind::kMalformedLine, line_no,
                      "expected 5 fields, got " + std::to_string(f.size()));
    }
    NormalizedBox box;
    if (!ParseCategory(f[0], box.category) || !ParseDouble(f[1], box.cx) ||
        !ParseDouble(f[2], box.cy) || !ParseDouble(f[3], box.w) ||
        !ParseDouble(f[4], box.h)) {
      throw LineError(ErrorKind::kMalformedLine, line_no, "non-numeric field");
    }
    std::string problem = NormalizeBox(box);
    if (!problem.empty()) {
      throw LineError(ErrorKind::kOutOfRange, line_no, problem);
    }
    file.boxes.push_back(box);
  });
  return file;
}

std::string SerializeYoloLabel(const LabelFile& file) {
  std::string out;
  out.reserve(file.boxes.size() * 40);
  for (const NormalizedBox& b : file.boxes) {
    out += std::to_string(b.category);
    AppendGeometry(out, b);
    out += '\n';
  }
  return out;
}

PredictionFile ParsePredictions(std::string_view text, std::string image_id) {
  PredictionFile file;
  file.image_id = std::move(image_id);
  ForEachLine(text, [&](int line_no, const std::vector<std::string_view>& f) {
    if (f.size() != 6) {
      throw LineError(ErrorKind::kMalformedLine, line_no,
                      "expected 6 fields, got " + std::to_string(f.size()));
    }
    PredictionEntry e;
    if (!ParseCategory(f[0], e.box.category) ||
        !ParseDouble(f[1], e.confidence) || !ParseDouble(f[2], e.box.cx) ||
        !ParseDouble(f[3], e.box.cy) || !ParseDouble(f[4], e.box.w) ||
        !ParseDouble(f[5], e.box.h)) {
      throw LineError(ErrorKind::kMalformedLine, line_no, "non-numeric field");
    }
    if (e.confidence < 0.0 || e.confidence > 1.0) {
      throw LineError(ErrorKind::kOutOfRange, line_no,
                      "confidence outside [0,1]");
    }
    std::string problem = NormalizeBox(e.box);
    if (!problem.empty()) {
      throw LineError(ErrorKind::kOutOfRange, line_no, problem);
    }
    file.entries.push_back(e);
  });
  return file;
}

std::string SerializePredictions(const PredictionFile& file) {
  std::string out;
  out.reserve(file.entries.size() * 48);
  for (const PredictionEntry& e : file.entries) {
    out += std::to_string(e.box.category);
    out += ' ';
    AppendReal(out, e.confidence);
    AppendGeometry(out, e.box);
    out += '\n';
  }
  return out;
}

std::vector<std::string> ParseNames(std::string_view text) {
  std::vector<std::string> names;
  size_t pos = 0;
  while (pos < text.size()) {
    size_t nl = text.find('\n', pos);
    std::string_view line = text.substr(
        pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() : nl + 1;
    while (!line.empty() && (line.back() == '\r' || line.back() == ' '))
      line.remove_suffix(1);
    names.emplace_back(line);
  }
  while (!names.empty() && names.back().empty()) names.pop_back();
  return names;
}

std::string SerializeNames(const std::vector<std::string>& names) {
  std::string out;
  for (const auto& n : names) {
    out += n;
    out += '\n';
  }
  return out;
}

void CheckCategories(const LabelFile& file,
                     const std::vector<std::string>& names) {
  for (size_t i = 0; i < file.boxes.size(); ++i) {
    if (static_cast<size_t>(file.boxes[i].category) >= names.size()) {
      throw Error(ErrorKind::kOutOfRange,
                  file.image_id + ": box " + std::to_string(i) +
                      " has category " +
                      std::to_string(file.boxes[i].category) + " but only " +
                      std::to_string(names.size()) + " names");
    }
  }
}

LabelStudioConversion ConvertLabelStudio(
    std::string_view json_export,
    const std::optional<std::vector<std::string>>& names) {
  json root = json::parse(json_export, nullptr, /*allow_exceptions=*/false);
  if (root.is_discarded() || !root.is_array()) {
    throw Error(ErrorKind::kUnsupportedSchema,
                "expected a JSON array of tasks");
  }

  LabelStudioConversion result;
  if (names) result.names = *names;
  auto category_of = [&](const std::string& label) -> int {
    auto it = std::find(result.names.begin(), result.names.end(), label);
    if (it != result.names.end()) {
      return static_cast<int>(it - result.names.begin());
    }
    if (names) throw Error(ErrorKind::kUnknownLabel, label);
    result.names.push_back(label);
    return static_cast<int>(result.names.size() - 1);
  };

  for (size_t t = 0; t < root.size(); ++t) {
    const json& task = root[t];
    const std::string where = "task " + std::to_string(t);
    if (!task.is_object() || !task.contains("image") ||
        !task["image"].is_string()) {
      throw Error(ErrorKind::kUnsupportedSchema, where + ": missing \"image\"");
    }
    LabelFile file;
    file.image_id =
        std::filesystem::path(task["image"].get<std::string>()).stem().string();

    for (const auto& [key, value] : task.items()) {
      if (!value.is_array() || value.empty()) continue;
      bool is_rect_list = std::all_of(value.begin(), value.end(),
                                      [](const json& r) {
                                        return r.is_object() &&
                                               r.contains("rectanglelabels");
                                      });
      if (!is_rect_list) continue;
      for (const json& r : value) {
        for (const char* k : {"x", "y", "width", "height"}) {
          if (!r.contains(k) || !r[k].is_number()) {
            throw Error(ErrorKind::kUnsupportedSchema,
                        where + ": rectangle without numeric \"" + k + "\"");
          }
        }
        const json& labels = r["rectanglelabels"];
        if (!labels.is_array() || labels.empty() || !labels[0].is_string()) {
          throw Error(ErrorKind::kUnsupportedSchema,
                      where + ": empty \"rectanglelabels\"");
        }
        const double x = r["x"].get<double>();
        const double y = r["y"].get<double>();
        const double w = r["width"].get<double>();
        const double h = r["height"].get<double>();
        NormalizedBox box;
        box.category = category_of(labels[0].get<std::string>());
        box.cx = (x + w / 2.0) / 100.0;
        box.cy = (y + h / 2.0) / 100.0;
        box.w = w / 100.0;
        box.h = h / 100.0;
        std::string problem = NormalizeBox(box);
        if (!problem.empty()) {
          throw Error(ErrorKind::kOutOfRange, where + ": " + problem);
        }
        file.boxes.push_back(box);
      }
    }
    result.files.push_back(std::move(file));
  }
  for (auto& f : result.files) f.category_names = result.names;
  return result;
}

std::map<std::string, LabelFile> ReadLabelDir(const std::filesystem::path& dir) {
  std::map<std::string, LabelFile> out;
  for (const auto& path : ListFiles(dir, ".txt")) {
    std::string id = path.stem().string();
    if (path.filename() == "names.txt" || path.filename() == "classes.txt")
      continue;
    out.emplace(id, ParseYoloLabel(ReadTextFile(path), id));
  }
  return out;
}

std::map<std::string, PredictionFile> ReadPredictionDir(
    const std::filesystem::path& dir) {
  std::map<std::string, PredictionFile> out;
  for (const auto& path : ListFiles(dir, ".txt")) {
    std::string id = path.stem().string();
    if (path.filename() == "names.txt" || path.filename() == "classes.txt")
      continue;
    out.emplace(id, ParsePredictions(ReadTextFile(path), id));
  }
  return out;
}

void WriteLabelFile(const std::filesystem::path& dir, const LabelFile& file) {
  WriteFileAtomic(dir / (file.image_id + ".txt"), SerializeYoloLabel(file));
}

void WritePredictionFile(const std::filesystem::path& dir,
                         const PredictionFile& file) {
  WriteFileAtomic(dir / (file.image_id + ".txt"), SerializePredictions(file));
}

}  // namespace coffeelab
