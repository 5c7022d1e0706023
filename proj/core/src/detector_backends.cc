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

#include "coffeelab/detector_backends.h"

#include <algorithm>
#include <tuple>

#include "coffeelab/color_features.h"
#include "coffeelab/error.h"
#include "coffeelab/fs_util.h"
#include "json.hpp"

namespace coffeelab {
namespace detail {
namespace {

// Sliding-window count of set pixels along one axis, clipped at the borders.
// keep_if_all: erosion semantics, otherwise dilation.
Mask Filter1D(const Mask& m, int radius, bool horizontal, bool keep_if_all) {
  Mask out{m.width, m.height, std::vector<std::uint8_t>(m.bits.size(), 0)};
  const int outer = horizontal ? m.height : m.width;
  const int inner = horizontal ? m.width : m.height;
  std::vector<int> prefix(static_cast<size_t>(inner) + 1);
  for (int o = 0; o < outer; ++o) {
    auto idx = [&](int i) {
      return horizontal ? static_cast<size_t>(o) * m.width + i
                        : static_cast<size_t>(i) * m.width + o;
    };
    prefix[0] = 0;
    for (int i = 0; i < inner; ++i) prefix[i + 1] = prefix[i] + (m.bits[idx(i)] ? 1 : 0);
    for (int i = 0; i < inner; ++i) {
      const int lo = std::max(0, i - radius);
      const int hi = std::min(inner - 1, i + radius);
      const int set = prefix[hi + 1] - prefix[lo];
      const bool on = keep_if_all ? set == hi - lo + 1 : set > 0;
      out.bits[idx(i)] = on ? 1 : 0;
    }
  }
  return out;
}

}  // namespace

Mask Erode(const Mask& m, int radius) {
  if (radius <= 0) return m;
  return Filter1D(Filter1D(m, radius, true, true), radius, false, true);
}

Mask Dilate(const Mask& m, int radius) {
  if (radius <= 0) return m;
  return Filter1D(Filter1D(m, radius, true, false), radius, false, false);
}

Mask OpenClose(const Mask& m, int radius) {
  if (radius <= 0) return m;
  Mask opened = Dilate(Erode(m, radius), radius);
  return Erode(Dilate(opened, radius), radius);
}

std::vector<Component> ConnectedComponents4(const Mask& m) {
  std::vector<Component> out;
  std::vector<std::uint8_t> seen(m.bits.size(), 0);
  std::vector<int> stack;
  for (int y = 0; y < m.height; ++y) {
    for (int x = 0; x < m.width; ++x) {
      const int start = y * m.width + x;
      if (!m.bits[start] || seen[start]) continue;
      Component c;
      c.first_pixel = start;
      c.x0 = c.x1 = x;
      c.y0 = c.y1 = y;
      seen[start] = 1;
      stack.push_back(start);
      while (!stack.empty()) {
        const int p = stack.back();
        stack.pop_back();
        const int px = p % m.width;
        const int py = p / m.width;
        ++c.area;
        c.x0 = std::min(c.x0, px);
        c.x1 = std::max(c.x1, px);
        c.y0 = std::min(c.y0, py);
        c.y1 = std::max(c.y1, py);
        const int nbr[4][2] = {{px - 1, py}, {px + 1, py}, {px, py - 1}, {px, py + 1}};
        for (const auto& n : nbr) {
          if (n[0] < 0 || n[1] < 0 || n[0] >= m.width || n[1] >= m.height) continue;
          const int q = n[1] * m.width + n[0];
          if (m.bits[q] && !seen[q]) {
            seen[q] = 1;
            stack.push_back(q);
          }
        }
      }
      out.push_back(c);
    }
  }
  return out;
}

}  // namespace detail

namespace {

using json = nlohmann::json;

std::pair<double, double> ReadRange(const json& j, const char* key) {
  if (!j.contains(key) || !j[key].is_array() || j[key].size() != 2 ||
      !j[key][0].is_number() || !j[key][1].is_number()) {
    throw Error(ErrorKind::kBadConfig,
                std::string("stage window needs \"") + key + "\": [min, max]");
  }
  const double lo = j[key][0].get<double>();
  const double hi = j[key][1].get<double>();
  if (lo > hi) {
    throw Error(ErrorKind::kBadConfig, std::string("empty window on ") + key);
  }
  return {lo, hi};
}

}  // namespace

std::vector<std::string> DetectorSpec::StageNames() const {
  std::vector<std::string> names;
  for (const auto& w : classical.windows) names.push_back(w.stage);
  return names;
}

DetectorSpec DefaultDetectorSpec() {
  DetectorSpec spec;
  spec.kind = DetectorSpec::Kind::kClassical;
  spec.classical.min_area = 20;
  spec.classical.morph_radius = 1;
  spec.classical.windows = {
      {"green", -60.0, -30.0, 20.0, 62.0},
      {"green-yellow", -29.9, -8.0, 40.0, 90.0},
      {"cherry", 38.0, 90.0, 18.0, 75.0},
      {"raisin", 15.0, 58.0, -42.0, -4.0},
      {"dry", 2.0, 22.0, 10.0, 40.0},
  };
  return spec;
}

DetectorSpec ParseDetectorSpec(std::string_view json_text) {
  json j = json::parse(json_text, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    throw Error(ErrorKind::kBadConfig, "detector config is not a JSON object");
  }
  DetectorSpec spec;
  const std::string kind = j.value("kind", std::string("classical"));
  if (kind == "external") {
    spec.kind = DetectorSpec::Kind::kExternal;
    if (!j.contains("predictions_dir") || !j["predictions_dir"].is_string()) {
      throw Error(ErrorKind::kBadConfig, "external detector needs predictions_dir");
    }
    spec.predictions_dir = j["predictions_dir"].get<std::string>();
    if (j.contains("stages")) {
      for (const auto& s : j["stages"]) {
        ChromaWindow w;
        w.stage = s.is_string() ? s.get<std::string>() : s.value("name", std::string());
        spec.classical.windows.push_back(w);
      }
    }
    return spec;
  }
  if (kind != "classical") {
    throw Error(ErrorKind::kBadConfig, "unknown detector kind '" + kind + "'");
  }
  spec.kind = DetectorSpec::Kind::kClassical;
  spec.classical.min_area = j.value("min_area", 20);
  spec.classical.morph_radius = j.value("morph_radius", 1);
  if (spec.classical.min_area < 1) {
    throw Error(ErrorKind::kBadConfig, "min_area must be >= 1");
  }
  if (spec.classical.morph_radius < 0) {
    throw Error(ErrorKind::kBadConfig, "morph_radius must be >= 0");
  }
  if (!j.contains("stages") || !j["stages"].is_array() || j["stages"].empty()) {
    throw Error(ErrorKind::kBadConfig, "classical detector needs stage windows");
  }
  for (const auto& s : j["stages"]) {
    if (!s.is_object() || !s.contains("name") || !s["name"].is_string()) {
      throw Error(ErrorKind::kBadConfig, "stage window without a name");
    }
    ChromaWindow w;
    w.stage = s["name"].get<std::string>();
    std::tie(w.a_min, w.a_max) = ReadRange(s, "a");
    std::tie(w.b_min, w.b_max) = ReadRange(s, "b");
    spec.classical.windows.push_back(w);
  }
  return spec;
}

std::string DetectorSpecToJson(const DetectorSpec& spec) {
  json j;
  if (spec.kind == DetectorSpec::Kind::kExternal) {
    j["kind"] = "external";
    j["predictions_dir"] = spec.predictions_dir.string();
    if (!spec.classical.windows.empty()) j["stages"] = spec.StageNames();
    return j.dump(2) + "\n";
  }
  j["kind"] = "classical";
  j["min_area"] = spec.classical.min_area;
  j["morph_radius"] = spec.classical.morph_radius;
  json stages = json::array();
  for (const auto& w : spec.classical.windows) {
    stages.push_back({{"name", w.stage},
                      {"a", {w.a_min, w.a_max}},
                      {"b", {w.b_min, w.b_max}}});
  }
  j["stages"] = std::move(stages);
  return j.dump(2) + "\n";
}

PredictionFile LoadExternal(const std::filesystem::path& dir,
                            const std::string& image_id) {
  const auto path = dir / (image_id + ".txt");
  if (!std::filesystem::is_regular_file(path)) {
    throw Error(ErrorKind::kMissingPredictions, image_id);
  }
  return ParsePredictions(ReadTextFile(path), image_id);
}

PredictionFile DetectClassical(const RgbImage& image, const ClassicalSpec& spec,
                               std::string image_id) {
  PredictionFile out;
  out.image_id = std::move(image_id);
  if (image.empty() || spec.windows.empty()) return out;
  const int W = image.width();
  const int H = image.height();
  const size_t n = static_cast<size_t>(W) * static_cast<size_t>(H);

  std::vector<float> a(n), b(n);
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      const Lab lab = RgbToLab(image.at(x, y));
      const size_t i = static_cast<size_t>(y) * W + x;
      a[i] = static_cast<float>(lab.a);
      b[i] = static_cast<float>(lab.b);
    }
  }

  struct Found {
    int first_pixel;
    int stage;
    PredictionEntry entry;
  };
  std::vector<Found> found;
  for (size_t s = 0; s < spec.windows.size(); ++s) {
    const ChromaWindow& win = spec.windows[s];
    detail::Mask raw{W, H, std::vector<std::uint8_t>(n, 0)};
    for (size_t i = 0; i < n; ++i) raw.bits[i] = win.Contains(a[i], b[i]) ? 1 : 0;
    detail::Mask cleaned = detail::OpenClose(raw, spec.morph_radius);
    for (const auto& c : detail::ConnectedComponents4(cleaned)) {
      if (c.area < spec.min_area) continue;
      int in_window = 0;
      for (int y = c.y0; y <= c.y1; ++y) {
        for (int x = c.x0; x <= c.x1; ++x) in_window += raw.at(x, y) ? 1 : 0;
      }
      const int bw = c.x1 - c.x0 + 1;
      const int bh = c.y1 - c.y0 + 1;
      PredictionEntry e;
      e.box.category = static_cast<int>(s);
      e.box.cx = (c.x0 + bw / 2.0) / W;
      e.box.cy = (c.y0 + bh / 2.0) / H;
      e.box.w = static_cast<double>(bw) / W;
      e.box.h = static_cast<double>(bh) / H;
      e.confidence = static_cast<double>(in_window) / (static_cast<double>(bw) * bh);
      found.push_back({c.first_pixel, static_cast<int>(s), e});
    }
  }
  std::stable_sort(found.begin(), found.end(), [](const Found& l, const Found& r) {
    return std::tie(l.first_pixel, l.stage) < std::tie(r.first_pixel, r.stage);
  });
  for (auto& f : found) out.entries.push_back(f.entry);
  return out;
}

}  // namespace coffeelab
