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

#include <gtest/gtest.h>

#include <cmath>

#include "coffeelab/error.h"
#include "coffeelab/fs_util.h"
#include "coffeelab/synth.h"
#include "common/test_support.h"

namespace coffeelab {
namespace {

using detail::Mask;

Mask MakeMask(const std::vector<std::string>& rows) {
  Mask m;
  m.height = static_cast<int>(rows.size());
  m.width = static_cast<int>(rows[0].size());
  for (const auto& r : rows)
    for (char c : r) m.bits.push_back(c == '#');
  return m;
}

std::vector<std::string> Rows(const Mask& m) {
  std::vector<std::string> out;
  for (int y = 0; y < m.height; ++y) {
    std::string r;
    for (int x = 0; x < m.width; ++x) r += m.at(x, y) ? '#' : '.';
    out.push_back(r);
  }
  return out;
}

TEST(Morphology, ErodeAndDilate) {
  const Mask m = MakeMask({".....", ".###.", ".###.", ".###.", "....."});
  EXPECT_EQ(Rows(detail::Erode(m, 1)),
            (std::vector<std::string>{".....", ".....", "..#..", ".....", "....."}));
  EXPECT_EQ(Rows(detail::Dilate(m, 1)),
            (std::vector<std::string>{"#####", "#####", "#####", "#####", "#####"}));
  EXPECT_EQ(Rows(detail::Erode(m, 0)), Rows(m));
}

TEST(Morphology, OpenCloseDropsSpecksAndFillsPinholes) {
  std::vector<std::string> rows(14, std::string(14, '.'));
  rows[0][0] = '#';
  for (int y = 3; y < 12; ++y)
    for (int x = 3; x < 12; ++x) rows[y][x] = '#';
  rows[7][7] = '.';
  const auto out = Rows(detail::OpenClose(MakeMask(rows), 1));
  rows[0][0] = '.';
  rows[7][7] = '#';
  EXPECT_EQ(out, rows);
}

TEST(Components, FourConnectivity) {
  const Mask m = MakeMask({"##..#", "#...#", "..#..", ".#..."});
  const auto comps = detail::ConnectedComponents4(m);
  ASSERT_EQ(comps.size(), 4u);
  EXPECT_EQ(comps[0].area, 3);
  EXPECT_EQ(comps[0].first_pixel, 0);
  EXPECT_EQ(comps[1].area, 2);
  EXPECT_EQ(comps[1].x0, 4);
  EXPECT_EQ(comps[1].y1, 1);
  // Diagonal neighbours stay apart.
  EXPECT_EQ(comps[2].area, 1);
  EXPECT_EQ(comps[3].area, 1);
}

TEST(Classical, WhiteImageHasNoFruit) {
  const RgbImage white(128, 96, {255, 255, 255});
  EXPECT_TRUE(DetectClassical(white, DefaultDetectorSpec().classical).entries.empty());
  const RgbImage gray(64, 64, {128, 128, 128});
  EXPECT_TRUE(DetectClassical(gray, DefaultDetectorSpec().classical).entries.empty());
}

TEST(Classical, ThreeRedDiscs) {
  RgbImage image(200, 160, {255, 255, 255});
  const int centers[3][2] = {{40, 40}, {120, 60}, {70, 120}};
  for (const auto& c : centers) DrawDisc(image, c[0], c[1], 15, {255, 0, 0});
  const PredictionFile p = DetectClassical(image, DefaultDetectorSpec().classical, "x");
  ASSERT_EQ(p.entries.size(), 3u);
  EXPECT_EQ(p.image_id, "x");
  // Raster order of the first pixel: top disc first.
  const int order[3] = {0, 1, 2};
  for (int i = 0; i < 3; ++i) {
    const auto& e = p.entries[i];
    const auto& c = centers[order[i]];
    EXPECT_EQ(e.box.category, 2);
    // Box edges against the disc's pixel extent [c - 15, c + 16).
    EXPECT_NEAR(e.box.x0() * 200, c[0] - 15, 2.0);
    EXPECT_NEAR(e.box.x1() * 200, c[0] + 16, 2.0);
    EXPECT_NEAR(e.box.y0() * 160, c[1] - 15, 2.0);
    EXPECT_NEAR(e.box.y1() * 160, c[1] + 16, 2.0);
    EXPECT_GT(e.confidence, 0.7);
    EXPECT_LE(e.confidence, 1.0);
  }
}

TEST(Classical, TouchingDiscsMergeAndSpecksVanish) {
  RgbImage image(120, 120, {255, 255, 255});
  DrawDisc(image, 40, 60, 12, {255, 0, 0});
  DrawDisc(image, 60, 60, 12, {255, 0, 0});
  DrawDisc(image, 100, 100, 2, {255, 0, 0});
  const PredictionFile p = DetectClassical(image, DefaultDetectorSpec().classical);
  ASSERT_EQ(p.entries.size(), 1u);
  EXPECT_NEAR(p.entries[0].box.w * 120, 45, 2.0);
}

TEST(Classical, PaletteStagesAreSeparated) {
  RgbImage image(300, 80, {128, 128, 128});
  for (int s = 0; s < kSynthStages; ++s) {
    DrawDisc(image, 30 + 60 * s, 40, 14, StagePalette()[static_cast<size_t>(s)]);
  }
  const PredictionFile p = DetectClassical(image, DefaultDetectorSpec().classical);
  ASSERT_EQ(p.entries.size(), static_cast<size_t>(kSynthStages));
  for (int s = 0; s < kSynthStages; ++s) EXPECT_EQ(p.entries[s].box.category, s);
}

TEST(Spec, JsonRoundTripAndErrors) {
  const DetectorSpec def = DefaultDetectorSpec();
  EXPECT_EQ(def.StageNames(), SynthStageNames());
  const DetectorSpec back = ParseDetectorSpec(DetectorSpecToJson(def));
  ASSERT_EQ(back.classical.windows.size(), def.classical.windows.size());
  EXPECT_EQ(back.classical.windows[2].stage, "cherry");
  EXPECT_EQ(back.classical.windows[2].a_min, def.classical.windows[2].a_min);

  const DetectorSpec custom = ParseDetectorSpec(
      R"({"min_area": 5, "morph_radius": 0, "stages": [{"name": "red", "a": [30, 100], "b": [0, 100]}]})");
  EXPECT_EQ(custom.kind, DetectorSpec::Kind::kClassical);
  EXPECT_EQ(custom.classical.min_area, 5);
  EXPECT_EQ(custom.StageNames(), std::vector<std::string>{"red"});

  for (const char* bad : {"[]", "{\"kind\": \"neural\"}", "{\"kind\": \"external\"}",
                          R"({"stages": [{"name": "x", "a": [1], "b": [0, 1]}]})",
                          R"({"min_area": 0, "stages": []})"}) {
    try {
      ParseDetectorSpec(bad);
      ADD_FAILURE() << bad;
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::kBadConfig) << bad;
    }
  }
}

TEST(External, LoadsPredictionFiles) {
  testing::TempDir dir;
  WriteFileAtomic(dir / "day_001.txt", "2 0.9 0.5 0.5 0.1 0.1\n");
  const DetectorSpec spec =
      ParseDetectorSpec(R"({"kind": "external", "predictions_dir": ")" + dir.path().string() + "\"}");
  EXPECT_EQ(spec.kind, DetectorSpec::Kind::kExternal);
  const PredictionFile p = LoadExternal(spec.predictions_dir, "day_001");
  ASSERT_EQ(p.entries.size(), 1u);
  EXPECT_EQ(p.entries[0].box.category, 2);
  try {
    LoadExternal(dir.path(), "day_002");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kMissingPredictions);
  }
}

}  // namespace
}  // namespace coffeelab
