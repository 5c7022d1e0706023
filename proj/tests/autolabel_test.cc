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

#include "coffeelab/autolabel.h"

#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "coffeelab/error.h"
#include "coffeelab/fs_util.h"
#include "coffeelab/image.h"
#include "coffeelab/synth.h"
#include "common/test_support.h"

namespace coffeelab {
namespace {

using testing::TempDir;

struct Fitted {
  KMeansModel model;
  MaturityMap maturity;
};

Fitted FitOn(const BerryDataset& ds, int k) {
  std::vector<AbFeature> feats;
  std::vector<int> stages;
  for (size_t i = 0; i < ds.images.size(); ++i) {
    for (auto& f : ExtractImageFeatures(ds.images[i], ds.labels[i], nullptr)) {
      stages.push_back(ds.labels[i].boxes[f.source_box_index].category);
      feats.push_back(std::move(f));
    }
  }
  Fitted out;
  out.model = KMeansFit(feats, k, 42);
  std::vector<ReferenceSample> ref;
  for (size_t i = 0; i < feats.size(); ++i) ref.push_back({feats[i].values, stages[i]});
  out.maturity = OrderClusters(out.model, std::span<const ReferenceSample>(ref), ds.stage_names);
  return out;
}

TEST(Relabel, RedAndGreenBoxes) {
  TempDir dir;
  RgbImage image(100, 50, {255, 255, 255});
  DrawDisc(image, 25, 25, 20, {200, 20, 30});
  DrawDisc(image, 75, 25, 20, {40, 150, 40});
  std::filesystem::create_directories(dir / "images");
  WritePng(dir / "images" / "a.png", image);
  LabelFile labels;
  labels.image_id = "a";
  // Categories on input are ignored.
  labels.boxes = {{0, 0.25, 0.5, 0.3, 0.6}, {0, 0.75, 0.5, 0.3, 0.6}};
  std::filesystem::create_directories(dir / "labels");
  WriteLabelFile(dir / "labels", labels);

  std::vector<AbFeature> feats = ExtractImageFeatures(image, labels, nullptr);
  RelabelJob job;
  job.images_dir = dir / "images";
  job.labels_dir = dir / "labels";
  job.output_dir = dir / "out";
  job.model = KMeansFit(feats, 2, 1);
  job.maturity = OrderClusters(job.model, std::nullopt);
  const RelabelSummary s = Relabel(job);
  EXPECT_EQ(s.images_processed, 1);
  EXPECT_EQ(s.boxes_relabeled, 2);
  EXPECT_TRUE(s.skipped.empty());

  const auto out = ReadLabelDir(dir / "out");
  ASSERT_EQ(out.size(), 1u);
  const LabelFile& a = out.at("a");
  ASSERT_EQ(a.boxes.size(), 2u);
  EXPECT_EQ(job.maturity.stage_names[a.boxes[0].category], "ripe");
  EXPECT_EQ(job.maturity.stage_names[a.boxes[1].category], "unripe");
  EXPECT_NEAR(a.boxes[0].cx, 0.25, 1e-6);
  EXPECT_EQ(ParseNames(ReadTextFile(dir / "out" / "names.txt")),
            (std::vector<std::string>{"unripe", "ripe"}));
  // Inputs untouched.
  EXPECT_EQ(ReadLabelDir(dir / "labels").at("a").boxes[0].category, 0);
  const std::string json = RelabelSummaryToJson(s);
  EXPECT_NE(json.find("\"per_stage\""), std::string::npos);
  EXPECT_NE(json.find("\"skipped_count\": 0"), std::string::npos);
}

TEST(Relabel, EmptyDirAndErrors) {
  TempDir dir;
  std::filesystem::create_directories(dir / "images");
  std::filesystem::create_directories(dir / "labels");
  RelabelJob job;
  job.images_dir = dir / "images";
  job.labels_dir = dir / "labels";
  job.output_dir = dir / "out";
  job.model.k = 2;
  job.model.feature_dim = kFeatureDim;
  job.model.centroids.assign(2, std::vector<double>(kFeatureDim, 0.0));
  job.maturity = OrderClusters(job.model, std::nullopt);
  const RelabelSummary s = Relabel(job);
  EXPECT_EQ(s.images_processed, 0);
  EXPECT_EQ(s.boxes_relabeled, 0);

  WriteFileAtomic(dir / "labels" / "ghost.txt", "0 0.5 0.5 0.2 0.2\n");
  try {
    Relabel(job);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kMissingImage);
  }
  EXPECT_FALSE(std::filesystem::exists(dir / "out" / "ghost.txt"));

  job.maturity.stage_names.push_back("extra");
  EXPECT_THROW(Relabel(job), Error);
}

TEST(Relabel, DegenerateBoxesAreSkipped) {
  TempDir dir;
  std::filesystem::create_directories(dir / "images");
  std::filesystem::create_directories(dir / "labels");
  WritePng(dir / "images" / "b.PNG", RgbImage(40, 40, {200, 20, 30}));
  WriteFileAtomic(dir / "labels" / "b.txt", "0 0.5 0.5 0.5 0.5\n0 0.5 0.5 0.01 0.5\n");
  RelabelJob job;
  job.images_dir = dir / "images";
  job.labels_dir = dir / "labels";
  job.output_dir = dir / "out";
  job.model.k = 2;
  job.model.feature_dim = kFeatureDim;
  job.model.centroids.assign(2, std::vector<double>(kFeatureDim, 0.0));
  job.model.centroids[1].assign(kFeatureDim, 50.0);
  job.maturity = OrderClusters(job.model, std::nullopt);
  const RelabelSummary s = Relabel(job);
  ASSERT_EQ(s.skipped.size(), 1u);
  EXPECT_EQ(s.skipped[0].image_id, "b");
  EXPECT_EQ(s.skipped[0].box_index, 1);
  EXPECT_EQ(ReadLabelDir(dir / "out").at("b").boxes.size(), 1u);
}

TEST(Relabel, SyntheticBerriesAgreeWithTruth) {
  BerryDatasetOptions o;
  o.images = 20;
  const BerryDataset ds = GenerateBerryDataset(o);
  const Fitted fit = FitOn(ds, kSynthStages);

  TempDir dir;
  WriteBerryDataset(ds, dir.path());
  RelabelJob job;
  job.images_dir = dir / "images";
  job.labels_dir = dir / "labels";
  job.output_dir = dir / "relabeled";
  job.model = fit.model;
  job.maturity = fit.maturity;
  const RelabelSummary s = Relabel(job);
  EXPECT_EQ(s.boxes_relabeled, 20 * o.berries_per_image);

  const AgreementReport r = CompareLabelingDirs(dir / "labels", dir / "relabeled");
  ASSERT_TRUE(r.agreement.has_value());
  EXPECT_GE(*r.agreement, 0.95);
  EXPECT_EQ(r.total, 20 * o.berries_per_image);
  EXPECT_EQ(r.stage_names, ds.stage_names);

  // A second pass over its own output is a fixed point.
  job.labels_dir = dir / "relabeled";
  job.output_dir = dir / "again";
  Relabel(job);
  for (const auto& [id, f] : ReadLabelDir(dir / "relabeled")) {
    EXPECT_EQ(ReadTextFile(dir / "again" / (id + ".txt")),
              ReadTextFile(dir / "relabeled" / (id + ".txt")));
  }
}

std::map<std::string, LabelFile> RandomLabeling(std::mt19937_64& gen, int images) {
  std::map<std::string, LabelFile> out;
  for (int i = 0; i < images; ++i) {
    LabelFile f;
    f.image_id = "i" + std::to_string(i);
    for (int b = 0; b < 10; ++b) {
      // Disjoint grid cells, so geometry twins are unique.
      f.boxes.push_back({static_cast<int>(gen() % 5), 0.05 + 0.1 * b, 0.5, 0.08, 0.3});
    }
    out[f.image_id] = f;
  }
  return out;
}

TEST(Compare, IdentityFlipAndEmpty) {
  std::mt19937_64 gen(17);
  const auto a = RandomLabeling(gen, 200);
  const AgreementReport same = CompareLabelings(a, a, SynthStageNames());
  EXPECT_DOUBLE_EQ(*same.agreement, 1.0);
  EXPECT_EQ(same.total, 2000);

  auto b = a;
  int flipped = 0;
  for (auto& [id, f] : b) {
    for (auto& box : f.boxes) {
      if (testing::Unit(gen) < 0.2) {
        box.category = (box.category + 1) % 5;
        ++flipped;
      }
    }
  }
  const AgreementReport r = CompareLabelings(a, b, SynthStageNames());
  EXPECT_NEAR(*r.agreement, 0.8, 0.05);
  EXPECT_EQ(r.total - flipped, [&] {
    std::int64_t d = 0;
    for (size_t i = 0; i < r.confusion.size(); ++i) d += r.confusion[i][i];
    return d;
  }());

  const AgreementReport empty = CompareLabelings({}, {});
  EXPECT_FALSE(empty.agreement.has_value());
  EXPECT_NE(AgreementToJson(empty).find("\"agreement\": null"), std::string::npos);
}

TEST(Compare, BoxOrderDoesNotMatterButGeometryDoes) {
  std::mt19937_64 gen(3);
  const auto a = RandomLabeling(gen, 3);
  auto b = a;
  for (auto& [id, f] : b) std::reverse(f.boxes.begin(), f.boxes.end());
  EXPECT_DOUBLE_EQ(*CompareLabelings(a, b).agreement, 1.0);

  auto moved = a;
  moved.begin()->second.boxes[0].cx += 0.01;
  auto expect_geometry = [](const auto& x, const auto& y) {
    try {
      CompareLabelings(x, y);
      ADD_FAILURE();
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::kGeometryMismatch);
    }
  };
  expect_geometry(a, moved);
  auto fewer = a;
  fewer.begin()->second.boxes.pop_back();
  expect_geometry(a, fewer);
  auto extra_image = a;
  extra_image["zzz"] = {};
  expect_geometry(a, extra_image);
}

TEST(Compare, UnnamedCategoriesGetPlaceholders) {
  std::map<std::string, LabelFile> a, b;
  a["x"].boxes = {{0, 0.5, 0.5, 0.2, 0.2}};
  b["x"].boxes = {{3, 0.5, 0.5, 0.2, 0.2}};
  const AgreementReport r = CompareLabelings(a, b, {"unripe", "ripe"});
  EXPECT_EQ(r.stage_names, (std::vector<std::string>{"unripe", "ripe", "class-2", "class-3"}));
  EXPECT_EQ(r.confusion[0][3], 1);
  EXPECT_DOUBLE_EQ(*r.agreement, 0.0);
}

}  // namespace
}  // namespace coffeelab
