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

#include "cli.h"

#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <sstream>

#include "coffeelab/annotation_io.h"
#include "coffeelab/fs_util.h"
#include "common/test_support.h"
#include "json.hpp"

namespace coffeelab {
namespace {

using json = nlohmann::json;
using testing::TempDir;

struct Result {
  int code = 0;
  std::string out;
  std::string err;
};

Result Invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "coffeelab");
  std::ostringstream out, err;
  Result r;
  r.code = cli::Run(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string P(const std::filesystem::path& p) { return p.string(); }

TEST(Cli, UsageAndHelp) {
  EXPECT_EQ(Invoke({}).code, cli::kExitUsage);
  EXPECT_EQ(Invoke({"frobnicate"}).code, cli::kExitUsage);
  const Result help = Invoke({"--help"});
  EXPECT_EQ(help.code, cli::kExitOk);
  for (const char* sub : {"convert", "crops", "fit", "project", "relabel", "eval", "ripeness",
                          "detect", "serve"}) {
    EXPECT_NE(help.out.find(sub), std::string::npos) << sub;
  }
  const Result missing = Invoke({"eval", "--gt", "/nonexistent"});
  EXPECT_EQ(missing.code, cli::kExitUsage);
  EXPECT_NE(missing.err.find("--pred"), std::string::npos);
  TempDir dir;
  WriteFileAtomic(dir / "f.abft", "x");
  EXPECT_EQ(Invoke({"fit", "--features", P(dir / "f.abft"), "--k", "7..3", "--out", P(dir / "m")}).code,
            cli::kExitUsage);
  EXPECT_EQ(Invoke({"fit", "--features", P(dir / "f.abft"), "--k", "0", "--out", P(dir / "m")}).code,
            cli::kExitUsage);
}

TEST(Cli, ConvertFixture) {
  TempDir dir;
  const Result r = Invoke({"convert", "--input", P(testing::TestDataDir() / "labelstudio_two_images.json"),
                        "--out", P(dir / "labels")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto labels = ReadLabelDir(dir / "labels");
  ASSERT_EQ(labels.size(), 2u);
  EXPECT_EQ(labels.at("8f2c1a-branch_017").boxes.size(), 3u);
  EXPECT_EQ(ReadTextFile(dir / "labels" / "names.txt"), "cherry\ngreen\nraisin\n");
}

TEST(Cli, DomainErrorsExitOne) {
  TempDir dir;
  std::filesystem::create_directories(dir / "gt");
  std::filesystem::create_directories(dir / "pred");
  WriteFileAtomic(dir / "gt" / "a.txt", "0 0.5 0.5 0.2\n");
  const Result r = Invoke({"eval", "--gt", P(dir / "gt"), "--pred", P(dir / "pred")});
  EXPECT_EQ(r.code, cli::kExitDomain);
  EXPECT_NE(r.err.find("MalformedLine"), std::string::npos) << r.err;
  EXPECT_NE(r.err.find("line 1"), std::string::npos) << r.err;
}

TEST(Cli, EvalPerfectPredictions) {
  TempDir dir;
  std::mt19937_64 gen(4);
  std::filesystem::create_directories(dir / "gt");
  std::filesystem::create_directories(dir / "pred");
  for (int i = 0; i < 8; ++i) {
    LabelFile f;
    f.image_id = "img" + std::to_string(i);
    for (int c = 0; c < 3; ++c) f.boxes.push_back({c, 0.2 + 0.3 * c, 0.5, 0.2, 0.3});
    WriteLabelFile(dir / "gt", f);
    PredictionFile p;
    p.image_id = f.image_id;
    for (const auto& b : f.boxes) p.entries.push_back({b, 1.0});
    WritePredictionFile(dir / "pred", p);
  }
  WriteFileAtomic(dir / "gt" / "names.txt", "green\ncherry\nraisin\n");
  for (const char* mode : {"mono", "binary", "multiclass"}) {
    const Result r = Invoke({"eval", "--gt", P(dir / "gt"), "--pred", P(dir / "pred"), "--mode", mode,
                          "--json", "--curves", P(dir / "curves.csv")});
    ASSERT_EQ(r.code, 0) << r.err;
    const json j = json::parse(r.out);
    EXPECT_DOUBLE_EQ(j["mAP50"].get<double>(), 1.0) << mode;
    EXPECT_EQ(j["counts"]["FP"], 0);
    EXPECT_EQ(j["counts"]["FN"], 0);
    EXPECT_EQ(j["mode"], mode);
  }
  const Result table = Invoke({"eval", "--gt", P(dir / "gt"), "--pred", P(dir / "pred")});
  ASSERT_EQ(table.code, 0);
  EXPECT_NE(table.out.find("mAP@.5"), std::string::npos);
}

TEST(Cli, BerryPipelineIsDeterministic) {
  TempDir dir;
  ASSERT_EQ(Invoke({"synth", "berries", "--out", P(dir / "ds"), "--images", "8"}).code, 0);
  ASSERT_EQ(Invoke({"crops", "--images", P(dir / "ds" / "images"), "--labels", P(dir / "ds" / "labels"),
                 "--out", P(dir / "f.abft")})
                .code,
            0);
  for (const char* out : {"m1.json", "m2.json"}) {
    const Result r = Invoke({"fit", "--features", P(dir / "f.abft"), "--k", "5", "--seed", "42",
                          "--out", P(dir / out), "--reference-labels", P(dir / "ds" / "labels"),
                          "--maturity-out", P(dir / (std::string("maturity_") + out))});
    ASSERT_EQ(r.code, 0) << r.err;
  }
  EXPECT_EQ(ReadTextFile(dir / "m1.json"), ReadTextFile(dir / "m2.json"));
  EXPECT_EQ(ReadTextFile(dir / "maturity_m1.json"), ReadTextFile(dir / "maturity_m2.json"));

  const Result rl = Invoke({"relabel", "--images", P(dir / "ds" / "images"), "--labels",
                         P(dir / "ds" / "labels"), "--model", P(dir / "m1.json"), "--maturity",
                         P(dir / "maturity_m1.json"), "--out", P(dir / "relabeled"), "--json"});
  ASSERT_EQ(rl.code, 0) << rl.err;
  EXPECT_EQ(json::parse(rl.out)["boxes_relabeled"], 8 * 25);

  const Result cmp = Invoke({"compare", "--a", P(dir / "ds" / "labels"), "--b", P(dir / "relabeled"),
                          "--json"});
  ASSERT_EQ(cmp.code, 0) << cmp.err;
  EXPECT_GE(json::parse(cmp.out)["agreement"].get<double>(), 0.95);

  const Result proj = Invoke({"project", "--features", P(dir / "f.abft"), "--model", P(dir / "m1.json"),
                           "--maturity", P(dir / "maturity_m1.json")});
  ASSERT_EQ(proj.code, 0) << proj.err;
  EXPECT_EQ(std::count(proj.out.begin(), proj.out.end(), '\n'), 8 * 25 + 1);

  const Result sweep = Invoke({"fit", "--features", P(dir / "f.abft"), "--k", "2..4", "--out",
                            P(dir / "sweep")});
  ASSERT_EQ(sweep.code, 0) << sweep.err;
  const std::string inertia = ReadTextFile(dir / "sweep" / "inertia.csv");
  EXPECT_EQ(inertia.rfind("k,inertia,iterations\n", 0), 0u);
  EXPECT_EQ(std::count(inertia.begin(), inertia.end(), '\n'), 4);
  EXPECT_TRUE(std::filesystem::exists(dir / "sweep" / "model_k3.json"));
}

TEST(Cli, SeasonRipenessMatchesTruth) {
  TempDir dir;
  ASSERT_EQ(Invoke({"synth", "season", "--out", P(dir / "season"), "--days", "12"}).code, 0);
  const Result det = Invoke({"detect", "--images", P(dir / "season" / "images"), "--out", P(dir / "pred")});
  ASSERT_EQ(det.code, 0) << det.err;
  for (const char* mode : {"binary", "multiclass"}) {
    const Result r = Invoke({"ripeness", "--pred", P(dir / "pred"), "--schedule",
                          P(dir / "season" / "schedule.csv"), "--mode", mode});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(r.out, ReadTextFile(dir / "season" / (std::string("truth_") + mode + ".csv"))) << mode;
  }
  std::filesystem::remove(dir / "pred" / "day_003.txt");
  const Result missing = Invoke({"ripeness", "--pred", P(dir / "pred"), "--schedule",
                              P(dir / "season" / "schedule.csv")});
  EXPECT_EQ(missing.code, cli::kExitDomain);
  EXPECT_NE(missing.err.find("day_003"), std::string::npos);
}

}  // namespace
}  // namespace coffeelab
