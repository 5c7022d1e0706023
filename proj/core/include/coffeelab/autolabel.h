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

#ifndef COFFEELAB_AUTOLABEL_H_
#define COFFEELAB_AUTOLABEL_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "coffeelab/annotation_io.h"
#include "coffeelab/cluster_engine.h"

namespace coffeelab {

struct RelabelJob {
  std::filesystem::path images_dir;
  std::filesystem::path labels_dir;  // box geometry only; categories ignored
  std::filesystem::path output_dir;
  KMeansModel model;
  MaturityMap maturity;
  int threads = 0;
};

struct SkippedBox {
  std::string image_id;
  int box_index = 0;
};

struct RelabelSummary {
  std::int64_t images_processed = 0;
  std::int64_t boxes_relabeled = 0;
  std::vector<std::pair<std::string, std::int64_t>> per_stage;
  std::vector<SkippedBox> skipped;  // degenerate boxes, dropped from output
};

// <dir>/<image_id>.{png,jpg,jpeg} in any letter case; empty when absent.
std::filesystem::path FindImage(const std::filesystem::path& dir,
                                const std::string& image_id);

// Writes one label file per input (category = maturity stage) plus
// names.txt into output_dir. Inputs are never touched.
// Throws MissingImage, BadConfig (k vs stage count), Io.
RelabelSummary Relabel(const RelabelJob& job);

std::string RelabelSummaryToJson(const RelabelSummary& summary);

struct AgreementReport {
  std::vector<std::string> stage_names;
  // confusion[i][j]: boxes with stage i in `a` and stage j in `b`.
  std::vector<std::vector<std::int64_t>> confusion;
  std::int64_t total = 0;
  std::optional<double> agreement;  // trace / total; empty when total == 0
};

// Pairs boxes by geometry (IoU > 0.999). Throws GeometryMismatch when an
// image or box has no twin on the other side.
AgreementReport CompareLabelings(const std::map<std::string, LabelFile>& a,
                                 const std::map<std::string, LabelFile>& b,
                                 std::vector<std::string> stage_names = {});
AgreementReport CompareLabelingDirs(const std::filesystem::path& a,
                                    const std::filesystem::path& b,
                                    std::vector<std::string> stage_names = {});

std::string AgreementToJson(const AgreementReport& report);

}  // namespace coffeelab

#endif  // COFFEELAB_AUTOLABEL_H_
