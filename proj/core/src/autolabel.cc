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

#include <algorithm>
#include <cctype>

#include "coffeelab/color_features.h"
#include "coffeelab/error.h"
#include "coffeelab/eval_metrics.h"
#include "coffeelab/fs_util.h"
#include "coffeelab/image.h"
#include "json.hpp"
#include "parallel.h"

namespace coffeelab {
namespace {

using ordered_json = nlohmann::ordered_json;

constexpr double kTwinIou = 0.999;

std::string Lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

struct ImageResult {
  LabelFile out;
  std::vector<int> skipped;
};

}  // namespace

std::filesystem::path FindImage(const std::filesystem::path& dir,
                                const std::string& image_id) {
  for (const char* ext : {".png", ".jpg", ".jpeg"}) {
    auto p = dir / (image_id + ext);
    if (std::filesystem::is_regular_file(p)) return p;
  }
  // Slow path for upper-case extensions.
  std::error_code ec;
  for (const auto& entry : std::filesystem::directory_iterator(dir, ec)) {
    if (!entry.is_regular_file()) continue;
    const auto& p = entry.path();
    const std::string ext = Lower(p.extension().string());
    if (p.stem().string() == image_id &&
        (ext == ".png" || ext == ".jpg" || ext == ".jpeg")) {
      return p;
    }
  }
  return {};
}

RelabelSummary Relabel(const RelabelJob& job) {
  if (job.model.k != static_cast<int>(job.maturity.stage_names.size()) ||
      job.maturity.cluster_to_stage.size() != static_cast<size_t>(job.model.k)) {
    throw Error(ErrorKind::kBadConfig,
                "model k=" + std::to_string(job.model.k) + " but maturity map has " +
                    std::to_string(job.maturity.stage_names.size()) + " stages");
  }
  if (!std::filesystem::is_directory(job.images_dir)) {
    throw Error(ErrorKind::kIo, "not a directory: " + job.images_dir.string());
  }
  const auto inputs = ReadLabelDir(job.labels_dir);
  std::vector<const LabelFile*> files;
  for (const auto& [id, f] : inputs) files.push_back(&f);

  // Resolve every image before any output is written.
  std::vector<std::filesystem::path> images(files.size());
  for (size_t i = 0; i < files.size(); ++i) {
    images[i] = FindImage(job.images_dir, files[i]->image_id);
    if (images[i].empty()) throw Error(ErrorKind::kMissingImage, files[i]->image_id);
  }

  RelabelSummary summary;
  for (const auto& s : job.maturity.stage_names) summary.per_stage.emplace_back(s, 0);
  if (files.empty()) return summary;

  std::filesystem::create_directories(job.output_dir);
  std::vector<ImageResult> results(files.size());
  internal::ParallelFor(files.size(), job.threads, 1, [&](size_t begin, size_t end) {
    for (size_t i = begin; i < end; ++i) {
      const LabelFile& in = *files[i];
      const RgbImage image = ReadImage(images[i]);
      ImageResult& r = results[i];
      r.out.image_id = in.image_id;
      r.out.category_names = job.maturity.stage_names;
      for (size_t b = 0; b < in.boxes.size(); ++b) {
        PixelPatch patch;
        try {
          patch = CropResize(image, in.boxes[b]);
        } catch (const Error& e) {
          if (e.kind() != ErrorKind::kDegenerateBox) throw;
          r.skipped.push_back(static_cast<int>(b));
          continue;
        }
        const AbFeature f = ExtractAb(patch);
        NormalizedBox box = in.boxes[b];
        box.category = job.maturity.StageOf(KMeansPredict(job.model, f));
        r.out.boxes.push_back(box);
      }
      WriteLabelFile(job.output_dir, r.out);
    }
  });
  WriteFileAtomic(job.output_dir / "names.txt", SerializeNames(job.maturity.stage_names));

  for (const ImageResult& r : results) {
    ++summary.images_processed;
    for (const auto& box : r.out.boxes) {
      ++summary.boxes_relabeled;
      ++summary.per_stage[static_cast<size_t>(box.category)].second;
    }
    for (int b : r.skipped) summary.skipped.push_back({r.out.image_id, b});
  }
  return summary;
}

std::string RelabelSummaryToJson(const RelabelSummary& s) {
  ordered_json j;
  j["images_processed"] = s.images_processed;
  j["boxes_relabeled"] = s.boxes_relabeled;
  ordered_json stages = ordered_json::object();
  for (const auto& [name, n] : s.per_stage) stages[name] = n;
  j["per_stage"] = std::move(stages);
  j["skipped_count"] = s.skipped.size();
  ordered_json skipped = ordered_json::array();
  for (const auto& sk : s.skipped) {
    skipped.push_back({{"image_id", sk.image_id}, {"box_index", sk.box_index}});
  }
  j["skipped"] = std::move(skipped);
  return j.dump(2) + "\n";
}

AgreementReport CompareLabelings(const std::map<std::string, LabelFile>& a,
                                 const std::map<std::string, LabelFile>& b,
                                 std::vector<std::string> stage_names) {
  for (const auto& [id, f] : a) {
    if (!b.count(id)) throw Error(ErrorKind::kGeometryMismatch, "image " + id + " only in first set");
  }
  for (const auto& [id, f] : b) {
    if (!a.count(id)) throw Error(ErrorKind::kGeometryMismatch, "image " + id + " only in second set");
  }

  int max_category = static_cast<int>(stage_names.size()) - 1;
  std::vector<std::pair<int, int>> pairs;
  for (const auto& [id, fa] : a) {
    const LabelFile& fb = b.at(id);
    if (fa.boxes.size() != fb.boxes.size()) {
      throw Error(ErrorKind::kGeometryMismatch,
                  id + ": " + std::to_string(fa.boxes.size()) + " vs " +
                      std::to_string(fb.boxes.size()) + " boxes");
    }
    std::vector<bool> used(fb.boxes.size(), false);
    for (size_t i = 0; i < fa.boxes.size(); ++i) {
      int best = -1;
      double best_iou = kTwinIou;
      for (size_t j = 0; j < fb.boxes.size(); ++j) {
        if (used[j]) continue;
        const double iou = Iou(fa.boxes[i], fb.boxes[j]);
        if (iou > best_iou) {
          best_iou = iou;
          best = static_cast<int>(j);
        }
      }
      if (best < 0) {
        throw Error(ErrorKind::kGeometryMismatch,
                    id + ": box " + std::to_string(i) + " has no twin");
      }
      used[static_cast<size_t>(best)] = true;
      const int ca = fa.boxes[i].category;
      const int cb = fb.boxes[static_cast<size_t>(best)].category;
      max_category = std::max({max_category, ca, cb});
      pairs.emplace_back(ca, cb);
    }
  }

  AgreementReport report;
  const size_t n = static_cast<size_t>(max_category + 1);
  for (size_t i = stage_names.size(); i < n; ++i) {
    stage_names.push_back("class-" + std::to_string(i));
  }
  report.stage_names = std::move(stage_names);
  report.confusion.assign(n, std::vector<std::int64_t>(n, 0));
  std::int64_t diagonal = 0;
  for (const auto& [ca, cb] : pairs) {
    ++report.confusion[static_cast<size_t>(ca)][static_cast<size_t>(cb)];
    if (ca == cb) ++diagonal;
  }
  report.total = static_cast<std::int64_t>(pairs.size());
  if (report.total > 0) {
    report.agreement = static_cast<double>(diagonal) / static_cast<double>(report.total);
  }
  return report;
}

AgreementReport CompareLabelingDirs(const std::filesystem::path& a,
                                    const std::filesystem::path& b,
                                    std::vector<std::string> stage_names) {
  if (stage_names.empty()) {
    for (const char* name : {"names.txt", "classes.txt"}) {
      if (std::filesystem::is_regular_file(a / name)) {
        stage_names = ParseNames(ReadTextFile(a / name));
        break;
      }
    }
  }
  return CompareLabelings(ReadLabelDir(a), ReadLabelDir(b), std::move(stage_names));
}

std::string AgreementToJson(const AgreementReport& r) {
  ordered_json j;
  j["stages"] = r.stage_names;
  j["confusion"] = r.confusion;
  j["total"] = r.total;
  if (r.agreement) {
    j["agreement"] = *r.agreement;
  } else {
    j["agreement"] = nullptr;
  }
  return j.dump(2) + "\n";
}

}  // namespace coffeelab
