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

#ifndef COFFEELAB_HARVEST_SERVICE_H_
#define COFFEELAB_HARVEST_SERVICE_H_

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <set>
#include <string>
#include <vector>

#include "coffeelab/detector_backends.h"
#include "coffeelab/eval_metrics.h"
#include "coffeelab/ripeness_analytics.h"

namespace coffeelab {

struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::filesystem::path data_dir = "harvest-data";
  DetectorSpec detector = DefaultDetectorSpec();
  // Names for detector categories; empty = the detector's own stage names.
  std::vector<std::string> stage_names;
  std::set<std::string> ripe_stages = DefaultRipeStages();
  double confidence_threshold = kDefaultConfidenceThreshold;
  int threads = 8;

  std::vector<std::string> ResolvedStageNames() const;
};

struct Detection {
  int category = 0;
  std::string stage;
  double confidence = 0.0;
  double cx = 0.0, cy = 0.0, w = 0.0, h = 0.0;
};

struct StoredSample {
  std::string sample_id;
  std::string session_id;
  std::string captured_at;
  std::string image_sha256;
  std::string mode;                   // mode requested at analyze time
  std::vector<Detection> detections;  // every detection the backend returned
  StageCounts counts;                 // multiclass tally at the threshold
  std::optional<Ripeness> ripeness;
};

struct SessionInfo {
  std::string session_id;
  std::string name;
  std::string created_at;
};

struct StoreCheck {
  bool ok = true;
  std::int64_t sessions = 0;
  std::int64_t samples = 0;
  std::vector<std::string> problems;
};

// Detect -> tally -> ripeness for one decoded image. Shared by the service
// and tests; `predictions_text` is used by the external backend.
StoredSample AnalyzeImage(const ServiceConfig& config, const RgbImage& image,
                          DetectorSpec::Kind backend,
                          const std::string* predictions_text);

// Builds the /analyze response body for a sample in the given mode.
std::string AnalysisToJson(const StoredSample& sample, CountMode mode,
                           double confidence_threshold,
                           const std::set<std::string>& ripe_stages,
                           const std::vector<std::string>& stages);

// Layout under data_dir:
//   sessions/<id>/meta.json      written once, atomically
//   sessions/<id>/journal.jsonl  one StoredSample per line, fsync'd appends
//   images/<sha256>              uploaded image bytes
class HarvestService {
 public:
  explicit HarvestService(ServiceConfig config);
  ~HarvestService();
  HarvestService(const HarvestService&) = delete;
  HarvestService& operator=(const HarvestService&) = delete;

  // Blocks until Stop().
  bool Listen();
  // Binds an ephemeral port on config.host and returns it; then call
  // ListenAfterBind() (blocking) from a worker thread.
  int BindToAnyPort();
  bool ListenAfterBind();
  void Stop();
  void WaitUntilReady() const;

  // Re-reads every journal and checks record integrity.
  StoreCheck VerifyStore() const;

  const ServiceConfig& config() const { return config_; }

 private:
  class Impl;

  ServiceConfig config_;
  std::unique_ptr<Impl> impl_;
};

// Same check without a running service.
StoreCheck VerifyStoreAt(const std::filesystem::path& data_dir,
                         const ServiceConfig& config);

std::string Sha256Hex(std::span<const std::uint8_t> data);

}  // namespace coffeelab

#endif  // COFFEELAB_HARVEST_SERVICE_H_
