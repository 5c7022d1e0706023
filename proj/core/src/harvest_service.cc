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

#include "coffeelab/harvest_service.h"

#include <openssl/evp.h>
#include <openssl/rand.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <map>
#include <mutex>
#include <shared_mutex>

#include "coffeelab/error.h"
#include "coffeelab/fs_util.h"
#include "coffeelab/image.h"
#include "httplib.h"
#include "json.hpp"

namespace coffeelab {
namespace {

using ordered_json = nlohmann::ordered_json;
namespace fs = std::filesystem;

std::string Hex(const unsigned char* p, size_t n) {
  static const char* digits = "0123456789abcdef";
  std::string out(n * 2, '0');
  for (size_t i = 0; i < n; ++i) {
    out[2 * i] = digits[p[i] >> 4];
    out[2 * i + 1] = digits[p[i] & 0xf];
  }
  return out;
}

std::string RandomToken() {
  unsigned char bytes[16];
  if (RAND_bytes(bytes, sizeof(bytes)) != 1) {
    throw Error(ErrorKind::kIo, "random source unavailable");
  }
  return Hex(bytes, sizeof(bytes));
}

std::string NowIso() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

ordered_json CountsJson(const StageCounts& c) {
  ordered_json j = ordered_json::object();
  for (const auto& [stage, n] : c.counts) j[stage] = n;
  return j;
}

ordered_json SampleToJson(const StoredSample& s) {
  ordered_json j;
  j["sample_id"] = s.sample_id;
  j["session_id"] = s.session_id;
  j["captured_at"] = s.captured_at;
  j["image_sha256"] = s.image_sha256;
  j["mode"] = s.mode;
  ordered_json dets = ordered_json::array();
  for (const auto& d : s.detections) {
    dets.push_back({{"category", d.category},
                    {"stage", d.stage},
                    {"confidence", d.confidence},
                    {"cx", d.cx},
                    {"cy", d.cy},
                    {"w", d.w},
                    {"h", d.h}});
  }
  j["detections"] = std::move(dets);
  j["counts"] = CountsJson(s.counts);
  if (s.ripeness) {
    j["ripeness_percent"] = s.ripeness->ripeness_percent;
    j["unripeness_percent"] = s.ripeness->unripeness_percent;
  } else {
    j["ripeness_percent"] = nullptr;
    j["unripeness_percent"] = nullptr;
  }
  return j;
}

StoredSample SampleFromJson(const ordered_json& j) {
  StoredSample s;
  s.sample_id = j.at("sample_id").get<std::string>();
  s.session_id = j.at("session_id").get<std::string>();
  s.captured_at = j.at("captured_at").get<std::string>();
  s.image_sha256 = j.at("image_sha256").get<std::string>();
  s.mode = j.at("mode").get<std::string>();
  for (const auto& d : j.at("detections")) {
    Detection det;
    det.category = d.at("category").get<int>();
    det.stage = d.at("stage").get<std::string>();
    det.confidence = d.at("confidence").get<double>();
    det.cx = d.at("cx").get<double>();
    det.cy = d.at("cy").get<double>();
    det.w = d.at("w").get<double>();
    det.h = d.at("h").get<double>();
    s.detections.push_back(std::move(det));
  }
  s.counts.mode = CountMode::kMulticlass;
  for (const auto& [stage, n] : j.at("counts").items()) {
    s.counts.counts.emplace_back(stage, n.get<std::int64_t>());
  }
  if (!j.at("ripeness_percent").is_null()) {
    s.ripeness = Ripeness{j.at("ripeness_percent").get<double>(),
                          j.at("unripeness_percent").get<double>()};
  }
  return s;
}

// Complete journal lines; a torn final line (no newline) is not a record.
std::vector<std::string> JournalLines(const std::string& text, bool* torn) {
  std::vector<std::string> lines;
  size_t start = 0;
  while (start < text.size()) {
    const size_t nl = text.find('\n', start);
    if (nl == std::string::npos) {
      if (torn) *torn = true;
      break;
    }
    if (nl > start) lines.push_back(text.substr(start, nl - start));
    start = nl + 1;
  }
  return lines;
}

void JsonError(httplib::Response& res, int status, std::string_view error,
               const std::string& detail) {
  ordered_json j;
  j["error"] = std::string(error);
  j["detail"] = detail;
  res.status = status;
  res.set_content(j.dump(), "application/json");
}

int StatusFor(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kImageDecode: return 415;
    case ErrorKind::kIo: return 500;
    default: return 422;
  }
}

std::optional<std::string> FormField(const httplib::Request& req, const std::string& key) {
  if (req.has_file(key)) return req.get_file_value(key).content;
  if (req.has_param(key)) return req.get_param_value(key);
  return std::nullopt;
}

StoreCheck CheckSessionDir(const fs::path& dir, const fs::path& images_dir,
                           const ServiceConfig& config) {
  StoreCheck check;
  const std::string id = dir.filename().string();
  auto problem = [&](const std::string& what) {
    check.ok = false;
    check.problems.push_back(id + ": " + what);
  };
  try {
    auto meta = ordered_json::parse(ReadTextFile(dir / "meta.json"));
    if (meta.at("session_id").get<std::string>() != id) problem("meta session_id mismatch");
  } catch (const std::exception& e) {
    problem(std::string("meta.json: ") + e.what());
  }
  ++check.sessions;
  if (!fs::exists(dir / "journal.jsonl")) return check;
  bool torn = false;
  const std::string text = ReadTextFile(dir / "journal.jsonl");
  const auto lines = JournalLines(text, &torn);
  if (torn) problem("torn journal tail");
  const auto stages = config.ResolvedStageNames();
  std::set<std::string> seen;
  for (size_t i = 0; i < lines.size(); ++i) {
    const std::string where = "record " + std::to_string(i) + ": ";
    StoredSample s;
    try {
      s = SampleFromJson(ordered_json::parse(lines[i]));
    } catch (const std::exception& e) {
      problem(where + e.what());
      continue;
    }
    ++check.samples;
    if (s.session_id != id) problem(where + "session_id mismatch");
    if (!seen.insert(s.sample_id).second) problem(where + "duplicate sample_id");
    StageCounts expect = EmptyCounts(stages);
    for (const auto& d : s.detections) {
      if (d.confidence < config.confidence_threshold) continue;
      if (d.category < 0 || static_cast<size_t>(d.category) >= stages.size() ||
          stages[static_cast<size_t>(d.category)] != d.stage) {
        problem(where + "detection stage mismatch");
        continue;
      }
      ++expect.counts[static_cast<size_t>(d.category)].second;
    }
    if (!(expect == s.counts)) problem(where + "counts differ from detections");
    if (s.counts.Total() > 0) {
      if (!s.ripeness) {
        problem(where + "missing ripeness");
      } else {
        const Ripeness r = RipenessPercent(s.counts, config.ripe_stages);
        if (r.ripeness_percent != s.ripeness->ripeness_percent ||
            s.ripeness->ripeness_percent + s.ripeness->unripeness_percent != 100.0) {
          problem(where + "ripeness does not match counts");
        }
      }
    } else if (s.ripeness) {
      problem(where + "ripeness on an empty sample");
    }
    if (!fs::exists(images_dir / s.image_sha256)) problem(where + "image missing");
  }
  return check;
}

}  // namespace

std::string Sha256Hex(std::span<const std::uint8_t> data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorKind::kIo, "sha256 failed");
  }
  return Hex(md, len);
}

std::vector<std::string> ServiceConfig::ResolvedStageNames() const {
  if (!stage_names.empty()) return stage_names;
  auto names = detector.StageNames();
  if (names.empty()) names = DefaultDetectorSpec().StageNames();
  return names;
}

StoredSample AnalyzeImage(const ServiceConfig& config, const RgbImage& image,
                          DetectorSpec::Kind backend,
                          const std::string* predictions_text) {
  const auto stages = config.ResolvedStageNames();
  PredictionFile preds;
  if (backend == DetectorSpec::Kind::kExternal) {
    if (!predictions_text) throw Error(ErrorKind::kMissingPredictions, "no predictions part");
    preds = ParsePredictions(*predictions_text);
  } else {
    const ClassicalSpec& spec = config.detector.classical.windows.empty()
                                    ? DefaultDetectorSpec().classical
                                    : config.detector.classical;
    if (spec.windows.size() != stages.size()) {
      throw Error(ErrorKind::kBadConfig, "stage names do not match detector windows");
    }
    preds = DetectClassical(image, spec);
  }
  StoredSample s;
  for (const auto& e : preds.entries) {
    if (e.box.category < 0 || static_cast<size_t>(e.box.category) >= stages.size()) {
      throw Error(ErrorKind::kUnknownStage,
                  "category " + std::to_string(e.box.category) + " has no stage name");
    }
    s.detections.push_back({e.box.category, stages[static_cast<size_t>(e.box.category)],
                            e.confidence, e.box.cx, e.box.cy, e.box.w, e.box.h});
  }
  s.counts = TallyStages(preds, stages, config.confidence_threshold);
  if (s.counts.Total() > 0) s.ripeness = RipenessPercent(s.counts, config.ripe_stages);
  return s;
}

std::string AnalysisToJson(const StoredSample& s, CountMode mode,
                           double confidence_threshold,
                           const std::set<std::string>& ripe_stages,
                           const std::vector<std::string>& stages) {
  ordered_json j;
  j["sample_id"] = s.sample_id;
  j["session_id"] = s.session_id;
  j["captured_at"] = s.captured_at;
  j["mode"] = std::string(CountModeName(mode));
  ordered_json dets = ordered_json::array();
  for (const auto& d : s.detections) {
    if (d.confidence < confidence_threshold) continue;
    dets.push_back({{"stage", d.stage},
                    {"confidence", d.confidence},
                    {"cx", d.cx},
                    {"cy", d.cy},
                    {"w", d.w},
                    {"h", d.h}});
  }
  j["detections"] = std::move(dets);
  StageCounts counts = s.counts;
  if (mode == CountMode::kBinary) counts = CollapseBinary(s.counts, ripe_stages, stages);
  if (mode == CountMode::kCount) counts = CollapseCount(s.counts);
  j["counts"] = CountsJson(counts);
  if (s.ripeness) {
    j["ripeness_percent"] = s.ripeness->ripeness_percent;
    j["unripeness_percent"] = s.ripeness->unripeness_percent;
  } else {
    j["ripeness_percent"] = nullptr;
    j["unripeness_percent"] = nullptr;
  }
  return j.dump();
}

StoreCheck VerifyStoreAt(const fs::path& data_dir, const ServiceConfig& config) {
  StoreCheck total;
  const fs::path sessions = data_dir / "sessions";
  if (!fs::is_directory(sessions)) return total;
  std::vector<fs::path> dirs;
  for (const auto& e : fs::directory_iterator(sessions)) {
    if (e.is_directory()) dirs.push_back(e.path());
  }
  std::sort(dirs.begin(), dirs.end());
  for (const auto& dir : dirs) {
    StoreCheck c = CheckSessionDir(dir, data_dir / "images", config);
    total.ok = total.ok && c.ok;
    total.sessions += c.sessions;
    total.samples += c.samples;
    total.problems.insert(total.problems.end(), c.problems.begin(), c.problems.end());
  }
  return total;
}

class HarvestService::Impl {
 public:
  struct Session {
    SessionInfo info;
    std::mutex mu;  // serializes journal appends
    std::vector<StoredSample> samples;
  };

  explicit Impl(const ServiceConfig& config) : config_(config) {
    fs::create_directories(config_.data_dir / "sessions");
    fs::create_directories(config_.data_dir / "images");
    Load();
    Routes();
  }

  httplib::Server server;

  StoreCheck Verify() const {
    std::unique_lock lock(sessions_mu_);
    std::vector<std::unique_lock<std::mutex>> held;
    for (const auto& [id, session] : sessions_) held.emplace_back(session->mu);
    return VerifyStoreAt(config_.data_dir, config_);
  }

 private:
  void Load() {
    for (const auto& e : fs::directory_iterator(config_.data_dir / "sessions")) {
      if (!e.is_directory()) continue;
      const fs::path dir = e.path();
      if (!fs::exists(dir / "meta.json")) continue;  // creation never acknowledged
      auto session = std::make_shared<Session>();
      auto meta = ordered_json::parse(ReadTextFile(dir / "meta.json"));
      session->info = {meta.at("session_id").get<std::string>(),
                       meta.at("name").get<std::string>(),
                       meta.at("created_at").get<std::string>()};
      const fs::path journal = dir / "journal.jsonl";
      if (fs::exists(journal)) {
        const std::string text = ReadTextFile(journal);
        bool torn = false;
        for (const auto& line : JournalLines(text, &torn)) {
          session->samples.push_back(SampleFromJson(ordered_json::parse(line)));
        }
        if (torn) {
          // Drop the unacknowledged partial record so later appends stay aligned.
          fs::resize_file(journal, text.rfind('\n') == std::string::npos
                                       ? 0
                                       : text.rfind('\n') + 1);
        }
      }
      sessions_[session->info.session_id] = std::move(session);
    }
  }

  std::shared_ptr<Session> Find(const std::string& id) const {
    std::shared_lock lock(sessions_mu_);
    auto it = sessions_.find(id);
    return it == sessions_.end() ? nullptr : it->second;
  }

  void Routes() {
    server.set_payload_max_length(64u << 20);
    const int threads = std::max(1, config_.threads);
    server.new_task_queue = [threads] { return new httplib::ThreadPool(threads); };
    server.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                                {"Access-Control-Allow-Headers", "Content-Type"},
                                {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});
    server.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) {
      res.status = 204;
    });
    server.set_exception_handler(
        [](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
          try {
            std::rethrow_exception(ep);
          } catch (const Error& e) {
            JsonError(res, StatusFor(e.kind()), e.name(), e.detail());
          } catch (const std::exception& e) {
            JsonError(res, 500, "Internal", e.what());
          }
        });

    server.Get("/health", [](const httplib::Request&, httplib::Response& res) {
      res.set_content(R"({"status":"ok"})", "application/json");
    });

    server.Post("/sessions", [this](const httplib::Request& req, httplib::Response& res) {
      auto body = ordered_json::parse(req.body, nullptr, false);
      if (body.is_discarded() || !body.is_object() || !body.contains("name") ||
          !body["name"].is_string() || body["name"].get<std::string>().empty()) {
        JsonError(res, 400, "BadRequest", "expected JSON {\"name\": <nonempty string>}");
        return;
      }
      auto session = std::make_shared<Session>();
      session->info = {RandomToken(), body["name"].get<std::string>(), NowIso()};
      const fs::path dir = config_.data_dir / "sessions" / session->info.session_id;
      fs::create_directories(dir);
      ordered_json meta;
      meta["session_id"] = session->info.session_id;
      meta["name"] = session->info.name;
      meta["created_at"] = session->info.created_at;
      WriteFileAtomic(dir / "meta.json", meta.dump() + "\n");
      {
        std::unique_lock lock(sessions_mu_);
        sessions_[session->info.session_id] = session;
      }
      ordered_json out;
      out["session_id"] = session->info.session_id;
      res.status = 201;
      res.set_content(out.dump(), "application/json");
    });

    server.Get(R"(/sessions/([0-9A-Za-z_-]+))",
               [this](const httplib::Request& req, httplib::Response& res) {
                 auto session = Find(req.matches[1]);
                 if (!session) return JsonError(res, 404, "NotFound", "unknown session");
                 ordered_json j;
                 j["session_id"] = session->info.session_id;
                 j["name"] = session->info.name;
                 j["created_at"] = session->info.created_at;
                 ordered_json ids = ordered_json::array();
                 {
                   std::lock_guard lock(session->mu);
                   for (const auto& s : session->samples) ids.push_back(s.sample_id);
                 }
                 j["samples"] = std::move(ids);
                 res.set_content(j.dump(), "application/json");
               });

    server.Post(R"(/sessions/([0-9A-Za-z_-]+)/analyze)",
                [this](const httplib::Request& req, httplib::Response& res) {
                  Analyze(req, res);
                });

    server.Get(R"(/sessions/([0-9A-Za-z_-]+)/timeline)",
               [this](const httplib::Request& req, httplib::Response& res) {
                 Timeline(req, res);
               });
  }

  void Analyze(const httplib::Request& req, httplib::Response& res) {
    auto session = Find(req.matches[1]);
    if (!session) return JsonError(res, 404, "NotFound", "unknown session");
    if (!req.is_multipart_form_data()) {
      return JsonError(res, 415, "UnsupportedMediaType", "expected multipart/form-data");
    }
    if (!req.has_file("image")) return JsonError(res, 422, "MissingImage", "no image part");

    CountMode mode = CountMode::kMulticlass;
    if (auto m = FormField(req, "mode")) {
      try {
        mode = ParseCountMode(*m);
      } catch (const Error& e) {
        return JsonError(res, 422, "BadMode", "mode must be count, binary or multiclass");
      }
    }
    DetectorSpec::Kind backend = config_.detector.kind;
    if (auto d = FormField(req, "detector")) {
      if (*d == "classical") {
        backend = DetectorSpec::Kind::kClassical;
      } else if (*d == "external") {
        backend = DetectorSpec::Kind::kExternal;
      } else {
        return JsonError(res, 422, "BadDetector", "detector must be classical or external");
      }
    }
    const auto predictions = FormField(req, "predictions");
    if (backend == DetectorSpec::Kind::kExternal && !predictions) {
      return JsonError(res, 422, "MissingPredictions", "detector=external needs a predictions part");
    }
    std::string captured_at = FormField(req, "captured_at").value_or("");
    if (captured_at.empty()) captured_at = NowIso();
    if (!ParseTimestamp(captured_at)) {
      return JsonError(res, 422, "BadTimestamp", captured_at);
    }

    const std::string& bytes = req.get_file_value("image").content;
    const std::span<const std::uint8_t> data(
        reinterpret_cast<const std::uint8_t*>(bytes.data()), bytes.size());
    const RgbImage image = DecodeImage(data);

    StoredSample s = AnalyzeImage(config_, image, backend,
                                  predictions ? &*predictions : nullptr);
    s.session_id = session->info.session_id;
    s.captured_at = captured_at;
    s.mode = std::string(CountModeName(mode));
    s.image_sha256 = Sha256Hex(data);

    const fs::path image_path = config_.data_dir / "images" / s.image_sha256;
    if (!fs::exists(image_path)) WriteFileAtomic(image_path, bytes);
    {
      std::lock_guard lock(session->mu);
      s.sample_id = s.session_id + "-" + std::to_string(session->samples.size());
      AppendDurable(config_.data_dir / "sessions" / s.session_id / "journal.jsonl",
                    SampleToJson(s).dump() + "\n");
      session->samples.push_back(s);
    }
    res.set_content(AnalysisToJson(s, mode, config_.confidence_threshold,
                                   config_.ripe_stages, config_.ResolvedStageNames()),
                    "application/json");
  }

  void Timeline(const httplib::Request& req, httplib::Response& res) {
    auto session = Find(req.matches[1]);
    if (!session) return JsonError(res, 404, "NotFound", "unknown session");
    CountMode mode = CountMode::kBinary;
    if (req.has_param("mode")) {
      try {
        mode = ParseCountMode(req.get_param_value("mode"));
      } catch (const Error&) {
        return JsonError(res, 422, "BadMode", "mode must be count, binary or multiclass");
      }
    }
    std::vector<RipenessSample> samples;
    {
      std::lock_guard lock(session->mu);
      for (const auto& s : session->samples) {
        samples.push_back({s.captured_at, s.counts, s.ripeness});
      }
    }
    const TimelineSeries series =
        BuildTimeline(samples, mode, config_.ripe_stages, config_.ResolvedStageNames());
    const std::string format = req.has_param("format") ? req.get_param_value("format") : "json";
    if (format == "csv") {
      res.set_content(TimelineToCsv(series), "text/csv");
    } else if (format == "json") {
      res.set_content(TimelineToJson(series), "application/json");
    } else {
      JsonError(res, 422, "BadFormat", "format must be json or csv");
    }
  }

  ServiceConfig config_;
  mutable std::shared_mutex sessions_mu_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
};

HarvestService::HarvestService(ServiceConfig config)
    : config_(std::move(config)), impl_(std::make_unique<Impl>(config_)) {}

HarvestService::~HarvestService() { Stop(); }

bool HarvestService::Listen() { return impl_->server.listen(config_.host, config_.port); }

int HarvestService::BindToAnyPort() {
  config_.port = impl_->server.bind_to_any_port(config_.host);
  return config_.port;
}

bool HarvestService::ListenAfterBind() { return impl_->server.listen_after_bind(); }

void HarvestService::Stop() {
  if (impl_) impl_->server.stop();
}

void HarvestService::WaitUntilReady() const { impl_->server.wait_until_ready(); }

StoreCheck HarvestService::VerifyStore() const { return impl_->Verify(); }

}  // namespace coffeelab
