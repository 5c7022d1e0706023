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

#include <algorithm>
#include <csignal>
#include <iostream>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "coffeelab/annotation_io.h"
#include "coffeelab/autolabel.h"
#include "coffeelab/cluster_engine.h"
#include "coffeelab/color_features.h"
#include "coffeelab/detector_backends.h"
#include "coffeelab/error.h"
#include "coffeelab/eval_metrics.h"
#include "coffeelab/fs_util.h"
#include "coffeelab/harvest_service.h"
#include "coffeelab/image.h"
#include "coffeelab/ripeness_analytics.h"
#include "coffeelab/synth.h"

namespace coffeelab::cli {
namespace {

namespace fs = std::filesystem;

// Thrown for flag combinations CLI11 cannot express; maps to exit 2.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::vector<std::string> LoadNames(const std::string& path) {
  return ParseNames(ReadTextFile(path));
}

// Names next to a label directory, if any.
std::vector<std::string> NamesBeside(const fs::path& dir) {
  for (const char* name : {"names.txt", "classes.txt"}) {
    if (fs::is_regular_file(dir / name)) return LoadNames((dir / name).string());
  }
  return {};
}

std::set<std::string> ParseRipeList(const std::string& csv) {
  if (csv.empty()) return DefaultRipeStages();
  std::set<std::string> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.insert(item);
  }
  return out;
}

// "4" or "2..7".
std::vector<int> ParseKRange(const std::string& text) {
  auto to_int = [&](const std::string& s) {
    size_t used = 0;
    int v = 0;
    try {
      v = std::stoi(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != s.size()) throw UsageError("--k expects N or A..B, got '" + text + "'");
    return v;
  };
  const size_t dots = text.find("..");
  std::vector<int> ks;
  if (dots == std::string::npos) {
    ks.push_back(to_int(text));
  } else {
    const int lo = to_int(text.substr(0, dots));
    const int hi = to_int(text.substr(dots + 2));
    if (lo > hi) throw UsageError("--k range is empty: " + text);
    for (int k = lo; k <= hi; ++k) ks.push_back(k);
  }
  for (int k : ks) {
    if (k < 1 || k > kMaxK) {
      throw UsageError("--k values must be in [1, " + std::to_string(kMaxK) + "]");
    }
  }
  return ks;
}

DetectorSpec LoadDetector(const std::string& arg) {
  if (arg.empty() || arg == "classical") return DefaultDetectorSpec();
  if (arg == "external") {
    throw UsageError("--detector external needs a JSON config with predictions_dir");
  }
  return ParseDetectorSpec(ReadTextFile(arg));
}

std::vector<ReferenceSample> ReferenceFromLabels(std::span<const AbFeature> features,
                                                 const fs::path& labels_dir) {
  const auto labels = ReadLabelDir(labels_dir);
  std::vector<ReferenceSample> ref;
  for (const AbFeature& f : features) {
    auto it = labels.find(f.source_image_id);
    if (it == labels.end()) continue;
    const auto& boxes = it->second.boxes;
    if (f.source_box_index < 0 || static_cast<size_t>(f.source_box_index) >= boxes.size()) {
      continue;
    }
    ref.push_back({f.values, boxes[static_cast<size_t>(f.source_box_index)].category});
  }
  return ref;
}

HarvestService* g_service = nullptr;

void HandleSignal(int) {
  if (g_service) g_service->Stop();
}

class Runner {
 public:
  Runner(std::ostream& out, std::ostream& err) : out_(out), err_(err) {}

  int Main(const std::vector<std::string>& args) {
    CLI::App app{"coffeelab: coffee ripeness toolkit", "coffeelab"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "Show help for every subcommand");

    // convert
    std::string ls_input, convert_out, convert_names;
    auto* convert = app.add_subcommand("convert", "Label Studio JSON export -> YOLO label files");
    convert->add_option("--input", ls_input, "Label Studio export (JSON)")->required()->check(CLI::ExistingFile);
    convert->add_option("--out", convert_out, "Output label directory")->required();
    convert->add_option("--names", convert_names, "Fixed category names file")->check(CLI::ExistingFile);

    // crops
    std::string crops_images, crops_labels, crops_out;
    int threads = 0;
    auto* crops = app.add_subcommand("crops", "Labels + images -> a*b* feature store");
    crops->add_option("--images", crops_images, "Image directory")->required()->check(CLI::ExistingDirectory);
    crops->add_option("--labels", crops_labels, "YOLO label directory")->required()->check(CLI::ExistingDirectory);
    crops->add_option("--out", crops_out, "Feature store path")->required();

    // fit
    std::string fit_features, fit_out, fit_k = std::to_string(kDefaultK), fit_reference,
                fit_names, fit_maturity_out;
    std::uint64_t seed = 42;
    auto* fit = app.add_subcommand("fit", "Feature store -> k-means model (and maturity map)");
    fit->add_option("--features", fit_features, "Feature store")->required()->check(CLI::ExistingFile);
    fit->add_option("--k", fit_k, "Cluster count N, or sweep A..B")->capture_default_str();
    fit->add_option("--seed", seed, "Seed")->capture_default_str();
    fit->add_option("--out", fit_out, "Model JSON (directory in sweep mode)")->required();
    fit->add_option("--reference-labels", fit_reference,
                    "Labels with known stages for maturity alignment")
        ->check(CLI::ExistingDirectory);
    fit->add_option("--names", fit_names, "Stage names file")->check(CLI::ExistingFile);
    fit->add_option("--maturity-out", fit_maturity_out, "Maturity map JSON");
    fit->add_option("--threads", threads, "Worker threads (0 = all cores)");

    // project
    std::string proj_features, proj_model, proj_maturity, proj_out;
    auto* project = app.add_subcommand("project", "Features + model -> 2-D PCA CSV");
    project->add_option("--features", proj_features, "Feature store")->required()->check(CLI::ExistingFile);
    project->add_option("--model", proj_model, "Model JSON")->required()->check(CLI::ExistingFile);
    project->add_option("--maturity", proj_maturity, "Maturity map JSON")->check(CLI::ExistingFile);
    project->add_option("--out", proj_out, "CSV path (stdout if omitted)");

    // relabel
    std::string rl_images, rl_labels, rl_model, rl_maturity, rl_out;
    bool json = false;
    auto* relabel = app.add_subcommand("relabel", "Assign maturity stages to manual boxes");
    relabel->add_option("--images", rl_images, "Image directory")->required()->check(CLI::ExistingDirectory);
    relabel->add_option("--labels", rl_labels, "Box-only label directory")->required()->check(CLI::ExistingDirectory);
    relabel->add_option("--model", rl_model, "Model JSON")->required()->check(CLI::ExistingFile);
    relabel->add_option("--maturity", rl_maturity, "Maturity map JSON (default: a* order)")->check(CLI::ExistingFile);
    relabel->add_option("--out", rl_out, "Output label directory")->required();
    relabel->add_option("--threads", threads, "Worker threads (0 = all cores)");
    relabel->add_flag("--json", json, "Print the summary as JSON");

    // compare
    std::string cmp_a, cmp_b, cmp_names;
    auto* compare = app.add_subcommand("compare", "Stage agreement between two labelings of the same boxes");
    compare->add_option("--a", cmp_a, "First label directory")->required()->check(CLI::ExistingDirectory);
    compare->add_option("--b", cmp_b, "Second label directory")->required()->check(CLI::ExistingDirectory);
    compare->add_option("--names", cmp_names, "Stage names file")->check(CLI::ExistingFile);
    compare->add_flag("--json", json, "Print JSON");

    // eval
    std::string ev_gt, ev_pred, ev_mode = "multiclass", ev_names, ev_ripe, ev_curves, ev_out;
    double iou = kDefaultIouThreshold;
    double conf = kDefaultConfidenceThreshold;
    auto* eval = app.add_subcommand("eval", "Ground truth + predictions -> P/R/AP report");
    eval->add_option("--gt", ev_gt, "Ground-truth label directory")->required()->check(CLI::ExistingDirectory);
    eval->add_option("--pred", ev_pred, "Prediction directory")->required()->check(CLI::ExistingDirectory);
    eval->add_option("--mode", ev_mode, "mono | binary | multiclass")
        ->check(CLI::IsMember({"mono", "binary", "multiclass"}))->capture_default_str();
    eval->add_option("--iou", iou, "IoU match threshold")->check(CLI::Range(0.0, 1.0))->capture_default_str();
    eval->add_option("--conf", conf, "Confidence threshold for P/R")->check(CLI::Range(0.0, 1.0))->capture_default_str();
    eval->add_option("--names", ev_names, "Category names file (default: <gt>/names.txt)")->check(CLI::ExistingFile);
    eval->add_option("--ripe", ev_ripe, "Comma-separated ripe stages for binary mode");
    eval->add_option("--curves", ev_curves, "Write precision/recall points CSV");
    eval->add_option("--out", ev_out, "Write the JSON report to a file");
    eval->add_flag("--json", json, "Print JSON instead of a table");

    // ripeness
    std::string rp_pred, rp_schedule, rp_mode = "binary", rp_names, rp_ripe, rp_out;
    auto* ripeness = app.add_subcommand("ripeness", "Dated prediction files -> ripeness timeline");
    ripeness->add_option("--pred", rp_pred, "Prediction directory")->required()->check(CLI::ExistingDirectory);
    ripeness->add_option("--schedule", rp_schedule, "CSV image_id,captured_at")->required()->check(CLI::ExistingFile);
    ripeness->add_option("--mode", rp_mode, "count | binary | multiclass")
        ->check(CLI::IsMember({"count", "binary", "multiclass"}))->capture_default_str();
    ripeness->add_option("--names", rp_names, "Stage names file (default: detector stages)")->check(CLI::ExistingFile);
    ripeness->add_option("--ripe", rp_ripe, "Comma-separated ripe stages");
    ripeness->add_option("--conf", conf, "Confidence threshold")->check(CLI::Range(0.0, 1.0))->capture_default_str();
    ripeness->add_option("--out", rp_out, "CSV path (stdout if omitted)");
    ripeness->add_flag("--json", json, "Emit JSON instead of CSV");

    // detect
    std::string dt_images, dt_detector, dt_out;
    auto* detect = app.add_subcommand("detect", "Images -> prediction files");
    detect->add_option("--images", dt_images, "Image file or directory")->required()->check(CLI::ExistingPath);
    detect->add_option("--detector", dt_detector, "classical, or a detector JSON config");
    detect->add_option("--out", dt_out, "Prediction directory")->required();
    detect->add_option("--threads", threads, "Worker threads (0 = all cores)");

    // serve
    std::string sv_host = "127.0.0.1", sv_data = "harvest-data", sv_detector, sv_names, sv_ripe;
    int port = 8080;
    auto* serve = app.add_subcommand("serve", "Run the harvest HTTP service");
    serve->add_option("--host", sv_host, "Listen address")->capture_default_str();
    serve->add_option("--port", port, "Listen port")->check(CLI::Range(0, 65535))->capture_default_str();
    serve->add_option("--data", sv_data, "Data directory")->capture_default_str();
    serve->add_option("--detector", sv_detector, "classical, or a detector JSON config");
    serve->add_option("--names", sv_names, "Stage names file")->check(CLI::ExistingFile);
    serve->add_option("--ripe", sv_ripe, "Comma-separated ripe stages");
    serve->add_option("--conf", conf, "Counting confidence threshold")->check(CLI::Range(0.0, 1.0))->capture_default_str();

    // synth (hidden)
    std::string sy_kind, sy_out;
    int sy_images = 40, sy_days = 90;
    auto* synth = app.add_subcommand("synth", "Write synthetic berry or season data");
  synth->group("");  // hidden
    synth->add_option("kind", sy_kind, "berries | season")->required()->check(CLI::IsMember({"berries", "season"}));
    synth->add_option("--out", sy_out, "Output directory")->required();
    synth->add_option("--seed", seed, "Seed");
    synth->add_option("--images", sy_images, "Berry images")->check(CLI::PositiveNumber);
    synth->add_option("--days", sy_days, "Season days")->check(CLI::PositiveNumber);

    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
      app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
      out_ << app.help();
      return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
      out_ << app.help("", CLI::AppFormatMode::All);
      return kExitOk;
    } catch (const CLI::ParseError& e) {
      err_ << "usage error: " << e.what() << "\n";
      const CLI::App* sub = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
      err_ << sub->help();
      return kExitUsage;
    }

    try {
      if (*convert) return Convert(ls_input, convert_out, convert_names);
      if (*crops) return Crops(crops_images, crops_labels, crops_out);
      if (*fit) {
        return Fit(fit_features, ParseKRange(fit_k), seed, fit_out, fit_reference, fit_names,
                   fit_maturity_out, threads);
      }
      if (*project) return Project(proj_features, proj_model, proj_maturity, proj_out);
      if (*relabel) return RelabelCmd(rl_images, rl_labels, rl_model, rl_maturity, rl_out, threads, json);
      if (*compare) return Compare(cmp_a, cmp_b, cmp_names, json);
      if (*eval) {
        return Eval(ev_gt, ev_pred, ev_mode, iou, conf, ev_names, ev_ripe, ev_curves, ev_out, json);
      }
      if (*ripeness) {
        return RipenessCmd(rp_pred, rp_schedule, rp_mode, rp_names, rp_ripe, conf, rp_out, json);
      }
      if (*detect) return Detect(dt_images, dt_detector, dt_out, threads);
      if (*serve) return Serve(sv_host, port, sv_data, sv_detector, sv_names, sv_ripe, conf);
      if (*synth) return Synth(sy_kind, sy_out, seed, sy_images, sy_days);
    } catch (const UsageError& e) {
      err_ << "usage error: " << e.what() << "\n";
      return kExitUsage;
    } catch (const Error& e) {
      err_ << "error: " << e.what() << "\n";
      return kExitDomain;
    } catch (const std::exception& e) {
      err_ << "error: " << e.what() << "\n";
      return kExitDomain;
    }
    return kExitUsage;
  }

 private:
  void Emit(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
      out_ << text;
    } else {
      if (fs::path(path).has_parent_path()) fs::create_directories(fs::path(path).parent_path());
      WriteFileAtomic(path, text);
    }
  }

  int Convert(const std::string& input, const std::string& out_dir, const std::string& names_path) {
    std::optional<std::vector<std::string>> names;
    if (!names_path.empty()) names = LoadNames(names_path);
    const auto conv = ConvertLabelStudio(ReadTextFile(input), names);
    fs::create_directories(out_dir);
    size_t boxes = 0;
    for (const auto& f : conv.files) {
      WriteLabelFile(out_dir, f);
      boxes += f.boxes.size();
    }
    WriteFileAtomic(fs::path(out_dir) / "names.txt", SerializeNames(conv.names));
    out_ << "converted " << conv.files.size() << " images, " << boxes << " boxes, "
         << conv.names.size() << " categories\n";
    return kExitOk;
  }

  int Crops(const std::string& images, const std::string& labels, const std::string& out_path) {
    std::vector<AbFeature> features;
    size_t skipped = 0;
    for (const auto& [id, file] : ReadLabelDir(labels)) {
      const fs::path image_path = FindImage(images, id);
      if (image_path.empty()) throw Error(ErrorKind::kMissingImage, id);
      std::vector<int> skip;
      auto f = ExtractImageFeatures(ReadImage(image_path), file, &skip);
      skipped += skip.size();
      for (auto& x : f) features.push_back(std::move(x));
    }
    WriteFeatureStore(out_path, features);
    out_ << "wrote " << features.size() << " features";
    if (skipped) out_ << " (" << skipped << " degenerate boxes skipped)";
    out_ << "\n";
    return kExitOk;
  }

  int Fit(const std::string& features_path, const std::vector<int>& ks, std::uint64_t seed,
          const std::string& out_path, const std::string& reference_dir,
          const std::string& names_path, const std::string& maturity_out, int threads) {
    const auto features = ReadFeatureStore(features_path);
    KMeansOptions opts;
    opts.threads = threads;
    std::vector<std::string> names;
    if (!names_path.empty()) {
      names = LoadNames(names_path);
    } else if (!reference_dir.empty()) {
      names = NamesBeside(reference_dir);
    }
    std::vector<ReferenceSample> reference;
    if (!reference_dir.empty()) reference = ReferenceFromLabels(features, reference_dir);

    auto maturity_for = [&](const KMeansModel& model) {
      std::vector<std::string> stage_names = names;
      if (static_cast<int>(stage_names.size()) != model.k) stage_names.clear();
      if (reference_dir.empty()) return OrderClusters(model, std::nullopt, stage_names);
      return OrderClusters(model, std::span<const ReferenceSample>(reference), stage_names);
    };

    if (ks.size() == 1) {
      const KMeansModel model = KMeansFit(features, ks[0], seed, opts);
      Emit(out_path, ModelToJson(model));
      if (!maturity_out.empty()) Emit(maturity_out, MaturityToJson(maturity_for(model)));
      out_ << "k=" << model.k << " inertia=" << FormatReal(model.inertia)
           << " iterations=" << model.iterations_run << "\n";
      return kExitOk;
    }

    fs::create_directories(out_path);
    std::string table = "k,inertia,iterations\n";
    out_ << "k    inertia              iterations\n";
    for (int k : ks) {
      const KMeansModel model = KMeansFit(features, k, seed, opts);
      const std::string stem = "model_k" + std::to_string(k);
      WriteFileAtomic(fs::path(out_path) / (stem + ".json"), ModelToJson(model));
      if (!maturity_out.empty() || !reference_dir.empty()) {
        WriteFileAtomic(fs::path(out_path) / ("maturity_k" + std::to_string(k) + ".json"),
                        MaturityToJson(maturity_for(model)));
      }
      table += std::to_string(k) + "," + FormatReal(model.inertia) + "," +
               std::to_string(model.iterations_run) + "\n";
      char line[96];
      std::snprintf(line, sizeof(line), "%-4d %-20.6g %d\n", k, model.inertia, model.iterations_run);
      out_ << line;
    }
    WriteFileAtomic(fs::path(out_path) / "inertia.csv", table);
    return kExitOk;
  }

  int Project(const std::string& features_path, const std::string& model_path,
              const std::string& maturity_path, const std::string& out_path) {
    const auto features = ReadFeatureStore(features_path);
    const KMeansModel model = ModelFromJson(ReadTextFile(model_path));
    std::vector<int> labels;
    labels.reserve(features.size());
    for (const auto& f : features) labels.push_back(KMeansPredict(model, f));
    const auto projection = PcaProject(features, labels);
    std::optional<MaturityMap> maturity;
    if (!maturity_path.empty()) maturity = MaturityFromJson(ReadTextFile(maturity_path));
    Emit(out_path, PcaToCsv(projection, maturity ? &*maturity : nullptr));
    return kExitOk;
  }

  int RelabelCmd(const std::string& images, const std::string& labels, const std::string& model_path,
                 const std::string& maturity_path, const std::string& out_dir, int threads,
                 bool json) {
    RelabelJob job;
    job.images_dir = images;
    job.labels_dir = labels;
    job.output_dir = out_dir;
    job.model = ModelFromJson(ReadTextFile(model_path));
    job.maturity = maturity_path.empty() ? OrderClusters(job.model, std::nullopt)
                                         : MaturityFromJson(ReadTextFile(maturity_path));
    job.threads = threads;
    const RelabelSummary s = Relabel(job);
    if (json) {
      out_ << RelabelSummaryToJson(s);
    } else {
      out_ << "images " << s.images_processed << ", boxes " << s.boxes_relabeled
           << ", skipped " << s.skipped.size() << "\n";
      for (const auto& [stage, n] : s.per_stage) out_ << "  " << stage << " " << n << "\n";
    }
    return kExitOk;
  }

  int Compare(const std::string& a, const std::string& b, const std::string& names_path, bool json) {
    std::vector<std::string> names;
    if (!names_path.empty()) names = LoadNames(names_path);
    const AgreementReport r = CompareLabelingDirs(a, b, names);
    if (json) {
      out_ << AgreementToJson(r);
    } else {
      out_ << "boxes " << r.total << ", agreement "
           << (r.agreement ? FormatReal(*r.agreement) : std::string("n/a")) << "\n";
    }
    return kExitOk;
  }

  int Eval(const std::string& gt_dir, const std::string& pred_dir, const std::string& mode,
           double iou, double conf, const std::string& names_path, const std::string& ripe,
           const std::string& curves, const std::string& out_path, bool json) {
    EvalOptions opts;
    opts.mode = ParseEvalMode(mode);
    opts.iou_threshold = iou;
    opts.confidence_threshold = conf;
    opts.names = names_path.empty() ? NamesBeside(gt_dir) : LoadNames(names_path);
    opts.ripe_stages = ParseRipeList(ripe);
    if (opts.mode == EvalMode::kBinary && opts.names.empty()) {
      throw UsageError("binary mode needs category names (--names or <gt>/names.txt)");
    }
    const auto gt = ReadLabelDir(gt_dir);
    const auto pred = ReadPredictionDir(pred_dir);
    const EvalReport report = Evaluate(pred, gt, opts);
    if (!out_path.empty()) Emit(out_path, ReportToJson(report));
    if (!curves.empty()) Emit(curves, CurvesToCsv(pred, gt, opts));
    out_ << (json ? ReportToJson(report) : ReportToTable(report));
    return kExitOk;
  }

  int RipenessCmd(const std::string& pred_dir, const std::string& schedule_path,
                  const std::string& mode, const std::string& names_path, const std::string& ripe,
                  double conf, const std::string& out_path, bool json) {
    const std::vector<std::string> stages =
        names_path.empty() ? DefaultDetectorSpec().StageNames() : LoadNames(names_path);
    const auto ripe_stages = ParseRipeList(ripe);
    const auto schedule = ParseSchedule(ReadTextFile(schedule_path));
    const auto samples =
        SamplesFromPredictions(schedule, ReadPredictionDir(pred_dir), stages, ripe_stages, conf);
    const TimelineSeries series = BuildTimeline(samples, ParseCountMode(mode), ripe_stages, stages);
    Emit(out_path, json ? TimelineToJson(series) : TimelineToCsv(series));
    return kExitOk;
  }

  int Detect(const std::string& images, const std::string& detector, const std::string& out_dir,
             int threads) {
    (void)threads;
    const DetectorSpec spec = LoadDetector(detector);
    std::vector<fs::path> paths;
    if (fs::is_directory(images)) {
      for (const auto& e : fs::directory_iterator(images)) {
        if (!e.is_regular_file()) continue;
        std::string ext = e.path().extension().string();
        for (auto& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        if (ext == ".png" || ext == ".jpg" || ext == ".jpeg") paths.push_back(e.path());
      }
      std::sort(paths.begin(), paths.end());
    } else {
      paths.push_back(images);
    }
    fs::create_directories(out_dir);
    size_t boxes = 0;
    for (const auto& p : paths) {
      const std::string id = p.stem().string();
      PredictionFile preds = spec.kind == DetectorSpec::Kind::kExternal
                                 ? LoadExternal(spec.predictions_dir, id)
                                 : DetectClassical(ReadImage(p), spec.classical, id);
      boxes += preds.entries.size();
      WritePredictionFile(out_dir, preds);
    }
    out_ << "detected " << boxes << " objects in " << paths.size() << " images\n";
    return kExitOk;
  }

  int Serve(const std::string& host, int port, const std::string& data, const std::string& detector,
            const std::string& names_path, const std::string& ripe, double conf) {
    ServiceConfig cfg;
    cfg.host = host;
    cfg.port = port;
    cfg.data_dir = data;
    cfg.detector = LoadDetector(detector);
    if (!names_path.empty()) cfg.stage_names = LoadNames(names_path);
    cfg.ripe_stages = ParseRipeList(ripe);
    cfg.confidence_threshold = conf;
    HarvestService service(cfg);
    g_service = &service;
    std::signal(SIGINT, HandleSignal);
    std::signal(SIGTERM, HandleSignal);
    out_ << "serving on http://" << host << ":" << port << " (data: " << data << ")" << std::endl;
    const bool ok = service.Listen();
    g_service = nullptr;
    if (!ok) {
      err_ << "error: could not listen on " << host << ":" << port << "\n";
      return kExitDomain;
    }
    return kExitOk;
  }

  int Synth(const std::string& kind, const std::string& out_dir, std::uint64_t seed, int images,
            int days) {
    if (kind == "berries") {
      BerryDatasetOptions o;
      o.images = images;
      o.seed = seed;
      const auto ds = GenerateBerryDataset(o);
      WriteBerryDataset(ds, out_dir);
      out_ << "wrote " << ds.images.size() << " berry images\n";
    } else {
      SeasonOptions o;
      o.days = days;
      o.seed = seed;
      const auto season = GenerateSeason(o);
      WriteSeason(season, out_dir);
      out_ << "wrote " << season.days.size() << " season days\n";
    }
    return kExitOk;
  }

  std::ostream& out_;
  std::ostream& err_;
};

}  // namespace

int Run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  return Runner(out, err).Main(args);
}

int Run(const std::vector<std::string>& args) { return Run(args, std::cout, std::cerr); }

}  // namespace coffeelab::cli
