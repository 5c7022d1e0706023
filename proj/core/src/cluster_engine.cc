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

#include "coffeelab/cluster_engine.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include <Eigen/Dense>

#include "coffeelab/error.h"
#include "json.hpp"
#include "parallel.h"

namespace coffeelab {
namespace {

using json = nlohmann::json;
using Row = std::span<const float>;

double SquaredDistance(Row x, const std::vector<double>& c) {
  double sum = 0.0;
  for (size_t j = 0; j < x.size(); ++j) {
    const double d = static_cast<double>(x[j]) - c[j];
    sum += d * d;
  }
  return sum;
}

double SquaredDistance(Row x, Row y) {
  double sum = 0.0;
  for (size_t j = 0; j < x.size(); ++j) {
    const double d = static_cast<double>(x[j]) - static_cast<double>(y[j]);
    sum += d * d;
  }
  return sum;
}

// Uniform in [0, 1) from the top 53 bits; std distributions are not
// specified bit-exactly across standard libraries.
double Uniform(std::mt19937_64& gen) {
  return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

std::vector<double> ToCentroid(Row x) {
  return std::vector<double>(x.begin(), x.end());
}

std::vector<std::vector<double>> SeedPlusPlus(std::span<const Row> rows, int k,
                                              std::mt19937_64& gen) {
  const size_t n = rows.size();
  std::vector<std::vector<double>> centroids;
  centroids.reserve(static_cast<size_t>(k));
  size_t first = std::min(n - 1, static_cast<size_t>(Uniform(gen) * n));
  centroids.push_back(ToCentroid(rows[first]));
  std::vector<double> d2(n);
  for (size_t i = 0; i < n; ++i) d2[i] = SquaredDistance(rows[i], rows[first]);

  // Greedy variant: several D^2 draws per step, keep the one that lowers
  // the potential most.
  const int trials = 2 + static_cast<int>(std::log(static_cast<double>(k)));
  std::vector<double> trial_d2(n);
  std::vector<double> best_d2(n);
  for (int c = 1; c < k; ++c) {
    double total = 0.0;
    for (double v : d2) total += v;
    if (total <= 0.0) {
      throw Error(ErrorKind::kTooFewPoints,
                  "fewer than " + std::to_string(k) + " distinct points");
    }
    size_t best_pick = n;
    double best_potential = std::numeric_limits<double>::infinity();
    for (int t = 0; t < trials; ++t) {
      const double target = Uniform(gen) * total;
      size_t pick = n;
      double cum = 0.0;
      for (size_t i = 0; i < n; ++i) {
        if (d2[i] <= 0.0) continue;
        cum += d2[i];
        pick = i;
        if (cum > target) break;
      }
      double potential = 0.0;
      for (size_t i = 0; i < n; ++i) {
        trial_d2[i] = std::min(d2[i], SquaredDistance(rows[i], rows[pick]));
        potential += trial_d2[i];
      }
      if (potential < best_potential) {
        best_potential = potential;
        best_pick = pick;
        best_d2.swap(trial_d2);
      }
    }
    centroids.push_back(ToCentroid(rows[best_pick]));
    d2.swap(best_d2);
  }
  return centroids;
}

int Nearest(Row x, const std::vector<std::vector<double>>& centroids,
            double* best_dist) {
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (size_t c = 0; c < centroids.size(); ++c) {
    const double d = SquaredDistance(x, centroids[c]);
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(c);
    }
  }
  if (best_dist != nullptr) *best_dist = best_d;
  return best;
}

// Assignment step; labels and distances are per-point so the parallel split
// cannot change results. The inertia reduction runs in index order.
double Assign(std::span<const Row> rows,
              const std::vector<std::vector<double>>& centroids, int threads,
              std::vector<int>& labels, std::vector<double>& dists) {
  internal::ParallelFor(rows.size(), threads, 256,
                        [&](size_t begin, size_t end) {
                          for (size_t i = begin; i < end; ++i) {
                            labels[i] = Nearest(rows[i], centroids, &dists[i]);
                          }
                        });
  double inertia = 0.0;
  for (double d : dists) inertia += d;
  return inertia;
}

KMeansModel FitImpl(std::span<const Row> rows, int k, std::uint64_t seed,
                    const KMeansOptions& options) {
  if (k < 1 || k > kMaxK) {
    throw Error(ErrorKind::kBadConfig,
                "k must be in [1, " + std::to_string(kMaxK) + "]");
  }
  const size_t n = rows.size();
  if (n < static_cast<size_t>(k)) {
    throw Error(ErrorKind::kTooFewPoints, std::to_string(n) + " points for k=" +
                                              std::to_string(k));
  }
  const size_t dim = rows[0].size();
  for (const Row& r : rows) {
    if (r.size() != dim) {
      throw Error(ErrorKind::kDimensionMismatch, "rows differ in length");
    }
  }

  std::mt19937_64 gen(seed);
  std::vector<std::vector<double>> centroids = SeedPlusPlus(rows, k, gen);
  std::vector<int> labels(n);
  std::vector<double> dists(n);
  double inertia = Assign(rows, centroids, options.threads, labels, dists);
  if (options.trace) options.trace(0, inertia);

  int iterations = 0;
  for (int it = 1; it <= options.max_iterations; ++it) {
    std::vector<std::vector<double>> next(static_cast<size_t>(k),
                                          std::vector<double>(dim, 0.0));
    std::vector<size_t> counts(static_cast<size_t>(k), 0);
    for (size_t i = 0; i < n; ++i) {
      auto& acc = next[static_cast<size_t>(labels[i])];
      const Row& x = rows[i];
      for (size_t j = 0; j < dim; ++j) acc[j] += x[j];
      ++counts[static_cast<size_t>(labels[i])];
    }
    for (int c = 0; c < k; ++c) {
      if (counts[c] == 0) {
        size_t far = 0;
        for (size_t i = 1; i < n; ++i) {
          if (dists[i] > dists[far]) far = i;
        }
        next[c] = ToCentroid(rows[far]);
        dists[far] = 0.0;
        continue;
      }
      const double inv = 1.0 / static_cast<double>(counts[c]);
      for (double& v : next[c]) v *= inv;
    }

    double shift = 0.0;
    for (int c = 0; c < k; ++c) {
      double s = 0.0;
      for (size_t j = 0; j < dim; ++j) {
        const double d = next[c][j] - centroids[c][j];
        s += d * d;
      }
      shift = std::max(shift, std::sqrt(s));
    }
    centroids = std::move(next);
    inertia = Assign(rows, centroids, options.threads, labels, dists);
    iterations = it;
    if (options.trace) options.trace(it, inertia);
    if (shift < options.tolerance) break;
  }

  KMeansModel model;
  model.k = k;
  model.feature_dim = static_cast<int>(dim);
  model.seed = seed;
  model.iterations_run = iterations;
  model.inertia = inertia;
  model.centroids = std::move(centroids);
  return model;
}

std::string FormatDouble(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

Eigen::MatrixXd CenteredMatrix(std::span<const Row> rows,
                               std::vector<double>& mean) {
  const Eigen::Index n = static_cast<Eigen::Index>(rows.size());
  const Eigen::Index d = static_cast<Eigen::Index>(rows[0].size());
  Eigen::MatrixXd x(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (static_cast<Eigen::Index>(rows[i].size()) != d) {
      throw Error(ErrorKind::kDimensionMismatch, "rows differ in length");
    }
    for (Eigen::Index j = 0; j < d; ++j) x(i, j) = rows[i][j];
  }
  Eigen::VectorXd mu = x.colwise().mean();
  x.rowwise() -= mu.transpose();
  mean.assign(mu.data(), mu.data() + d);
  return x;
}

// Any unit vector orthogonal to `v`: project the basis vector where `v` is
// smallest.
Eigen::VectorXd OrthogonalTo(const Eigen::VectorXd& v) {
  Eigen::Index j = 0;
  v.cwiseAbs().minCoeff(&j);
  Eigen::VectorXd e = Eigen::VectorXd::Zero(v.size());
  e(j) = 1.0;
  e -= v.dot(e) * v;
  return e.normalized();
}

void FixSign(Eigen::VectorXd& v) {
  Eigen::Index j = 0;
  v.cwiseAbs().maxCoeff(&j);
  if (v(j) < 0) v = -v;
}

PcaProjection PcaImpl(std::span<const Row> rows, std::span<const int> labels) {
  const size_t n = rows.size();
  if (n < 3) throw Error(ErrorKind::kTooFewPoints, "PCA needs at least 3 rows");
  if (labels.size() != n) {
    throw Error(ErrorKind::kDimensionMismatch, "labels and rows differ in count");
  }
  PcaProjection out;
  Eigen::MatrixXd x = CenteredMatrix(rows, out.mean);
  const double denom = static_cast<double>(n - 1);
  const double total = x.squaredNorm() / denom;
  if (!(total > 0.0)) throw Error(ErrorKind::kDegenerateData, "zero variance");

  const Eigen::Index d = x.cols();
  Eigen::VectorXd v1, v2;
  double lambda1 = 0.0, lambda2 = 0.0;
  if (x.rows() <= d) {
    // Gram route: eigenvectors u of X X^T give components X^T u / sqrt(lambda).
    Eigen::MatrixXd gram = x * x.transpose();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
    const Eigen::Index m = gram.rows();
    lambda1 = std::max(0.0, es.eigenvalues()(m - 1));
    lambda2 = std::max(0.0, es.eigenvalues()(m - 2));
    v1 = (x.transpose() * es.eigenvectors().col(m - 1)).normalized();
    if (lambda2 > lambda1 * 1e-12) {
      v2 = x.transpose() * es.eigenvectors().col(m - 2);
    }
  } else {
    Eigen::MatrixXd cov = x.transpose() * x;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
    lambda1 = std::max(0.0, es.eigenvalues()(d - 1));
    lambda2 = std::max(0.0, es.eigenvalues()(d - 2));
    v1 = es.eigenvectors().col(d - 1).normalized();
    if (lambda2 > lambda1 * 1e-12) v2 = es.eigenvectors().col(d - 2);
  }
  if (v2.size() == 0) {
    v2 = OrthogonalTo(v1);
    lambda2 = 0.0;
  } else {
    v2 -= v1.dot(v2) * v1;
    v2.normalize();
  }
  FixSign(v1);
  FixSign(v2);

  out.explained_variance = {lambda1 / denom, lambda2 / denom};
  out.components[0].assign(v1.data(), v1.data() + d);
  out.components[1].assign(v2.data(), v2.data() + d);
  Eigen::VectorXd p1 = x * v1;
  Eigen::VectorXd p2 = x * v2;
  out.points.resize(n);
  for (size_t i = 0; i < n; ++i) {
    out.points[i] = {p1(static_cast<Eigen::Index>(i)),
                     p2(static_cast<Eigen::Index>(i))};
  }
  out.labels.assign(labels.begin(), labels.end());
  return out;
}

std::vector<Row> AsRows(std::span<const AbFeature> features) {
  std::vector<Row> rows;
  rows.reserve(features.size());
  for (const auto& f : features) {
    if (f.values.size() != static_cast<size_t>(kFeatureDim)) {
      throw Error(ErrorKind::kDimensionMismatch,
                  "feature of length " + std::to_string(f.values.size()));
    }
    rows.emplace_back(f.values);
  }
  return rows;
}

std::vector<Row> AsRows(std::span<const std::vector<float>> raw) {
  std::vector<Row> rows;
  rows.reserve(raw.size());
  for (const auto& r : raw) rows.emplace_back(r);
  return rows;
}

}  // namespace

KMeansModel KMeansFit(std::span<const AbFeature> features, int k,
                      std::uint64_t seed, const KMeansOptions& options) {
  auto rows = AsRows(features);
  if (rows.empty()) throw Error(ErrorKind::kTooFewPoints, "no features");
  return FitImpl(rows, k, seed, options);
}

KMeansModel KMeansFitRows(std::span<const std::vector<float>> raw, int k,
                          std::uint64_t seed, const KMeansOptions& options) {
  auto rows = AsRows(raw);
  if (rows.empty()) throw Error(ErrorKind::kTooFewPoints, "no rows");
  return FitImpl(rows, k, seed, options);
}

int KMeansPredict(const KMeansModel& model, std::span<const float> feature) {
  if (feature.size() != static_cast<size_t>(model.feature_dim)) {
    throw Error(ErrorKind::kDimensionMismatch,
                "feature length " + std::to_string(feature.size()) +
                    ", model expects " + std::to_string(model.feature_dim));
  }
  return Nearest(feature, model.centroids, nullptr);
}

double Inertia(const KMeansModel& model,
               std::span<const std::vector<float>> rows) {
  double total = 0.0;
  for (const auto& r : rows) {
    double d = 0.0;
    Nearest(r, model.centroids, &d);
    total += d;
  }
  return total;
}

std::string ModelToJson(const KMeansModel& model) {
  json j;
  j["version"] = 1;
  j["k"] = model.k;
  j["feature_dim"] = model.feature_dim;
  j["layout"] = "planar-ab";
  j["seed"] = model.seed;
  j["iterations_run"] = model.iterations_run;
  j["inertia"] = model.inertia;
  j["centroids"] = model.centroids;
  return j.dump() + "\n";
}

KMeansModel ModelFromJson(std::string_view text) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    throw Error(ErrorKind::kBadFile, "model is not a JSON object");
  }
  KMeansModel m;
  try {
    if (j.at("version").get<int>() != 1) {
      throw Error(ErrorKind::kBadFile, "unsupported model version");
    }
    if (j.at("layout").get<std::string>() != "planar-ab") {
      throw Error(ErrorKind::kBadFile, "unsupported feature layout");
    }
    m.k = j.at("k").get<int>();
    m.feature_dim = j.at("feature_dim").get<int>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.iterations_run = j.at("iterations_run").get<int>();
    m.inertia = j.at("inertia").get<double>();
    m.centroids = j.at("centroids").get<std::vector<std::vector<double>>>();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kBadFile, std::string("model: ") + e.what());
  }
  if (m.k < 1 || static_cast<int>(m.centroids.size()) != m.k) {
    throw Error(ErrorKind::kBadFile, "centroid count does not match k");
  }
  for (const auto& c : m.centroids) {
    if (static_cast<int>(c.size()) != m.feature_dim) {
      throw Error(ErrorKind::kDimensionMismatch, "centroid length mismatch");
    }
  }
  return m;
}

std::vector<std::string> DefaultStageNames(int k) {
  static const char* kScale[] = {"green", "green-yellow", "cherry", "raisin",
                                 "dry"};
  std::vector<std::string> names;
  if (k == 2) return {"unripe", "ripe"};
  for (int i = 0; i < k; ++i) {
    names.push_back(k <= 5 ? std::string(kScale[i])
                           : "stage-" + std::to_string(i));
  }
  return names;
}

std::vector<int> MaturityMap::StageToCluster() const {
  std::vector<int> inverse(cluster_to_stage.size(), -1);
  for (size_t c = 0; c < cluster_to_stage.size(); ++c) {
    inverse.at(static_cast<size_t>(cluster_to_stage[c])) = static_cast<int>(c);
  }
  return inverse;
}

MaturityMap OrderClusters(
    const KMeansModel& model,
    std::optional<std::span<const ReferenceSample>> reference,
    std::vector<std::string> stage_names) {
  const int k = model.k;
  if (stage_names.empty()) stage_names = DefaultStageNames(k);
  if (static_cast<int>(stage_names.size()) != k) {
    throw Error(ErrorKind::kBadConfig,
                std::to_string(stage_names.size()) + " stage names for k=" +
                    std::to_string(k));
  }
  MaturityMap map;
  map.stage_names = std::move(stage_names);
  map.cluster_to_stage.assign(static_cast<size_t>(k), -1);

  if (!reference) {
    const size_t a_plane = static_cast<size_t>(model.feature_dim) / 2;
    std::vector<double> mean_a(static_cast<size_t>(k));
    for (int c = 0; c < k; ++c) {
      const auto& cen = model.centroids[c];
      mean_a[c] = std::accumulate(cen.begin(), cen.begin() + a_plane, 0.0) /
                  static_cast<double>(a_plane);
    }
    std::vector<int> order(static_cast<size_t>(k));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int l, int r) { return mean_a[l] < mean_a[r]; });
    for (int stage = 0; stage < k; ++stage) {
      map.cluster_to_stage[order[stage]] = stage;
    }
    return map;
  }

  std::vector<std::vector<int>> votes(static_cast<size_t>(k),
                                      std::vector<int>(static_cast<size_t>(k), 0));
  std::vector<int> stage_seen(static_cast<size_t>(k), 0);
  for (const ReferenceSample& s : *reference) {
    if (s.stage < 0 || s.stage >= k) {
      throw Error(ErrorKind::kAmbiguousMapping,
                  "reference stage " + std::to_string(s.stage) +
                      " outside 0.." + std::to_string(k - 1));
    }
    ++stage_seen[s.stage];
    ++votes[KMeansPredict(model, s.feature)][s.stage];
  }
  for (int s = 0; s < k; ++s) {
    if (stage_seen[s] == 0) {
      throw Error(ErrorKind::kAmbiguousMapping,
                  "no reference sample for stage " + std::to_string(s));
    }
  }
  std::vector<bool> taken(static_cast<size_t>(k), false);
  for (int c = 0; c < k; ++c) {
    const auto& v = votes[c];
    const int best = static_cast<int>(std::max_element(v.begin(), v.end()) -
                                      v.begin());
    if (v[best] == 0) {
      throw Error(ErrorKind::kAmbiguousMapping,
                  "cluster " + std::to_string(c) + " has no reference members");
    }
    if (taken[best]) {
      throw Error(ErrorKind::kAmbiguousMapping,
                  "stage " + std::to_string(best) +
                      " is the majority of more than one cluster");
    }
    taken[best] = true;
    map.cluster_to_stage[c] = best;
  }
  return map;
}

std::string MaturityToJson(const MaturityMap& map) {
  json j;
  j["cluster_to_stage"] = map.cluster_to_stage;
  j["stage_names"] = map.stage_names;
  return j.dump(2) + "\n";
}

MaturityMap MaturityFromJson(std::string_view text) {
  json j = json::parse(text, nullptr, false);
  MaturityMap m;
  try {
    m.cluster_to_stage = j.at("cluster_to_stage").get<std::vector<int>>();
    m.stage_names = j.at("stage_names").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kBadFile, std::string("maturity map: ") + e.what());
  }
  const size_t k = m.cluster_to_stage.size();
  std::vector<bool> seen(k, false);
  for (int s : m.cluster_to_stage) {
    if (s < 0 || static_cast<size_t>(s) >= k || seen[s]) {
      throw Error(ErrorKind::kBadFile, "cluster_to_stage is not a permutation");
    }
    seen[s] = true;
  }
  if (m.stage_names.size() != k) {
    throw Error(ErrorKind::kBadFile, "stage_names length differs from k");
  }
  return m;
}

PcaProjection PcaProject(std::span<const std::vector<float>> rows,
                         std::span<const int> labels) {
  return PcaImpl(AsRows(rows), labels);
}

PcaProjection PcaProject(std::span<const AbFeature> features,
                         std::span<const int> labels) {
  return PcaImpl(AsRows(features), labels);
}

std::string PcaToCsv(const PcaProjection& projection, const MaturityMap* map) {
  std::string out = "x,y,cluster,stage\n";
  for (size_t i = 0; i < projection.points.size(); ++i) {
    const int cluster = projection.labels[i];
    out += FormatDouble(projection.points[i][0]);
    out += ',';
    out += FormatDouble(projection.points[i][1]);
    out += ',';
    out += std::to_string(cluster);
    out += ',';
    if (map != nullptr) out += map->stage_names.at(map->StageOf(cluster));
    out += '\n';
  }
  return out;
}

}  // namespace coffeelab
