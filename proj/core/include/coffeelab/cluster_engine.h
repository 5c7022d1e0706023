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

#ifndef COFFEELAB_CLUSTER_ENGINE_H_
#define COFFEELAB_CLUSTER_ENGINE_H_

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "coffeelab/color_features.h"

namespace coffeelab {

// Documented default cluster count for the maturity scale.
inline constexpr int kDefaultK = 4;
inline constexpr int kMaxK = 16;

struct KMeansOptions {
  int max_iterations = 300;
  // Stop once no centroid moves farther than this (Euclidean).
  double tolerance = 1e-4;
  // Called with the inertia after initialization and after each Lloyd step.
  std::function<void(int iteration, double inertia)> trace;
  // 0 = use hardware concurrency for the assignment step.
  int threads = 0;
};

struct KMeansModel {
  int k = 0;
  int feature_dim = kFeatureDim;
  std::uint64_t seed = 0;
  int iterations_run = 0;
  double inertia = 0.0;
  // k rows of feature_dim values, planar a*/b* layout.
  std::vector<std::vector<double>> centroids;
};

// k-means++ seeding from a seeded 64-bit Mersenne Twister, then Lloyd
// iterations. Empty clusters are reseeded to the point farthest from its
// assigned centroid. Identical inputs produce bit-identical centroids.
// Throws TooFewPoints, DimensionMismatch.
KMeansModel KMeansFit(std::span<const AbFeature> features, int k,
                      std::uint64_t seed, const KMeansOptions& options = {});

// Same, over raw rows (all of equal length). Used by callers that are not
// bound to the 1568-d chroma layout.
KMeansModel KMeansFitRows(std::span<const std::vector<float>> rows, int k,
                          std::uint64_t seed, const KMeansOptions& options = {});

// Nearest centroid; ties go to the lower index. Throws DimensionMismatch.
int KMeansPredict(const KMeansModel& model, std::span<const float> feature);
inline int KMeansPredict(const KMeansModel& model, const AbFeature& feature) {
  return KMeansPredict(model, feature.values);
}

// Sum of squared distances of rows to their nearest centroid.
double Inertia(const KMeansModel& model, std::span<const std::vector<float>> rows);

std::string ModelToJson(const KMeansModel& model);
KMeansModel ModelFromJson(std::string_view text);

// Stage names for a k-cluster scale. k == 2 gives {unripe, ripe}; k in 3..5
// takes the first k of {green, green-yellow, cherry, raisin, dry}; larger k
// falls back to "stage-<i>".
std::vector<std::string> DefaultStageNames(int k);

struct MaturityMap {
  // cluster_to_stage[c] is the maturity stage (0 = least mature) of cluster c.
  std::vector<int> cluster_to_stage;
  std::vector<std::string> stage_names;

  int StageOf(int cluster) const { return cluster_to_stage.at(cluster); }
  std::vector<int> StageToCluster() const;
};

struct ReferenceSample {
  std::span<const float> feature;
  int stage = 0;
};

// Without a reference: clusters sorted by the mean a* of their centroid's
// a-plane, most negative (green) first. With a reference: every cluster takes
// the majority stage among reference samples predicted into it (ties go to the
// lower stage); throws AmbiguousMapping if the result is not a bijection.
MaturityMap OrderClusters(const KMeansModel& model,
                          std::optional<std::span<const ReferenceSample>> reference,
                          std::vector<std::string> stage_names = {});

std::string MaturityToJson(const MaturityMap& map);
MaturityMap MaturityFromJson(std::string_view text);

struct PcaProjection {
  std::array<std::vector<double>, 2> components;  // orthonormal rows
  std::vector<double> mean;
  std::array<double, 2> explained_variance{};
  std::vector<std::array<double, 2>> points;
  std::vector<int> labels;
};

// Top-2 principal components of the mean-centered rows (covariance with n-1
// denominator). Each component's largest-magnitude entry is made positive.
// Throws TooFewPoints (n < 3), DegenerateData (zero total variance).
PcaProjection PcaProject(std::span<const std::vector<float>> rows,
                         std::span<const int> labels);
PcaProjection PcaProject(std::span<const AbFeature> features,
                         std::span<const int> labels);

// "x,y,cluster,stage" rows; stage is empty when no map is given.
std::string PcaToCsv(const PcaProjection& projection, const MaturityMap* map);

}  // namespace coffeelab

#endif  // COFFEELAB_CLUSTER_ENGINE_H_
