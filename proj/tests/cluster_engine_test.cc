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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "coffeelab/error.h"
#include "common/oracles.h"
#include "common/test_support.h"

namespace coffeelab {
namespace {

using Rows = std::vector<std::vector<float>>;

std::vector<std::vector<double>> ToDouble(const Rows& rows) {
  std::vector<std::vector<double>> out;
  for (const auto& r : rows) out.emplace_back(r.begin(), r.end());
  return out;
}

// Two noisy blobs in d dimensions.
Rows TwoBlobs(std::mt19937_64& gen, int n, int d, double gap) {
  Rows rows;
  for (int i = 0; i < n; ++i) {
    std::vector<float> r(static_cast<size_t>(d));
    for (int j = 0; j < d; ++j) {
      r[j] = static_cast<float>((i % 2 ? gap : 0.0) + testing::Unit(gen) * 2 - 1);
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

TEST(KMeans, MatchesBruteForceOnSmallSets) {
  std::mt19937_64 gen(21);
  for (int trial = 0; trial < 20; ++trial) {
    const Rows rows = TwoBlobs(gen, 10, 3, 6.0);
    const double optimum = testing::BruteForceTwoMeans(ToDouble(rows), nullptr);
    const KMeansModel m = KMeansFitRows(rows, 2, 42);
    EXPECT_NEAR(m.inertia, optimum, 1e-9 * std::max(1.0, optimum)) << trial;
    EXPECT_NEAR(Inertia(m, rows), m.inertia, 1e-9 * std::max(1.0, optimum));
  }
}

TEST(KMeans, SingleClusterIsTheMean) {
  const Rows rows = {{1, 2}, {3, 4}, {5, 9}};
  const KMeansModel m = KMeansFitRows(rows, 1, 0);
  ASSERT_EQ(m.centroids.size(), 1u);
  EXPECT_NEAR(m.centroids[0][0], 3.0, 1e-12);
  EXPECT_NEAR(m.centroids[0][1], 5.0, 1e-12);
  // (4+9) + (0+1) + (4+16)
  EXPECT_NEAR(m.inertia, 34.0, 1e-9);
}

TEST(KMeans, PredictMatchesLinearScan) {
  std::mt19937_64 gen(5);
  Rows rows;
  for (int i = 0; i < 200; ++i) {
    rows.push_back({static_cast<float>(testing::Unit(gen) * 10),
                    static_cast<float>(testing::Unit(gen) * 10),
                    static_cast<float>(testing::Unit(gen) * 10)});
  }
  const KMeansModel m = KMeansFitRows(rows, 6, 9);
  for (int i = 0; i < 1000; ++i) {
    std::vector<float> x = {static_cast<float>(testing::Unit(gen) * 12 - 1),
                            static_cast<float>(testing::Unit(gen) * 12 - 1),
                            static_cast<float>(testing::Unit(gen) * 12 - 1)};
    EXPECT_EQ(KMeansPredict(m, x),
              testing::LinearScanNearest({x.begin(), x.end()}, m.centroids));
  }
}

TEST(KMeans, TiesGoToLowerIndex) {
  KMeansModel m;
  m.k = 2;
  m.feature_dim = 1;
  m.centroids = {{-1.0}, {1.0}};
  const std::vector<float> zero = {0.0f};
  EXPECT_EQ(KMeansPredict(m, zero), 0);
  m.centroids = {{1.0}, {-1.0}};
  EXPECT_EQ(KMeansPredict(m, zero), 0);
}

TEST(KMeans, DeterministicForSeed) {
  std::mt19937_64 gen(77);
  const Rows rows = TwoBlobs(gen, 120, 16, 3.0);
  const KMeansModel a = KMeansFitRows(rows, 4, 123);
  const KMeansModel b = KMeansFitRows(rows, 4, 123);
  EXPECT_EQ(a.centroids, b.centroids);
  EXPECT_EQ(a.inertia, b.inertia);
  EXPECT_EQ(ModelToJson(a), ModelToJson(b));
  KMeansOptions one_thread;
  one_thread.threads = 1;
  EXPECT_EQ(KMeansFitRows(rows, 4, 123, one_thread).centroids, a.centroids);
}

TEST(KMeans, InertiaNeverIncreases) {
  std::mt19937_64 gen(4);
  const Rows rows = TwoBlobs(gen, 300, 8, 1.5);
  std::vector<double> trace;
  KMeansOptions o;
  o.trace = [&](int, double inertia) { trace.push_back(inertia); };
  KMeansFitRows(rows, 5, 1, o);
  ASSERT_GE(trace.size(), 2u);
  for (size_t i = 1; i < trace.size(); ++i) {
    EXPECT_LE(trace[i], trace[i - 1] * (1 + 1e-12)) << i;
  }
}

TEST(KMeans, Errors) {
  const Rows rows = {{1, 2}, {3, 4}};
  try {
    KMeansFitRows(rows, 3, 0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kTooFewPoints);
  }
  const Rows ragged = {{1, 2}, {3}};
  EXPECT_THROW(KMeansFitRows(ragged, 1, 0), Error);
  const KMeansModel m = KMeansFitRows(rows, 1, 0);
  const std::vector<float> wrong = {1, 2, 3};
  try {
    KMeansPredict(m, wrong);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kDimensionMismatch);
  }
}

TEST(KMeans, ModelJsonRoundTrip) {
  std::mt19937_64 gen(6);
  const Rows rows = TwoBlobs(gen, 40, 5, 4.0);
  const KMeansModel m = KMeansFitRows(rows, 3, 8);
  const KMeansModel back = ModelFromJson(ModelToJson(m));
  EXPECT_EQ(back.k, m.k);
  EXPECT_EQ(back.seed, m.seed);
  EXPECT_EQ(back.centroids, m.centroids);
  EXPECT_EQ(back.inertia, m.inertia);
  EXPECT_THROW(ModelFromJson("[]"), Error);
  EXPECT_THROW(ModelFromJson("{\"version\": 9}"), Error);
}

TEST(StageNames, Defaults) {
  EXPECT_EQ(DefaultStageNames(2), (std::vector<std::string>{"unripe", "ripe"}));
  EXPECT_EQ(DefaultStageNames(4),
            (std::vector<std::string>{"green", "green-yellow", "cherry", "raisin"}));
  EXPECT_EQ(DefaultStageNames(5).back(), "dry");
  EXPECT_EQ(DefaultStageNames(7)[6], "stage-6");
}

KMeansModel ModelWithMeanA(const std::vector<double>& mean_a) {
  KMeansModel m;
  m.k = static_cast<int>(mean_a.size());
  m.feature_dim = 4;
  for (double a : mean_a) m.centroids.push_back({a, a, 0.0, 0.0});
  return m;
}

TEST(OrderClusters, ByMeanAWithoutReference) {
  const MaturityMap map = OrderClusters(ModelWithMeanA({30.0, -40.0, 5.0}), std::nullopt);
  EXPECT_EQ(map.cluster_to_stage, (std::vector<int>{2, 0, 1}));
  EXPECT_EQ(map.StageToCluster(), (std::vector<int>{1, 2, 0}));
  EXPECT_EQ(map.stage_names, DefaultStageNames(3));
  EXPECT_EQ(map.StageOf(0), 2);
}

TEST(OrderClusters, ReferenceMajority) {
  const KMeansModel m = ModelWithMeanA({30.0, -40.0});
  const std::vector<float> near0 = {29, 29, 0, 0}, near1 = {-39, -39, 0, 0};
  // Cluster 0 holds stage-0 references: the a* order would say otherwise.
  std::vector<ReferenceSample> ref = {{near0, 0}, {near0, 0}, {near0, 1}, {near1, 1}};
  const MaturityMap map =
      OrderClusters(m, std::span<const ReferenceSample>(ref), {"unripe", "ripe"});
  EXPECT_EQ(map.cluster_to_stage, (std::vector<int>{0, 1}));

  std::vector<ReferenceSample> collapsed = {{near0, 0}, {near1, 0}, {near0, 1}};
  try {
    OrderClusters(m, std::span<const ReferenceSample>(collapsed));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kAmbiguousMapping);
  }
  std::vector<ReferenceSample> missing_stage = {{near0, 0}, {near1, 0}};
  EXPECT_THROW(OrderClusters(m, std::span<const ReferenceSample>(missing_stage)), Error);
}

TEST(OrderClusters, JsonRoundTrip) {
  const MaturityMap map = OrderClusters(ModelWithMeanA({1.0, -1.0, 3.0, 2.0}), std::nullopt);
  const MaturityMap back = MaturityFromJson(MaturityToJson(map));
  EXPECT_EQ(back.cluster_to_stage, map.cluster_to_stage);
  EXPECT_EQ(back.stage_names, map.stage_names);
  EXPECT_THROW(MaturityFromJson(R"({"cluster_to_stage": [0, 0], "stage_names": ["a", "b"]})"),
               Error);
}

TEST(Pca, MatchesCovarianceEigenvalues) {
  std::mt19937_64 gen(10);
  Rows rows;
  const int d = 200;
  for (int i = 0; i < 50; ++i) {
    std::vector<float> r(d);
    const double t = testing::Unit(gen) * 10, u = testing::Unit(gen) * 3;
    for (int j = 0; j < d; ++j) {
      r[j] = static_cast<float>(t * std::sin(j * 0.1) + u * std::cos(j * 0.37) +
                                testing::Unit(gen) * 0.1);
    }
    rows.push_back(std::move(r));
  }
  std::vector<int> labels(rows.size(), 0);
  const PcaProjection p = PcaProject(rows, labels);
  const auto eig = testing::CovarianceTopEigenvalues(ToDouble(rows), 2);
  EXPECT_NEAR(p.explained_variance[0], eig[0], 1e-6 * eig[0]);
  EXPECT_NEAR(p.explained_variance[1], eig[1], 1e-6 * eig[0]);

  double n0 = 0, n1 = 0, dot = 0;
  for (int j = 0; j < d; ++j) {
    n0 += p.components[0][j] * p.components[0][j];
    n1 += p.components[1][j] * p.components[1][j];
    dot += p.components[0][j] * p.components[1][j];
  }
  EXPECT_NEAR(n0, 1.0, 1e-9);
  EXPECT_NEAR(n1, 1.0, 1e-9);
  EXPECT_NEAR(dot, 0.0, 1e-9);

  // Projected points have the explained variance along each axis.
  double s0 = 0, s1 = 0;
  for (const auto& pt : p.points) {
    s0 += pt[0] * pt[0];
    s1 += pt[1] * pt[1];
  }
  EXPECT_NEAR(s0 / (rows.size() - 1), p.explained_variance[0], 1e-6 * eig[0]);
  EXPECT_NEAR(s1 / (rows.size() - 1), p.explained_variance[1], 1e-6 * eig[0]);
}

TEST(Pca, TallDataUsesCovarianceRoute) {
  std::mt19937_64 gen(12);
  Rows rows;
  for (int i = 0; i < 60; ++i) {
    const double t = testing::Unit(gen) * 4;
    rows.push_back({static_cast<float>(t), static_cast<float>(2 * t),
                    static_cast<float>(testing::Unit(gen) * 0.1)});
  }
  std::vector<int> labels(rows.size(), 1);
  const PcaProjection p = PcaProject(rows, labels);
  const auto eig = testing::CovarianceTopEigenvalues(ToDouble(rows), 2);
  EXPECT_NEAR(p.explained_variance[0], eig[0], 1e-9 * eig[0]);
  EXPECT_NEAR(p.explained_variance[1], eig[1], 1e-9 * eig[0]);
  EXPECT_GT(p.components[0][1], 0.0);
  EXPECT_NEAR(p.components[0][1] / p.components[0][0], 2.0, 1e-3);
}

TEST(Pca, Errors) {
  const Rows two = {{1, 2}, {3, 4}};
  std::vector<int> labels2 = {0, 0};
  EXPECT_THROW(PcaProject(two, labels2), Error);
  const Rows same = {{1, 2}, {1, 2}, {1, 2}};
  std::vector<int> labels3 = {0, 0, 0};
  try {
    PcaProject(same, labels3);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kDegenerateData);
  }
}

TEST(Pca, CsvHasOneRowPerPoint) {
  const Rows rows = {{0, 0}, {1, 0}, {0, 2}, {3, 3}};
  std::vector<int> labels = {0, 1, 0, 1};
  const PcaProjection p = PcaProject(rows, labels);
  const std::string csv = PcaToCsv(p, nullptr);
  EXPECT_EQ(csv.rfind("x,y,cluster,stage\n", 0), 0u);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 5);
}

}  // namespace
}  // namespace coffeelab
