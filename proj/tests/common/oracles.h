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

#ifndef COFFEELAB_TESTS_COMMON_ORACLES_H_
#define COFFEELAB_TESTS_COMMON_ORACLES_H_

// Slow, independent reference implementations used to check the library.

#include <optional>
#include <string>
#include <vector>

namespace coffeelab::testing {

struct Rect {
  double x0 = 0, y0 = 0, x1 = 0, y1 = 0;
};

double OracleIou(const Rect& a, const Rect& b);

struct OracleDet {
  std::string image;
  int category = 0;
  double confidence = 0.0;
  Rect box;
};

struct OracleGt {
  std::string image;
  int category = 0;
  Rect box;
};

// Enumerates every PR point by re-matching each confidence prefix from
// scratch, then integrates the precision envelope point by point.
std::optional<double> OracleAp(const std::vector<OracleDet>& dets,
                               const std::vector<OracleGt>& gts, int category,
                               double iou_threshold);

// Minimum k=2 inertia over all 2^n labelings (both clusters nonempty).
// Returns the optimum and one optimal labeling.
double BruteForceTwoMeans(const std::vector<std::vector<double>>& rows,
                          std::vector<int>* best_labels);

// Index of the nearest centroid by plain linear scan, ties to the lowest.
int LinearScanNearest(const std::vector<double>& x,
                      const std::vector<std::vector<double>>& centroids);

// Top two eigenvalues of the n-1 normalized covariance matrix, formed
// explicitly (d x d) and solved densely.
std::vector<double> CovarianceTopEigenvalues(const std::vector<std::vector<double>>& rows,
                                             int count);

}  // namespace coffeelab::testing

#endif  // COFFEELAB_TESTS_COMMON_ORACLES_H_
