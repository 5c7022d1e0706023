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

#ifndef COFFEELAB_TESTS_COMMON_TEST_SUPPORT_H_
#define COFFEELAB_TESTS_COMMON_TEST_SUPPORT_H_

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>

#include "coffeelab/annotation_io.h"

namespace coffeelab::testing {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

std::filesystem::path TestDataDir();

// Random valid box whose coordinates survive 6-decimal serialization exactly.
NormalizedBox RandomBox(std::mt19937_64& gen, int categories);
LabelFile RandomLabelFile(std::mt19937_64& gen, int max_boxes, int categories);
PredictionFile RandomPredictionFile(std::mt19937_64& gen, int max_boxes, int categories);

double Unit(std::mt19937_64& gen);

}  // namespace coffeelab::testing

#endif  // COFFEELAB_TESTS_COMMON_TEST_SUPPORT_H_
