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

#include <benchmark/benchmark.h>

#include <random>

#include "coffeelab/cluster_engine.h"

namespace coffeelab {
namespace {

std::vector<AbFeature> Blobs(int n) {
  std::mt19937_64 gen(4);
  std::normal_distribution<float> noise(0.0f, 4.0f);
  std::vector<AbFeature> out(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    const float a = -40.0f + 25.0f * static_cast<float>(i % 5);
    out[i].values.resize(kFeatureDim);
    for (int j = 0; j < kFeatureDim; ++j) out[i].values[j] = (j < kPatchPixels ? a : 30.0f) + noise(gen);
  }
  return out;
}

void BM_KMeansFit(benchmark::State& state) {
  const auto feats = Blobs(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(KMeansFit(feats, 5, 42));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_KMeansFit)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);

void BM_KMeansPredict(benchmark::State& state) {
  const auto feats = Blobs(500);
  const KMeansModel m = KMeansFit(feats, 5, 42);
  size_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(KMeansPredict(m, feats[i++ % feats.size()]));
}
BENCHMARK(BM_KMeansPredict);

void BM_Pca(benchmark::State& state) {
  const auto feats = Blobs(static_cast<int>(state.range(0)));
  std::vector<int> labels(feats.size(), 0);
  for (auto _ : state) benchmark::DoNotOptimize(PcaProject(feats, labels));
}
BENCHMARK(BM_Pca)->Arg(500)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace coffeelab
