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

#include "coffeelab/eval_metrics.h"

namespace coffeelab {
namespace {

NormalizedBox RandomBox(std::mt19937_64& gen, int categories) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double w = 0.02 + 0.2 * u(gen), h = 0.02 + 0.2 * u(gen);
  return {static_cast<int>(gen() % categories), w / 2 + (1 - w) * u(gen), h / 2 + (1 - h) * u(gen),
          w, h};
}

void BM_Iou(benchmark::State& state) {
  std::mt19937_64 gen(1);
  std::vector<NormalizedBox> boxes;
  for (int i = 0; i < 1024; ++i) boxes.push_back(RandomBox(gen, 1));
  size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(Iou(boxes[i & 1023], boxes[(i * 7 + 3) & 1023]));
    ++i;
  }
}
BENCHMARK(BM_Iou);

// Whole-report evaluation over `images` images of ~20 boxes each.
void BM_Evaluate(benchmark::State& state) {
  std::mt19937_64 gen(2);
  std::map<std::string, LabelFile> gt;
  std::map<std::string, PredictionFile> pred;
  for (int i = 0; i < state.range(0); ++i) {
    const std::string id = "img" + std::to_string(i);
    LabelFile& lf = gt[id];
    PredictionFile& pf = pred[id];
    for (int b = 0; b < 20; ++b) {
      const NormalizedBox box = RandomBox(gen, 5);
      lf.boxes.push_back(box);
      NormalizedBox p = box;
      p.cx = std::min(1 - p.w / 2, p.cx + 0.005);
      pf.entries.push_back({p, (gen() % 1000) / 1000.0});
    }
  }
  EvalOptions opt;
  opt.names = {"green", "green-yellow", "cherry", "raisin", "dry"};
  for (auto _ : state) benchmark::DoNotOptimize(Evaluate(pred, gt, opt));
  state.SetItemsProcessed(state.iterations() * state.range(0) * 20);
}
BENCHMARK(BM_Evaluate)->Arg(100)->Arg(1000);

}  // namespace
}  // namespace coffeelab
