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

#include "coffeelab/detector_backends.h"
#include "coffeelab/synth.h"

namespace coffeelab {
namespace {

void BM_DetectClassical(benchmark::State& state) {
  SeasonOptions o;
  o.days = 1;
  const Season season = GenerateSeason(o);
  const ClassicalSpec spec = DefaultDetectorSpec().classical;
  for (auto _ : state) benchmark::DoNotOptimize(DetectClassical(season.days[0].image, spec));
}
BENCHMARK(BM_DetectClassical)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace coffeelab
