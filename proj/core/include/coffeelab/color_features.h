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

#ifndef COFFEELAB_COLOR_FEATURES_H_
#define COFFEELAB_COLOR_FEATURES_H_

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "coffeelab/annotation_io.h"
#include "coffeelab/image.h"

namespace coffeelab {

inline constexpr int kPatchSize = 28;
inline constexpr int kPatchPixels = kPatchSize * kPatchSize;  // 784
inline constexpr int kFeatureDim = 2 * kPatchPixels;          // 1568

// A 28x28 RGB crop, row-major.
struct PixelPatch {
  std::array<Rgb, kPatchPixels> pixels{};

  Rgb at(int x, int y) const { return pixels[y * kPatchSize + x]; }
};

struct Lab {
  double l = 0.0;
  double a = 0.0;
  double b = 0.0;
};

// Chroma feature of one crop. Planar layout: values[0..783] are a* in
// row-major order, values[784..1567] are b* in the same order. L* is dropped.
struct AbFeature {
  std::vector<float> values;
  std::string source_image_id;
  int source_box_index = 0;
};

// Denormalizes the box against the image, clamps to the image bounds and
// bilinearly resamples to 28x28 using pixel-center alignment. Throws
// DegenerateBox when the clamped region is thinner than one pixel.
PixelPatch CropResize(const RgbImage& image, const NormalizedBox& box);

// sRGB (IEC 61966-2-1 transfer curve) to CIELAB, D65 white, 2 degree observer.
Lab RgbToLab(std::uint8_t r, std::uint8_t g, std::uint8_t b);
inline Lab RgbToLab(Rgb c) { return RgbToLab(c[0], c[1], c[2]); }

AbFeature ExtractAb(const PixelPatch& patch);

// Crop + extract for every box of one labeled image, in box order. Boxes that
// raise DegenerateBox are reported through `skipped` (box indices) when
// non-null, otherwise the error propagates.
std::vector<AbFeature> ExtractImageFeatures(const RgbImage& image,
                                            const LabelFile& labels,
                                            std::vector<int>* skipped);

// Feature store: "ABFT" | u32 version | u64 count | u32 dim, then per record
// u32 id_len | id bytes | u32 box_index | dim x f32. All little-endian.
inline constexpr std::uint32_t kFeatureStoreVersion = 1;

std::vector<std::uint8_t> SerializeFeatureStore(
    std::span<const AbFeature> features);
std::vector<AbFeature> ParseFeatureStore(std::span<const std::uint8_t> data);
void WriteFeatureStore(const std::filesystem::path& path,
                       std::span<const AbFeature> features);
std::vector<AbFeature> ReadFeatureStore(const std::filesystem::path& path);

}  // namespace coffeelab

#endif  // COFFEELAB_COLOR_FEATURES_H_
