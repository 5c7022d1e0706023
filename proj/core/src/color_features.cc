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

#include "coffeelab/color_features.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>

#include "coffeelab/error.h"
#include "coffeelab/fs_util.h"

namespace coffeelab {
namespace {

// sRGB -> XYZ (D65). The reference white is the image of (1, 1, 1) under the
// same matrix so neutral inputs land on a* = b* = 0.
constexpr double kM[3][3] = {
    {0.4124564, 0.3575761, 0.1804375},
    {0.2126729, 0.7151522, 0.0721750},
    {0.0193339, 0.1191920, 0.9503041},
};
constexpr double kWhiteX = kM[0][0] + kM[0][1] + kM[0][2];
constexpr double kWhiteY = kM[1][0] + kM[1][1] + kM[1][2];
constexpr double kWhiteZ = kM[2][0] + kM[2][1] + kM[2][2];

constexpr double kDelta = 6.0 / 29.0;

struct LinearTable {
  double v[256];
  LinearTable() {
    for (int i = 0; i < 256; ++i) {
      const double c = i / 255.0;
      v[i] = c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
    }
  }
};

const LinearTable& Linear() {
  static const LinearTable table;
  return table;
}

double LabF(double t) {
  if (t > kDelta * kDelta * kDelta) return std::cbrt(t);
  return t / (3.0 * kDelta * kDelta) + 4.0 / 29.0;
}

void PutU32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void PutU64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> d) : data_(d) {}

  std::uint64_t Uint(int bytes) {
    Need(static_cast<size_t>(bytes));
    std::uint64_t v = 0;
    for (int i = 0; i < bytes; ++i) {
      v |= static_cast<std::uint64_t>(data_[pos_ + i]) << (8 * i);
    }
    pos_ += static_cast<size_t>(bytes);
    return v;
  }

  std::span<const std::uint8_t> Bytes(size_t n) {
    Need(n);
    auto s = data_.subspan(pos_, n);
    pos_ += n;
    return s;
  }

  bool done() const { return pos_ == data_.size(); }

 private:
  void Need(size_t n) const {
    if (data_.size() - pos_ < n) {
      throw Error(ErrorKind::kBadFile, "feature store truncated");
    }
  }

  std::span<const std::uint8_t> data_;
  size_t pos_ = 0;
};

}  // namespace

PixelPatch CropResize(const RgbImage& image, const NormalizedBox& box) {
  if (image.empty()) throw Error(ErrorKind::kDegenerateBox, "empty image");
  const double W = image.width();
  const double H = image.height();
  const double rx0 = std::clamp(box.x0() * W, 0.0, W);
  const double rx1 = std::clamp(box.x1() * W, 0.0, W);
  const double ry0 = std::clamp(box.y0() * H, 0.0, H);
  const double ry1 = std::clamp(box.y1() * H, 0.0, H);
  if (rx1 - rx0 < 1.0 || ry1 - ry0 < 1.0) {
    throw Error(ErrorKind::kDegenerateBox,
                "region smaller than one pixel after clamping");
  }
  const double step_x = (rx1 - rx0) / kPatchSize;
  const double step_y = (ry1 - ry0) / kPatchSize;
  const double max_x = image.width() - 1;
  const double max_y = image.height() - 1;

  // Pixel centers of the output map onto the region with half-pixel offsets,
  // so a same-size region reproduces the source exactly.
  int xs0[kPatchSize], xs1[kPatchSize];
  double fxs[kPatchSize];
  for (int i = 0; i < kPatchSize; ++i) {
    const double sx = std::clamp(rx0 + (i + 0.5) * step_x - 0.5, 0.0, max_x);
    xs0[i] = static_cast<int>(std::floor(sx));
    xs1[i] = std::min(xs0[i] + 1, image.width() - 1);
    fxs[i] = sx - xs0[i];
  }

  PixelPatch patch;
  for (int j = 0; j < kPatchSize; ++j) {
    const double sy = std::clamp(ry0 + (j + 0.5) * step_y - 0.5, 0.0, max_y);
    const int y0 = static_cast<int>(std::floor(sy));
    const int y1 = std::min(y0 + 1, image.height() - 1);
    const double fy = sy - y0;
    for (int i = 0; i < kPatchSize; ++i) {
      const Rgb p00 = image.at(xs0[i], y0);
      const Rgb p10 = image.at(xs1[i], y0);
      const Rgb p01 = image.at(xs0[i], y1);
      const Rgb p11 = image.at(xs1[i], y1);
      const double fx = fxs[i];
      Rgb out;
      for (int c = 0; c < 3; ++c) {
        const double top = p00[c] + (p10[c] - p00[c]) * fx;
        const double bottom = p01[c] + (p11[c] - p01[c]) * fx;
        const double v = top + (bottom - top) * fy;
        out[c] = static_cast<std::uint8_t>(
            std::clamp(std::floor(v + 0.5), 0.0, 255.0));
      }
      patch.pixels[j * kPatchSize + i] = out;
    }
  }
  return patch;
}

Lab RgbToLab(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  const LinearTable& lin = Linear();
  const double lr = lin.v[r], lg = lin.v[g], lb = lin.v[b];
  const double x = kM[0][0] * lr + kM[0][1] * lg + kM[0][2] * lb;
  const double y = kM[1][0] * lr + kM[1][1] * lg + kM[1][2] * lb;
  const double z = kM[2][0] * lr + kM[2][1] * lg + kM[2][2] * lb;
  const double fx = LabF(x / kWhiteX);
  const double fy = LabF(y / kWhiteY);
  const double fz = LabF(z / kWhiteZ);
  return {116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)};
}

AbFeature ExtractAb(const PixelPatch& patch) {
  AbFeature f;
  f.values.resize(kFeatureDim);
  for (int i = 0; i < kPatchPixels; ++i) {
    const Lab lab = RgbToLab(patch.pixels[i]);
    f.values[i] = static_cast<float>(lab.a);
    f.values[kPatchPixels + i] = static_cast<float>(lab.b);
  }
  return f;
}

std::vector<AbFeature> ExtractImageFeatures(const RgbImage& image,
                                            const LabelFile& labels,
                                            std::vector<int>* skipped) {
  std::vector<AbFeature> out;
  out.reserve(labels.boxes.size());
  for (size_t i = 0; i < labels.boxes.size(); ++i) {
    PixelPatch patch;
    try {
      patch = CropResize(image, labels.boxes[i]);
    } catch (const Error& e) {
      if (skipped == nullptr || e.kind() != ErrorKind::kDegenerateBox) throw;
      skipped->push_back(static_cast<int>(i));
      continue;
    }
    AbFeature f = ExtractAb(patch);
    f.source_image_id = labels.image_id;
    f.source_box_index = static_cast<int>(i);
    out.push_back(std::move(f));
  }
  return out;
}

std::vector<std::uint8_t> SerializeFeatureStore(
    std::span<const AbFeature> features) {
  std::vector<std::uint8_t> out;
  out.reserve(20 + features.size() * (kFeatureDim * 4 + 32));
  for (char c : {'A', 'B', 'F', 'T'}) out.push_back(static_cast<std::uint8_t>(c));
  PutU32(out, kFeatureStoreVersion);
  PutU64(out, features.size());
  PutU32(out, kFeatureDim);
  for (const AbFeature& f : features) {
    if (f.values.size() != static_cast<size_t>(kFeatureDim)) {
      throw Error(ErrorKind::kDimensionMismatch,
                  "feature of length " + std::to_string(f.values.size()));
    }
    PutU32(out, static_cast<std::uint32_t>(f.source_image_id.size()));
    out.insert(out.end(), f.source_image_id.begin(), f.source_image_id.end());
    PutU32(out, static_cast<std::uint32_t>(f.source_box_index));
    for (float v : f.values) PutU32(out, std::bit_cast<std::uint32_t>(v));
  }
  return out;
}

std::vector<AbFeature> ParseFeatureStore(std::span<const std::uint8_t> data) {
  Reader in(data);
  auto magic = in.Bytes(4);
  if (std::memcmp(magic.data(), "ABFT", 4) != 0) {
    throw Error(ErrorKind::kBadFile, "feature store magic mismatch");
  }
  const auto version = in.Uint(4);
  if (version != kFeatureStoreVersion) {
    throw Error(ErrorKind::kBadFile,
                "unsupported feature store version " + std::to_string(version));
  }
  const auto count = in.Uint(8);
  const auto dim = in.Uint(4);
  if (dim != static_cast<std::uint64_t>(kFeatureDim)) {
    throw Error(ErrorKind::kDimensionMismatch,
                "feature store dim " + std::to_string(dim));
  }
  std::vector<AbFeature> out;
  out.reserve(static_cast<size_t>(std::min<std::uint64_t>(count, 1u << 20)));
  for (std::uint64_t r = 0; r < count; ++r) {
    AbFeature f;
    const auto id_len = in.Uint(4);
    auto id = in.Bytes(static_cast<size_t>(id_len));
    f.source_image_id.assign(id.begin(), id.end());
    f.source_box_index = static_cast<int>(in.Uint(4));
    f.values.resize(kFeatureDim);
    for (float& v : f.values) {
      v = std::bit_cast<float>(static_cast<std::uint32_t>(in.Uint(4)));
    }
    out.push_back(std::move(f));
  }
  if (!in.done()) throw Error(ErrorKind::kBadFile, "trailing bytes in store");
  return out;
}

void WriteFeatureStore(const std::filesystem::path& path,
                       std::span<const AbFeature> features) {
  auto bytes = SerializeFeatureStore(features);
  WriteFileAtomic(path, std::string_view(
                            reinterpret_cast<const char*>(bytes.data()),
                            bytes.size()));
}

std::vector<AbFeature> ReadFeatureStore(const std::filesystem::path& path) {
  return ParseFeatureStore(ReadBinaryFile(path));
}

}  // namespace coffeelab
