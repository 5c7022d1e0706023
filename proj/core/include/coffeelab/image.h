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

#ifndef COFFEELAB_IMAGE_H_
#define COFFEELAB_IMAGE_H_

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace coffeelab {

using Rgb = std::array<std::uint8_t, 3>;

// 8-bit RGB raster, row-major, 3 bytes per pixel.
class RgbImage {
 public:
  RgbImage() = default;
  RgbImage(int width, int height, Rgb fill = {0, 0, 0});

  int width() const { return width_; }
  int height() const { return height_; }
  bool empty() const { return width_ == 0 || height_ == 0; }

  Rgb at(int x, int y) const {
    const std::uint8_t* p = &pixels_[Offset(x, y)];
    return {p[0], p[1], p[2]};
  }
  void set(int x, int y, Rgb c) {
    std::uint8_t* p = &pixels_[Offset(x, y)];
    p[0] = c[0];
    p[1] = c[1];
    p[2] = c[2];
  }

  std::span<const std::uint8_t> bytes() const { return pixels_; }
  std::span<std::uint8_t> mutable_bytes() { return pixels_; }

  bool operator==(const RgbImage&) const = default;

 private:
  size_t Offset(int x, int y) const {
    return (static_cast<size_t>(y) * static_cast<size_t>(width_) +
            static_cast<size_t>(x)) * 3;
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> pixels_;
};

// PNG or JPEG, sniffed from the magic bytes. Alpha is dropped, gray is
// expanded. Throws Error(ImageDecode).
RgbImage DecodeImage(std::span<const std::uint8_t> data);
RgbImage ReadImage(const std::filesystem::path& path);

std::vector<std::uint8_t> EncodePng(const RgbImage& image);
void WritePng(const std::filesystem::path& path, const RgbImage& image);

}  // namespace coffeelab

#endif  // COFFEELAB_IMAGE_H_
