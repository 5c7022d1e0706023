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

#include "coffeelab/image.h"

#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <string>

#include <jpeglib.h>
#include <png.h>

#include "coffeelab/error.h"
#include "coffeelab/fs_util.h"

namespace coffeelab {
namespace {

bool LooksLikePng(std::span<const std::uint8_t> d) {
  static constexpr std::uint8_t kSig[8] = {0x89, 'P', 'N', 'G',
                                           0x0D, 0x0A, 0x1A, 0x0A};
  return d.size() >= 8 && std::memcmp(d.data(), kSig, 8) == 0;
}

bool LooksLikeJpeg(std::span<const std::uint8_t> d) {
  return d.size() >= 3 && d[0] == 0xFF && d[1] == 0xD8 && d[2] == 0xFF;
}

RgbImage DecodePng(std::span<const std::uint8_t> data) {
  png_image img;
  std::memset(&img, 0, sizeof(img));
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&img, data.data(), data.size())) {
    throw Error(ErrorKind::kImageDecode, std::string("png: ") + img.message);
  }
  img.format = PNG_FORMAT_RGBA;
  if (img.width == 0 || img.height == 0 || img.width > 1u << 15 ||
      img.height > 1u << 15) {
    png_image_free(&img);
    throw Error(ErrorKind::kImageDecode, "png: unsupported dimensions");
  }
  std::vector<std::uint8_t> rgba(PNG_IMAGE_SIZE(img));
  if (!png_image_finish_read(&img, nullptr, rgba.data(), 0, nullptr)) {
    std::string msg = img.message;
    png_image_free(&img);
    throw Error(ErrorKind::kImageDecode, "png: " + msg);
  }
  // Alpha is dropped, not composited.
  RgbImage out(static_cast<int>(img.width), static_cast<int>(img.height));
  auto dst = out.mutable_bytes();
  for (size_t i = 0, j = 0; j < dst.size(); i += 4, j += 3) {
    dst[j] = rgba[i];
    dst[j + 1] = rgba[i + 1];
    dst[j + 2] = rgba[i + 2];
  }
  return out;
}

struct JpegErrorManager {
  jpeg_error_mgr pub;
  std::jmp_buf jump;
  char message[JMSG_LENGTH_MAX];
};

void JpegErrorExit(j_common_ptr cinfo) {
  auto* err = reinterpret_cast<JpegErrorManager*>(cinfo->err);
  (*cinfo->err->format_message)(cinfo, err->message);
  std::longjmp(err->jump, 1);
}

RgbImage DecodeJpeg(std::span<const std::uint8_t> data) {
  jpeg_decompress_struct cinfo;
  JpegErrorManager err;
  cinfo.err = jpeg_std_error(&err.pub);
  err.pub.error_exit = JpegErrorExit;
  // Only trivially destructible locals live across the setjmp boundary.
  RgbImage* volatile out = nullptr;
  if (setjmp(err.jump)) {
    jpeg_destroy_decompress(&cinfo);
    delete out;
    throw Error(ErrorKind::kImageDecode, std::string("jpeg: ") + err.message);
  }
  jpeg_create_decompress(&cinfo);
  jpeg_mem_src(&cinfo, data.data(), static_cast<unsigned long>(data.size()));
  jpeg_read_header(&cinfo, TRUE);
  cinfo.out_color_space = JCS_RGB;
  jpeg_start_decompress(&cinfo);
  out = new RgbImage(static_cast<int>(cinfo.output_width),
                     static_cast<int>(cinfo.output_height));
  auto bytes = out->mutable_bytes();
  const size_t stride = static_cast<size_t>(cinfo.output_width) * 3;
  while (cinfo.output_scanline < cinfo.output_height) {
    JSAMPROW row = bytes.data() + stride * cinfo.output_scanline;
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  RgbImage result = std::move(*out);
  delete out;
  return result;
}

}  // namespace

RgbImage::RgbImage(int width, int height, Rgb fill)
    : width_(width), height_(height) {
  pixels_.resize(static_cast<size_t>(width) * static_cast<size_t>(height) * 3);
  for (size_t i = 0; i < pixels_.size(); i += 3) {
    pixels_[i] = fill[0];
    pixels_[i + 1] = fill[1];
    pixels_[i + 2] = fill[2];
  }
}

RgbImage DecodeImage(std::span<const std::uint8_t> data) {
  if (LooksLikePng(data)) return DecodePng(data);
  if (LooksLikeJpeg(data)) return DecodeJpeg(data);
  throw Error(ErrorKind::kImageDecode, "not a PNG or JPEG stream");
}

RgbImage ReadImage(const std::filesystem::path& path) {
  return DecodeImage(ReadBinaryFile(path));
}

std::vector<std::uint8_t> EncodePng(const RgbImage& image) {
  png_image img;
  std::memset(&img, 0, sizeof(img));
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(image.width());
  img.height = static_cast<png_uint_32>(image.height());
  img.format = PNG_FORMAT_RGB;
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&img, nullptr, &size, 0, image.bytes().data(),
                                 0, nullptr)) {
    throw Error(ErrorKind::kIo, std::string("png encode: ") + img.message);
  }
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(&img, out.data(), &size, 0,
                                 image.bytes().data(), 0, nullptr)) {
    throw Error(ErrorKind::kIo, std::string("png encode: ") + img.message);
  }
  out.resize(size);
  return out;
}

void WritePng(const std::filesystem::path& path, const RgbImage& image) {
  auto bytes = EncodePng(image);
  WriteFileAtomic(path, std::string_view(
                            reinterpret_cast<const char*>(bytes.data()),
                            bytes.size()));
}

}  // namespace coffeelab
