// Copyright 2026 The nocs9d Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#pragma once

#include <csetjmp>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <png.h>

#include "nocs9d/error.hpp"

namespace nocs9d::png {

/// Decoded grayscale or RGB image, 8 or 16 bits per sample, samples
/// interleaved row-major.
struct PngImage {
  int width = 0;
  int height = 0;
  int channels = 1;
  int bit_depth = 8;
  std::vector<std::uint16_t> samples;
};

namespace detail {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

inline FilePtr open(const std::filesystem::path& path, const char* mode) {
  FilePtr f(std::fopen(path.c_str(), mode));
  if (!f) throw Error(ErrorCode::kIo, "cannot open '" + path.string() + "'");
  return f;
}

}  // namespace detail

inline void write(const std::filesystem::path& path, const PngImage& img) {
  if (img.channels != 1 && img.channels != 3) {
    throw Error(ErrorCode::kInvalidArgument, "png: only 1 or 3 channels supported");
  }
  if (img.bit_depth != 8 && img.bit_depth != 16) {
    throw Error(ErrorCode::kInvalidArgument, "png: bit depth must be 8 or 16");
  }
  const std::size_t row_samples = static_cast<std::size_t>(img.width) * img.channels;
  if (img.samples.size() != row_samples * img.height) {
    throw Error(ErrorCode::kDimension, "png: sample count does not match size");
  }
  const int bytes = img.bit_depth / 8;
  std::vector<png_byte> rowbuf(row_samples * bytes);

  auto file = detail::open(path, "wb");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorCode::kIo, "png: cannot allocate writer");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorCode::kIo, "png: write failed for '" + path.string() + "'");
  }
  png_init_io(png, file.get());
  png_set_compression_level(png, 1);
  png_set_IHDR(png, info, static_cast<png_uint_32>(img.width),
               static_cast<png_uint_32>(img.height), img.bit_depth,
               img.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < img.height; ++y) {
    const std::uint16_t* src = img.samples.data() + row_samples * y;
    for (std::size_t i = 0; i < row_samples; ++i) {
      if (bytes == 2) {
        rowbuf[2 * i] = static_cast<png_byte>(src[i] >> 8);  // big-endian
        rowbuf[2 * i + 1] = static_cast<png_byte>(src[i] & 0xff);
      } else {
        rowbuf[i] = static_cast<png_byte>(src[i]);
      }
    }
    png_write_row(png, rowbuf.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

inline PngImage read(const std::filesystem::path& path) {
  auto file = detail::open(path, "rb");
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(ErrorCode::kIo, "png: cannot allocate reader");
  }
  PngImage img;
  std::vector<png_byte> rowbuf;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(ErrorCode::kParse, "png: cannot decode '" + path.string() + "'");
  }
  png_init_io(png, file.get());
  png_read_info(png, info);
  const int color = png_get_color_type(png, info);
  int depth = png_get_bit_depth(png, info);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  png_read_update_info(png, info);

  img.width = static_cast<int>(png_get_image_width(png, info));
  img.height = static_cast<int>(png_get_image_height(png, info));
  img.channels = png_get_channels(png, info);
  img.bit_depth = depth = png_get_bit_depth(png, info);
  const std::size_t row_samples = static_cast<std::size_t>(img.width) * img.channels;
  rowbuf.resize(png_get_rowbytes(png, info));
  img.samples.resize(row_samples * img.height);
  for (int y = 0; y < img.height; ++y) {
    png_read_row(png, rowbuf.data(), nullptr);
    std::uint16_t* dst = img.samples.data() + row_samples * y;
    for (std::size_t i = 0; i < row_samples; ++i) {
      dst[i] = depth == 16 ? static_cast<std::uint16_t>((rowbuf[2 * i] << 8) | rowbuf[2 * i + 1])
                           : rowbuf[i];
    }
  }
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return img;
}

}  // namespace nocs9d::png
