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

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>

#include "nocs9d/nocs.hpp"
#include "nocs9d/png_io.hpp"

// NOCS map files: 16-bit RGB PNG, sample = round(coordinate * 65535) per
// channel. Invalid pixels are stored as (0, 0, 0); a valid pixel that
// quantizes to (0, 0, 0) therefore reads back as invalid.

namespace nocs9d {

inline std::uint16_t quantize_nocs(double c) {
  return static_cast<std::uint16_t>(std::lround(std::clamp(c, 0.0, 1.0) * 65535.0));
}

inline double dequantize_nocs(std::uint16_t q) { return q / 65535.0; }

inline png::PngImage encode_nocs(const NocsMap& nocs) {
  png::PngImage img{nocs.width(), nocs.height(), 3, 16, {}};
  img.samples.assign(nocs.values.size() * 3, 0);
  for (std::size_t i = 0; i < nocs.values.size(); ++i) {
    if (!nocs.valid[i]) continue;
    for (int c = 0; c < 3; ++c) img.samples[3 * i + c] = quantize_nocs(nocs.values[i](c));
  }
  return img;
}

inline NocsMap decode_nocs(const png::PngImage& img) {
  if (img.channels != 3 || img.bit_depth != 16) {
    throw Error(ErrorCode::kParse, "NOCS PNG must be 16-bit RGB");
  }
  NocsMap nocs(img.width, img.height);
  for (std::size_t i = 0; i < nocs.values.size(); ++i) {
    const auto* s = &img.samples[3 * i];
    if (s[0] == 0 && s[1] == 0 && s[2] == 0) continue;
    nocs.values[i] = Vector3d(dequantize_nocs(s[0]), dequantize_nocs(s[1]), dequantize_nocs(s[2]));
    nocs.valid[i] = 1;
  }
  return nocs;
}

inline void write_nocs_png(const std::filesystem::path& path, const NocsMap& nocs) {
  png::write(path, encode_nocs(nocs));
}

inline NocsMap read_nocs_png(const std::filesystem::path& path) {
  return decode_nocs(png::read(path));
}

}  // namespace nocs9d
