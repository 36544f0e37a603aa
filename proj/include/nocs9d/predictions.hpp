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
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include <fmt/format.h>

#include "nocs9d/bop_io.hpp"
#include "nocs9d/core_geometry.hpp"

// Prediction interchange file (CSV):
//
//   # nocs9d predictions v1
//   scene_id,image_id,inst_id,obj_id,status,r00,...,r22,tx_mm,ty_mm,tz_mm,
//   sx_mm,sy_mm,sz_mm,rms_mm,inliers,message
//
// R is row-major object-to-camera. FAILED rows leave the numeric fields
// empty and carry the reason in `message`. Rows are sorted by
// (scene_id, image_id, inst_id).

namespace nocs9d {

inline constexpr const char* kPredictionsVersionLine = "# nocs9d predictions v1";
inline constexpr const char* kPredictionsHeader =
    "scene_id,image_id,inst_id,obj_id,status,r00,r01,r02,r10,r11,r12,r20,r21,r22,"
    "tx_mm,ty_mm,tz_mm,sx_mm,sy_mm,sz_mm,rms_mm,inliers,message";

struct PredictionRow {
  int scene_id = 0;
  int image_id = 0;
  int inst_id = 0;
  int obj_id = 0;
  std::optional<Pose9D> pose;  // empty: FAILED
  double rms = 0.0;            // meters
  std::size_t inliers = 0;
  std::string message;

  auto key() const { return std::tuple(scene_id, image_id, inst_id); }
};

namespace detail {

inline std::string csv_clean(std::string s) {
  std::replace(s.begin(), s.end(), ',', ';');
  std::replace(s.begin(), s.end(), '\n', ' ');
  return s;
}

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace detail

inline void write_predictions(const std::filesystem::path& path, std::vector<PredictionRow> rows) {
  std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.key() < b.key(); });
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write '" + path.string() + "'");
  out << kPredictionsVersionLine << '\n' << kPredictionsHeader << '\n';
  for (const auto& r : rows) {
    out << fmt::format("{},{},{},{},{}", r.scene_id, r.image_id, r.inst_id, r.obj_id,
                       r.pose ? "OK" : "FAILED");
    if (r.pose) {
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) out << fmt::format(",{:.17g}", r.pose->rotation(i, j));
      for (int i = 0; i < 3; ++i) out << fmt::format(",{:.17g}", bop::m_to_mm(r.pose->translation(i)));
      for (int i = 0; i < 3; ++i) out << fmt::format(",{:.17g}", bop::m_to_mm(r.pose->scale(i)));
      out << fmt::format(",{:.17g},{}", bop::m_to_mm(r.rms), r.inliers);
    } else {
      out << std::string(17, ',');
    }
    out << ',' << detail::csv_clean(r.message) << '\n';
  }
  if (!out) throw Error(ErrorCode::kIo, "write failed for '" + path.string() + "'");
}

inline std::vector<PredictionRow> read_predictions(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kParse, "cannot read '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line) || line != kPredictionsVersionLine) {
    throw Error(ErrorCode::kParse, "'" + path.string() + "': missing version line '" +
                                       kPredictionsVersionLine + "'");
  }
  if (!std::getline(in, line) || line != kPredictionsHeader) {
    throw Error(ErrorCode::kParse, "'" + path.string() + "': unexpected header");
  }
  std::vector<PredictionRow> rows;
  int lineno = 2;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto f = detail::split_csv(line);
    if (f.size() != 23) {
      throw Error(ErrorCode::kParse, fmt::format("'{}' line {}: expected 23 fields, got {}",
                                                 path.string(), lineno, f.size()));
    }
    try {
      PredictionRow r;
      r.scene_id = std::stoi(f[0]);
      r.image_id = std::stoi(f[1]);
      r.inst_id = std::stoi(f[2]);
      r.obj_id = std::stoi(f[3]);
      r.message = f[22];
      if (f[4] == "OK") {
        Pose9D p;
        for (int i = 0; i < 9; ++i) p.rotation(i / 3, i % 3) = std::stod(f[5 + i]);
        for (int i = 0; i < 3; ++i) p.translation(i) = bop::mm_to_m(std::stod(f[14 + i]));
        for (int i = 0; i < 3; ++i) p.scale(i) = bop::mm_to_m(std::stod(f[17 + i]));
        r.rms = bop::mm_to_m(std::stod(f[20]));
        r.inliers = static_cast<std::size_t>(std::stoull(f[21]));
        r.pose = p;
      } else if (f[4] != "FAILED") {
        throw std::invalid_argument("status");
      }
      rows.push_back(std::move(r));
    } catch (const std::exception&) {
      throw Error(ErrorCode::kParse,
                  fmt::format("'{}' line {}: malformed row", path.string(), lineno));
    }
  }
  return rows;
}

}  // namespace nocs9d
