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
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "nocs9d/core_geometry.hpp"
#include "nocs9d/nocs_io.hpp"
#include "nocs9d/png_io.hpp"
#include "nocs9d/symmetry.hpp"

// BOP scene layout:
//
//   <split>/<scene_id:06d>/scene_gt.json
//                         /scene_camera.json
//                         /depth/<image_id:06d>.png       uint16, mm / depth_scale
//                         /mask_visib/<image>_<inst>.png  8-bit, 255 = object
//                         /nocs/<image>_<inst>.png        NOCS sidecar (see nocs_io.hpp)
//   <root>/models/models_info.json
//   <root>/categories.json                                obj_id -> label sidecar
//
// Files are in millimeters; everything returned from here is in meters.

namespace nocs9d::bop {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

inline constexpr double kDefaultDepthScale = 0.1;

inline double mm_to_m(double mm) { return mm / 1000.0; }

/// Millimeter value that reads back (mm_to_m) as exactly `m`, so that
/// read∘write∘read is a fixed point.
inline double m_to_mm(double m) {
  double mm = m * 1000.0;
  if (!std::isfinite(mm) || mm_to_m(mm) == m) return mm;
  double up = mm;
  double down = mm;
  for (int i = 0; i < 8; ++i) {
    up = std::nextafter(up, HUGE_VAL);
    if (mm_to_m(up) == m) return up;
    down = std::nextafter(down, -HUGE_VAL);
    if (mm_to_m(down) == m) return down;
  }
  return mm;
}

struct GtInstance {
  int obj_id = 0;
  Matrix3d rotation = Matrix3d::Identity();
  Vector3d translation = Vector3d::Zero();  // meters

  friend bool operator==(const GtInstance&, const GtInstance&) = default;
};

struct SceneRecord {
  int scene_id = 0;
  int image_id = 0;
  fs::path rgb_path;    // relative to the scene directory
  fs::path depth_path;  // relative to the scene directory
  double depth_scale = kDefaultDepthScale;
  std::vector<fs::path> mask_paths;  // one per instance, relative
  std::vector<GtInstance> instances;
  CameraIntrinsics camera;
  DepthMap depth;
  std::vector<Mask> masks;

  friend bool operator==(const SceneRecord&, const SceneRecord&) = default;
};

struct ModelInfo {
  int obj_id = 0;
  double diameter = 0.0;  // meters
  Vector3d min = Vector3d::Zero();
  Vector3d size = Vector3d::Zero();
  SymmetryAnnotation symmetry;
};

struct CategoryLabel {
  std::string category;
  std::string description;
};

inline std::string id6(int id) { return fmt::format("{:06d}", id); }

inline fs::path scene_dir(const fs::path& split_root, int scene_id) {
  return split_root / id6(scene_id);
}

inline fs::path depth_rel(int image_id) { return fs::path("depth") / (id6(image_id) + ".png"); }
inline fs::path rgb_rel(int image_id) { return fs::path("rgb") / (id6(image_id) + ".png"); }
inline fs::path mask_rel(int image_id, int inst) {
  return fs::path("mask_visib") / (id6(image_id) + "_" + id6(inst) + ".png");
}
inline fs::path nocs_rel(int image_id, int inst) {
  return fs::path("nocs") / (id6(image_id) + "_" + id6(inst) + ".png");
}

namespace detail {

inline Json load_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kParse, "cannot read '" + path.string() + "'");
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParse, "'" + path.string() + "': " + e.what());
  }
}

inline void save_json(const fs::path& path, const Json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write '" + path.string() + "'");
  out << j.dump(2) << '\n';
  if (!out) throw Error(ErrorCode::kIo, "write failed for '" + path.string() + "'");
}

inline const Json& field(const Json& j, const std::string& key, const fs::path& file,
                         const std::string& where) {
  if (!j.is_object() || !j.contains(key)) {
    throw Error(ErrorCode::kParse,
                fmt::format("'{}': missing key '{}' in {}", file.string(), key, where));
  }
  return j.at(key);
}

template <int N>
Eigen::Matrix<double, N, 1> numbers(const Json& j, const fs::path& file, const std::string& key) {
  if (!j.is_array() || j.size() != N) {
    throw Error(ErrorCode::kParse,
                fmt::format("'{}': key '{}' must be an array of {} numbers", file.string(), key, N));
  }
  Eigen::Matrix<double, N, 1> v;
  for (int i = 0; i < N; ++i) {
    if (!j[i].is_number()) {
      throw Error(ErrorCode::kParse, fmt::format("'{}': key '{}' has a non-numeric entry",
                                                 file.string(), key));
    }
    v(i) = j[i].get<double>();
  }
  return v;
}

inline Matrix3d row_major3(const Eigen::Matrix<double, 9, 1>& v) {
  Matrix3d m;
  m << v(0), v(1), v(2), v(3), v(4), v(5), v(6), v(7), v(8);
  return m;
}

inline Json row_major_json(const Matrix3d& m) {
  Json a = Json::array();
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) a.push_back(m(r, c));
  return a;
}

inline Json mm_json(const Vector3d& m) {
  return Json::array({m_to_mm(m.x()), m_to_mm(m.y()), m_to_mm(m.z())});
}

inline int parse_id(const std::string& key, const fs::path& file) {
  try {
    std::size_t pos = 0;
    const int id = std::stoi(key, &pos);
    if (pos != key.size() || id < 0) throw std::invalid_argument(key);
    return id;
  } catch (const std::exception&) {
    throw Error(ErrorCode::kParse, fmt::format("'{}': key '{}' is not an integer id",
                                               file.string(), key));
  }
}

inline DepthMap load_depth(const fs::path& path, double depth_scale) {
  const auto img = png::read(path);
  if (img.channels != 1) throw Error(ErrorCode::kParse, "'" + path.string() + "': depth must be 1-channel");
  DepthMap d(img.width, img.height, 0.0);
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = mm_to_m(img.samples[i] * depth_scale);
  return d;
}

inline void save_depth(const fs::path& path, const DepthMap& depth, double depth_scale) {
  png::PngImage img{depth.width(), depth.height(), 1, 16, {}};
  img.samples.resize(depth.size());
  for (std::size_t i = 0; i < depth.size(); ++i) {
    const double q = std::round(depth[i] * 1000.0 / depth_scale);
    if (!(q >= 0.0) || q > 65535.0) {
      throw Error(ErrorCode::kIo, fmt::format("'{}': depth {} m not representable with "
                                              "depth_scale {}", path.string(), depth[i], depth_scale));
    }
    img.samples[i] = static_cast<std::uint16_t>(q);
  }
  png::write(path, img);
}

inline Mask load_mask(const fs::path& path) {
  const auto img = png::read(path);
  if (img.channels != 1) throw Error(ErrorCode::kParse, "'" + path.string() + "': mask must be 1-channel");
  Mask m(img.width, img.height, 0);
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = img.samples[i] != 0;
  return m;
}

inline void save_mask(const fs::path& path, const Mask& mask) {
  png::PngImage img{mask.width(), mask.height(), 1, 8, {}};
  img.samples.resize(mask.size());
  for (std::size_t i = 0; i < mask.size(); ++i) img.samples[i] = mask[i] ? 255 : 0;
  png::write(path, img);
}

}  // namespace detail

/// All images of one scene, ascending by image id.
inline std::vector<SceneRecord> read_scene(const fs::path& split_root, int scene_id) {
  const fs::path dir = scene_dir(split_root, scene_id);
  const fs::path gt_path = dir / "scene_gt.json";
  const fs::path cam_path = dir / "scene_camera.json";
  const Json gt = detail::load_json(gt_path);
  const Json cam = detail::load_json(cam_path);
  if (!gt.is_object() || !cam.is_object()) {
    throw Error(ErrorCode::kParse, "'" + dir.string() + "': scene files must hold JSON objects");
  }

  std::map<int, std::string> image_keys;
  for (const auto& [key, _] : gt.items()) image_keys[detail::parse_id(key, gt_path)] = key;
  for (const auto& [key, _] : cam.items()) {
    const int id = detail::parse_id(key, cam_path);
    if (!image_keys.count(id)) {
      throw Error(ErrorCode::kIntegrity,
                  fmt::format("'{}': image {} has a camera but no ground truth", dir.string(), id));
    }
  }

  std::vector<SceneRecord> records;
  for (const auto& [image_id, key] : image_keys) {
    if (!cam.contains(key)) {
      throw Error(ErrorCode::kIntegrity,
                  fmt::format("'{}': image {} has ground truth but no camera", dir.string(), image_id));
    }
    const std::string where = "image " + key;
    SceneRecord rec;
    rec.scene_id = scene_id;
    rec.image_id = image_id;
    const Json& c = cam.at(key);
    const Matrix3d k = detail::row_major3(
        detail::numbers<9>(detail::field(c, "cam_K", cam_path, where), cam_path, "cam_K"));
    rec.depth_scale = detail::field(c, "depth_scale", cam_path, where).get<double>();
    if (!(rec.depth_scale > 0.0)) {
      throw Error(ErrorCode::kValidation, fmt::format("'{}': {} depth_scale must be > 0",
                                                      cam_path.string(), where));
    }
    rec.rgb_path = rgb_rel(image_id);
    rec.depth_path = depth_rel(image_id);
    rec.depth = detail::load_depth(dir / rec.depth_path, rec.depth_scale);
    rec.camera = {k(0, 0), k(1, 1), k(0, 2), k(1, 2), rec.depth.width(), rec.depth.height()};
    if (!rec.camera.valid()) {
      throw Error(ErrorCode::kValidation,
                  fmt::format("'{}': {} cam_K is not a valid camera", cam_path.string(), where));
    }

    const Json& insts = gt.at(key);
    if (!insts.is_array()) {
      throw Error(ErrorCode::kParse, fmt::format("'{}': {} must be a list", gt_path.string(), where));
    }
    for (std::size_t i = 0; i < insts.size(); ++i) {
      const std::string iw = fmt::format("{} instance {}", where, i);
      GtInstance inst;
      inst.obj_id = detail::field(insts[i], "obj_id", gt_path, iw).get<int>();
      inst.rotation = detail::row_major3(detail::numbers<9>(
          detail::field(insts[i], "cam_R_m2c", gt_path, iw), gt_path, "cam_R_m2c"));
      if (!is_rotation(inst.rotation)) {
        throw Error(ErrorCode::kValidation,
                    fmt::format("'{}': {} cam_R_m2c is not a rotation", gt_path.string(), iw));
      }
      const Vector3d t_mm = detail::numbers<3>(detail::field(insts[i], "cam_t_m2c", gt_path, iw),
                                               gt_path, "cam_t_m2c");
      inst.translation = t_mm.unaryExpr([](double v) { return mm_to_m(v); });
      const fs::path mrel = mask_rel(image_id, static_cast<int>(i));
      if (!fs::exists(dir / mrel)) {
        throw Error(ErrorCode::kIntegrity,
                    fmt::format("'{}': missing mask for {} (obj_id {}): {}", dir.string(), iw,
                                inst.obj_id, mrel.string()));
      }
      Mask m = detail::load_mask(dir / mrel);
      require_same_size(m, rec.depth, "mask/depth");
      rec.instances.push_back(inst);
      rec.mask_paths.push_back(mrel);
      rec.masks.push_back(std::move(m));
    }
    records.push_back(std::move(rec));
  }
  return records;
}

/// Writes the scene files, depth and mask PNGs for `records` (all sharing
/// scene_id) into <split_root>/<scene_id>.
inline void write_scene(const std::vector<SceneRecord>& records, const fs::path& split_root,
                        int scene_id) {
  const fs::path dir = scene_dir(split_root, scene_id);
  std::error_code ec;
  fs::create_directories(dir / "depth", ec);
  fs::create_directories(dir / "mask_visib", ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot create '" + dir.string() + "': " + ec.message());

  std::vector<const SceneRecord*> sorted;
  for (const auto& r : records) {
    if (r.scene_id != scene_id) {
      throw Error(ErrorCode::kInvalidArgument, "write_scene: record from another scene");
    }
    if (r.masks.size() != r.instances.size()) {
      throw Error(ErrorCode::kIntegrity,
                  fmt::format("image {}: {} masks for {} instances", r.image_id, r.masks.size(),
                              r.instances.size()));
    }
    sorted.push_back(&r);
  }
  std::sort(sorted.begin(), sorted.end(),
            [](const auto* a, const auto* b) { return a->image_id < b->image_id; });

  Json gt = Json::object();
  Json cam = Json::object();
  for (const SceneRecord* r : sorted) {
    const std::string key = std::to_string(r->image_id);
    Json insts = Json::array();
    for (const auto& inst : r->instances) {
      Json e = Json::object();
      e["cam_R_m2c"] = detail::row_major_json(inst.rotation);
      e["cam_t_m2c"] = detail::mm_json(inst.translation);
      e["obj_id"] = inst.obj_id;
      insts.push_back(std::move(e));
    }
    gt[key] = std::move(insts);
    Json c = Json::object();
    c["cam_K"] = detail::row_major_json(r->camera.matrix());
    c["depth_scale"] = r->depth_scale;
    cam[key] = std::move(c);

    detail::save_depth(dir / depth_rel(r->image_id), r->depth, r->depth_scale);
    for (std::size_t i = 0; i < r->masks.size(); ++i) {
      detail::save_mask(dir / mask_rel(r->image_id, static_cast<int>(i)), r->masks[i]);
    }
  }
  detail::save_json(dir / "scene_gt.json", gt);
  detail::save_json(dir / "scene_camera.json", cam);
}

inline void write_nocs(const fs::path& split_root, int scene_id, int image_id, int inst,
                       const NocsMap& nocs) {
  const fs::path path = scene_dir(split_root, scene_id) / nocs_rel(image_id, inst);
  std::error_code ec;
  fs::create_directories(path.parent_path(), ec);
  write_nocs_png(path, nocs);
}

inline NocsMap read_nocs(const fs::path& split_root, int scene_id, int image_id, int inst) {
  const fs::path path = scene_dir(split_root, scene_id) / nocs_rel(image_id, inst);
  if (!fs::exists(path)) {
    throw Error(ErrorCode::kIo, "missing NOCS sidecar '" + path.string() + "'");
  }
  return read_nocs_png(path);
}

/// Scene ids (numeric directory names) under a split, ascending.
inline std::vector<int> list_scenes(const fs::path& split_root) {
  std::vector<int> ids;
  if (!fs::is_directory(split_root)) {
    throw Error(ErrorCode::kIo, "not a directory: '" + split_root.string() + "'");
  }
  for (const auto& e : fs::directory_iterator(split_root)) {
    if (!e.is_directory()) continue;
    const std::string name = e.path().filename().string();
    if (name.empty() || !std::all_of(name.begin(), name.end(), ::isdigit)) continue;
    ids.push_back(std::stoi(name));
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

inline std::map<int, ModelInfo> read_models_info(const fs::path& path) {
  const Json j = detail::load_json(path);
  if (!j.is_object()) throw Error(ErrorCode::kParse, "'" + path.string() + "': expected an object");
  std::map<int, ModelInfo> out;
  for (const auto& [key, e] : j.items()) {
    const std::string where = "obj " + key;
    ModelInfo info;
    info.obj_id = detail::parse_id(key, path);
    info.diameter = mm_to_m(detail::field(e, "diameter", path, where).get<double>());
    for (int a = 0; a < 3; ++a) {
      const char axis = "xyz"[a];
      info.min(a) = mm_to_m(detail::field(e, std::string("min_") + axis, path, where).get<double>());
      info.size(a) = mm_to_m(detail::field(e, std::string("size_") + axis, path, where).get<double>());
    }
    if (!(info.size.array() > 0.0).all()) {
      throw Error(ErrorCode::kValidation, fmt::format("'{}': {} has non-positive size", path.string(), where));
    }
    if (e.contains("symmetries_discrete")) {
      for (const auto& s : e.at("symmetries_discrete")) {
        const auto v = detail::numbers<16>(s, path, "symmetries_discrete");
        DiscreteSymmetry d;
        for (int r = 0; r < 3; ++r)
          for (int c = 0; c < 3; ++c) d.rotation(r, c) = v(4 * r + c);
        d.translation = Vector3d(mm_to_m(v(3)), mm_to_m(v(7)), mm_to_m(v(11)));
        if (!is_rotation(d.rotation)) {
          throw Error(ErrorCode::kValidation,
                      fmt::format("'{}': {} has a non-orthonormal discrete symmetry", path.string(), where));
        }
        info.symmetry.discrete.push_back(d);
      }
    }
    if (e.contains("symmetries_continuous")) {
      for (const auto& s : e.at("symmetries_continuous")) {
        ContinuousSymmetry c;
        c.axis = detail::numbers<3>(detail::field(s, "axis", path, where), path, "axis");
        c.offset = detail::numbers<3>(detail::field(s, "offset", path, where), path, "offset")
                       .unaryExpr([](double v) { return mm_to_m(v); });
        const double norm = c.axis.norm();
        if (!(norm > 0.0)) {
          throw Error(ErrorCode::kValidation, fmt::format("'{}': {} has a zero symmetry axis", path.string(), where));
        }
        if (std::abs(norm - 1.0) > kRotationTolerance) {
          spdlog::warn("{}: {} continuous symmetry axis has norm {}; normalizing", path.string(), where, norm);
          c.axis /= norm;
        }
        info.symmetry.continuous.push_back(c);
      }
    }
    out[info.obj_id] = std::move(info);
  }
  return out;
}

inline void write_models_info(const fs::path& path, const std::map<int, ModelInfo>& models) {
  Json j = Json::object();
  for (const auto& [id, info] : models) {
    Json e = Json::object();
    e["diameter"] = m_to_mm(info.diameter);
    e["min_x"] = m_to_mm(info.min.x());
    e["min_y"] = m_to_mm(info.min.y());
    e["min_z"] = m_to_mm(info.min.z());
    e["size_x"] = m_to_mm(info.size.x());
    e["size_y"] = m_to_mm(info.size.y());
    e["size_z"] = m_to_mm(info.size.z());
    if (!info.symmetry.discrete.empty()) {
      Json list = Json::array();
      for (const auto& d : info.symmetry.discrete) {
        Json m = Json::array();
        for (int r = 0; r < 3; ++r) {
          for (int c = 0; c < 3; ++c) m.push_back(d.rotation(r, c));
          m.push_back(m_to_mm(d.translation(r)));
        }
        for (double v : {0.0, 0.0, 0.0, 1.0}) m.push_back(v);
        list.push_back(std::move(m));
      }
      e["symmetries_discrete"] = std::move(list);
    }
    if (!info.symmetry.continuous.empty()) {
      Json list = Json::array();
      for (const auto& c : info.symmetry.continuous) {
        Json s = Json::object();
        s["axis"] = Json::array({c.axis.x(), c.axis.y(), c.axis.z()});
        s["offset"] = detail::mm_json(c.offset);
        list.push_back(std::move(s));
      }
      e["symmetries_continuous"] = std::move(list);
    }
    j[std::to_string(id)] = std::move(e);
  }
  std::error_code ec;
  fs::create_directories(path.parent_path(), ec);
  detail::save_json(path, j);
}

inline std::map<int, CategoryLabel> read_categories(const fs::path& path) {
  const Json j = detail::load_json(path);
  std::map<int, CategoryLabel> out;
  for (const auto& [key, e] : j.items()) {
    CategoryLabel label;
    label.category = detail::field(e, "category", path, "obj " + key).get<std::string>();
    if (e.contains("description")) label.description = e.at("description").get<std::string>();
    out[detail::parse_id(key, path)] = label;
  }
  return out;
}

inline void write_categories(const fs::path& path, const std::map<int, CategoryLabel>& cats) {
  Json j = Json::object();
  for (const auto& [id, label] : cats) {
    Json e = Json::object();
    e["category"] = label.category;
    e["description"] = label.description;
    j[std::to_string(id)] = std::move(e);
  }
  detail::save_json(path, j);
}

/// Standard locations inside a dataset root.
struct DatasetLayout {
  fs::path root;
  std::string split = "test";

  fs::path split_root() const { return root / split; }
  fs::path models_info() const { return root / "models" / "models_info.json"; }
  fs::path categories() const { return root / "categories.json"; }
};

}  // namespace nocs9d::bop
