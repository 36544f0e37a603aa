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
#include <array>
#include <cmath>
#include <vector>

#include "nocs9d/core_geometry.hpp"

namespace nocs9d {

/// Camera-frame corners of the pose's size-scaled box.
inline std::array<Vector3d, 8> box_corners(const Pose9D& pose) {
  std::array<Vector3d, 8> out;
  for (int i = 0; i < 8; ++i) {
    const Vector3d sign((i & 1) ? 0.5 : -0.5, (i & 2) ? 0.5 : -0.5, (i & 4) ? 0.5 : -0.5);
    out[i] = pose.rotation * sign.cwiseProduct(pose.scale) + pose.translation;
  }
  return out;
}

struct AlignedBox {
  Vector3d min;
  Vector3d max;

  double volume() const { return (max - min).cwiseMax(0.0).prod(); }
};

inline AlignedBox enclosing_box(const Pose9D& pose) {
  const auto corners = box_corners(pose);
  AlignedBox b{corners[0], corners[0]};
  for (const auto& c : corners) {
    b.min = b.min.cwiseMin(c);
    b.max = b.max.cwiseMax(c);
  }
  return b;
}

/// IoU of the camera-frame axis-aligned boxes enclosing each pose's box.
inline double iou3d_axis_aligned(const Pose9D& pred, const Pose9D& gt) {
  const AlignedBox a = enclosing_box(pred);
  const AlignedBox b = enclosing_box(gt);
  const AlignedBox inter{a.min.cwiseMax(b.min), a.max.cwiseMin(b.max)};
  const double vi = inter.volume();
  const double vu = a.volume() + b.volume() - vi;
  return vu > 0.0 ? vi / vu : 0.0;
}

namespace detail {

using Polygon = std::vector<Vector3d>;

struct Plane {
  Vector3d normal;  // outward
  double offset;    // inside: normal . x <= offset
};

inline std::vector<Polygon> box_faces(const Pose9D& pose) {
  const auto c = box_corners(pose);
  // corner index bits: x=1, y=2, z=4
  static constexpr int kFaces[6][4] = {{0, 2, 6, 4}, {1, 5, 7, 3}, {0, 4, 5, 1},
                                       {2, 3, 7, 6}, {0, 1, 3, 2}, {4, 6, 7, 5}};
  std::vector<Polygon> faces;
  for (const auto& f : kFaces) faces.push_back({c[f[0]], c[f[1]], c[f[2]], c[f[3]]});
  return faces;
}

inline std::array<Plane, 6> box_planes(const Pose9D& pose) {
  std::array<Plane, 6> planes;
  for (int axis = 0; axis < 3; ++axis) {
    const Vector3d n = pose.rotation.col(axis);
    const double center = n.dot(pose.translation);
    planes[2 * axis] = {n, center + 0.5 * pose.scale(axis)};
    planes[2 * axis + 1] = {-n, -center + 0.5 * pose.scale(axis)};
  }
  return planes;
}

// Clips a closed convex polyhedron (given by faces) to a half-space.
// Vertices within eps of the plane count as on it.
inline std::vector<Polygon> clip_polyhedron(const std::vector<Polygon>& faces,
                                            const Plane& plane, double eps) {
  double lo = 0.0, hi = 0.0;
  bool first = true;
  for (const auto& face : faces) {
    for (const auto& p : face) {
      const double d = plane.normal.dot(p) - plane.offset;
      lo = first ? d : std::min(lo, d);
      hi = first ? d : std::max(hi, d);
      first = false;
    }
  }
  if (hi <= eps) return faces;
  if (lo >= -eps) return {};

  std::vector<Polygon> out;
  std::vector<Vector3d> cut;
  auto add_cut = [&](const Vector3d& x) {
    for (const auto& c : cut)
      if ((c - x).norm() <= eps) return;
    cut.push_back(x);
  };
  for (const auto& face : faces) {
    Polygon clipped;
    for (std::size_t i = 0; i < face.size(); ++i) {
      const Vector3d& p = face[i];
      const Vector3d& q = face[(i + 1) % face.size()];
      const double dp = plane.normal.dot(p) - plane.offset;
      const double dq = plane.normal.dot(q) - plane.offset;
      if (dp <= eps) clipped.push_back(p);
      if (std::abs(dp) <= eps) add_cut(p);
      if ((dp < -eps && dq > eps) || (dp > eps && dq < -eps)) {
        const Vector3d x = p + (q - p) * (dp / (dp - dq));
        clipped.push_back(x);
        add_cut(x);
      }
    }
    if (clipped.size() >= 3) out.push_back(std::move(clipped));
  }
  if (cut.size() >= 3) {
    Vector3d centroid = Vector3d::Zero();
    for (const auto& p : cut) centroid += p;
    centroid /= static_cast<double>(cut.size());
    const Vector3d e1 = plane.normal.unitOrthogonal();
    const Vector3d e2 = plane.normal.cross(e1);
    std::sort(cut.begin(), cut.end(), [&](const Vector3d& a, const Vector3d& b) {
      return std::atan2((a - centroid).dot(e2), (a - centroid).dot(e1)) <
             std::atan2((b - centroid).dot(e2), (b - centroid).dot(e1));
    });
    out.push_back(std::move(cut));
  }
  return out;
}

// Volume of a convex polyhedron; independent of face winding.
inline double convex_volume(const std::vector<Polygon>& faces) {
  Vector3d c = Vector3d::Zero();
  std::size_t n = 0;
  for (const auto& f : faces) {
    for (const auto& p : f) c += p;
    n += f.size();
  }
  if (n == 0) return 0.0;
  c /= static_cast<double>(n);
  double volume = 0.0;
  for (const auto& f : faces) {
    Vector3d area_vec = Vector3d::Zero();  // Newell
    for (std::size_t i = 0; i < f.size(); ++i) area_vec += f[i].cross(f[(i + 1) % f.size()]);
    const double twice_area = area_vec.norm();
    if (twice_area <= 0.0) continue;
    const double height = std::abs((f[0] - c).dot(area_vec / twice_area));
    volume += 0.5 * twice_area * height / 3.0;
  }
  return volume;
}

}  // namespace detail

/// Exact IoU of the two oriented boxes (convex clipping).
inline double iou3d_oriented(const Pose9D& pred, const Pose9D& gt) {
  auto faces = detail::box_faces(pred);
  const double eps = 1e-12 * std::max(pred.scale.maxCoeff(), gt.scale.maxCoeff());
  for (const auto& plane : detail::box_planes(gt)) {
    faces = detail::clip_polyhedron(faces, plane, eps);
    if (faces.size() < 4) break;
  }
  const double vi = faces.size() < 4 ? 0.0 : detail::convex_volume(faces);
  const double vu = pred.scale.prod() + gt.scale.prod() - vi;
  return vu > 0.0 ? std::clamp(vi / vu, 0.0, 1.0) : 0.0;
}

enum class IouMode { kAabb, kOriented };

inline double iou3d(const Pose9D& pred, const Pose9D& gt, IouMode mode) {
  return mode == IouMode::kAabb ? iou3d_axis_aligned(pred, gt) : iou3d_oriented(pred, gt);
}

}  // namespace nocs9d
