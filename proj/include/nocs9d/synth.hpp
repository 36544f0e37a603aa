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
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "nocs9d/core_geometry.hpp"
#include "nocs9d/nocs.hpp"
#include "nocs9d/random.hpp"
#include "nocs9d/symmetry.hpp"

namespace nocs9d::synth {

enum class ShapeKind { kBox, kCylinder, kPrism, kLShape };

inline std::string to_string(ShapeKind k) {
  switch (k) {
    case ShapeKind::kBox: return "box";
    case ShapeKind::kCylinder: return "cylinder";
    case ShapeKind::kPrism: return "prism";
    case ShapeKind::kLShape: return "lshape";
  }
  return "unknown";
}

inline ShapeKind parse_shape_kind(const std::string& s) {
  if (s == "box") return ShapeKind::kBox;
  if (s == "cylinder") return ShapeKind::kCylinder;
  if (s == "prism") return ShapeKind::kPrism;
  if (s == "lshape") return ShapeKind::kLShape;
  throw Error(ErrorCode::kInvalidArgument, "unknown shape kind '" + s + "'");
}

// Arm thickness of the L-shape as a fraction of the x / y extents.
inline constexpr double kLShapeArm = 0.35;

/// Parametric test object centred on its bounding box, symmetry axis (if
/// any) along object z. `extents` is the tight bounding box.
struct ShapeSpec {
  ShapeKind kind = ShapeKind::kBox;
  Vector3d extents = Vector3d::Ones();
  int prism_sides = 0;  // k for kPrism
  SymmetryAnnotation symmetry;

  /// Meters per NOCS unit: the largest extent maps to the unit interval.
  double nocs_scale() const { return extents.maxCoeff(); }
  double diagonal() const { return extents.norm(); }
};

inline ShapeSpec make_box(const Vector3d& extents) {
  if (!(extents.array() > 0.0).all()) throw Error(ErrorCode::kInvalidArgument, "box extents must be > 0");
  ShapeSpec s{ShapeKind::kBox, extents, 0, {}};
  for (int axis = 0; axis < 3; ++axis) {
    s.symmetry.discrete.push_back({axis_angle(Vector3d::Unit(axis), std::numbers::pi), Vector3d::Zero()});
  }
  return s;
}

inline ShapeSpec make_cylinder(double radius, double height) {
  if (!(radius > 0.0 && height > 0.0)) throw Error(ErrorCode::kInvalidArgument, "cylinder size must be > 0");
  ShapeSpec s{ShapeKind::kCylinder, Vector3d(2 * radius, 2 * radius, height), 0, {}};
  s.symmetry.continuous.push_back({Vector3d::UnitZ(), Vector3d::Zero()});
  return s;
}

/// Regular k-gon prism (even k >= 4) with one vertex on +x.
inline ShapeSpec make_prism(int sides, double circumradius, double height) {
  if (sides < 4 || sides % 2 != 0) {
    throw Error(ErrorCode::kInvalidArgument, "prism needs an even side count >= 4");
  }
  if (!(circumradius > 0.0 && height > 0.0)) throw Error(ErrorCode::kInvalidArgument, "prism size must be > 0");
  double max_y = 0.0;
  for (int i = 0; i < sides; ++i) {
    max_y = std::max(max_y, std::abs(std::sin(2.0 * std::numbers::pi * i / sides)));
  }
  ShapeSpec s{ShapeKind::kPrism, Vector3d(2 * circumradius, 2 * circumradius * max_y, height), sides, {}};
  for (int i = 1; i < sides; ++i) {
    s.symmetry.discrete.push_back(
        {axis_angle(Vector3d::UnitZ(), 2.0 * std::numbers::pi * i / sides), Vector3d::Zero()});
  }
  return s;
}

inline ShapeSpec make_lshape(const Vector3d& extents) {
  if (!(extents.array() > 0.0).all()) throw Error(ErrorCode::kInvalidArgument, "L-shape extents must be > 0");
  return {ShapeKind::kLShape, extents, 0, {}};
}

namespace detail {

struct Slab {
  Vector3d normal;
  double offset;  // inside: normal . x <= offset
};

// Entry distance of a ray into a convex region bounded by planes, if any.
inline std::optional<double> ray_convex(const Vector3d& o, const Vector3d& d,
                                        const std::vector<Slab>& planes) {
  double t_in = 0.0;
  double t_out = std::numeric_limits<double>::infinity();
  for (const auto& p : planes) {
    const double denom = p.normal.dot(d);
    const double dist = p.offset - p.normal.dot(o);
    if (denom == 0.0) {
      if (dist < 0.0) return std::nullopt;
      continue;
    }
    const double t = dist / denom;
    if (denom < 0.0) {
      t_in = std::max(t_in, t);
    } else {
      t_out = std::min(t_out, t);
    }
    if (t_in > t_out) return std::nullopt;
  }
  return t_in > 0.0 ? std::optional(t_in) : std::nullopt;
}

inline std::vector<Slab> box_slabs(const Vector3d& lo, const Vector3d& hi) {
  std::vector<Slab> s;
  for (int a = 0; a < 3; ++a) {
    s.push_back({Vector3d::Unit(a), hi(a)});
    s.push_back({-Vector3d::Unit(a), -lo(a)});
  }
  return s;
}

inline std::optional<double> ray_cylinder(const Vector3d& o, const Vector3d& d, double r,
                                          double half_h) {
  std::optional<double> best;
  auto take = [&](double t) {
    if (t > 0.0 && (!best || t < *best)) best = t;
  };
  const double a = d.x() * d.x() + d.y() * d.y();
  if (a > 0.0) {
    const double b = 2.0 * (o.x() * d.x() + o.y() * d.y());
    const double c = o.x() * o.x() + o.y() * o.y() - r * r;
    const double disc = b * b - 4 * a * c;
    if (disc >= 0.0) {
      const double sq = std::sqrt(disc);
      for (double t : {(-b - sq) / (2 * a), (-b + sq) / (2 * a)}) {
        if (std::abs(o.z() + t * d.z()) <= half_h) take(t);
      }
    }
  }
  if (d.z() != 0.0) {
    for (double zc : {-half_h, half_h}) {
      const double t = (zc - o.z()) / d.z();
      const Vector3d p = o + t * d;
      if (p.x() * p.x() + p.y() * p.y() <= r * r) take(t);
    }
  }
  return best;
}

}  // namespace detail

/// First-hit distance along o + t d (t > 0) in the object frame.
inline std::optional<double> intersect(const ShapeSpec& shape, const Vector3d& o,
                                       const Vector3d& d) {
  const Vector3d half = 0.5 * shape.extents;
  switch (shape.kind) {
    case ShapeKind::kBox:
      return detail::ray_convex(o, d, detail::box_slabs(-half, half));
    case ShapeKind::kCylinder:
      return detail::ray_cylinder(o, d, half.x(), half.z());
    case ShapeKind::kPrism: {
      const double r = half.x();
      const int k = shape.prism_sides;
      const double apothem = r * std::cos(std::numbers::pi / k);
      std::vector<detail::Slab> planes;
      for (int i = 0; i < k; ++i) {
        const double ang = 2.0 * std::numbers::pi * (i + 0.5) / k;
        planes.push_back({Vector3d(std::cos(ang), std::sin(ang), 0.0), apothem});
      }
      planes.push_back({Vector3d::UnitZ(), half.z()});
      planes.push_back({-Vector3d::UnitZ(), half.z()});
      return detail::ray_convex(o, d, planes);
    }
    case ShapeKind::kLShape: {
      const Vector3d lo = -half;
      const Vector3d e = shape.extents;
      // bar along x at low y, bar along y at low x
      const auto a = detail::ray_convex(
          o, d, detail::box_slabs(lo, Vector3d(half.x(), lo.y() + kLShapeArm * e.y(), half.z())));
      const auto b = detail::ray_convex(
          o, d, detail::box_slabs(lo, Vector3d(lo.x() + kLShapeArm * e.x(), half.y(), half.z())));
      if (a && b) return std::min(*a, *b);
      return a ? a : b;
    }
  }
  return std::nullopt;
}

/// World-to-camera rigid transform; the object sits at the world origin.
struct CameraPose {
  Matrix3d rotation = Matrix3d::Identity();  // world -> camera
  Vector3d position = Vector3d::Zero();      // camera centre in world

  /// Object-to-camera pose of an object placed at `object` in the world.
  Pose9D object_pose(const ShapeSpec& shape,
                     const SimilarityTransform& object = SimilarityTransform::identity()) const {
    return {shape.extents, rotation * object.rotation,
            rotation * (object.translation - position)};
  }
};

inline constexpr double kMinRadiusFactor = 3.0;
inline constexpr double kMaxRadiusFactor = 5.0;

/// Camera position uniform (by volume) in the shell [3d, 5d] around the
/// object centre, d = extents diagonal, looking at the centre with a
/// uniformly random roll. Camera axes: x right, y down, z forward.
inline CameraPose sample_viewpoint(const ShapeSpec& shape, SplitMix64& rng) {
  const double d = shape.diagonal();
  const double r_lo = kMinRadiusFactor * d;
  const double r_hi = kMaxRadiusFactor * d;
  const double u = rng.uniform();
  const double radius = std::cbrt(r_lo * r_lo * r_lo + u * (r_hi * r_hi * r_hi - r_lo * r_lo * r_lo));
  const double cos_theta = rng.uniform(-1.0, 1.0);
  const double phi = rng.uniform(0.0, 2.0 * std::numbers::pi);
  const double sin_theta = std::sqrt(std::max(0.0, 1.0 - cos_theta * cos_theta));
  const Vector3d dir(sin_theta * std::cos(phi), sin_theta * std::sin(phi), cos_theta);

  CameraPose cam;
  cam.position = radius * dir;
  const Vector3d z = -dir;
  const Vector3d x0 = z.unitOrthogonal();
  const double roll = rng.uniform(0.0, 2.0 * std::numbers::pi);
  const Vector3d x = std::cos(roll) * x0 + std::sin(roll) * z.cross(x0);
  const Vector3d y = z.cross(x);
  cam.rotation.row(0) = x.transpose();
  cam.rotation.row(1) = y.transpose();
  cam.rotation.row(2) = z.transpose();
  return cam;
}

/// Analytic render of one object: depth, visibility mask, NOCS, and pose.
struct Render {
  DepthMap depth;
  Mask mask;
  NocsMap nocs;
  Pose9D pose;
};

namespace detail {

// Pixel rectangle covering the projection of the pose's box, clipped to the
// image; empty when the box is not entirely in front of the camera.
struct PixelRect {
  int u0 = 0, v0 = 0, u1 = -1, v1 = -1;
};

inline PixelRect projected_rect(const Pose9D& pose, const CameraIntrinsics& k) {
  PixelRect r{k.width, k.height, -1, -1};
  double umin = std::numeric_limits<double>::infinity(), vmin = umin;
  double umax = -umin, vmax = -umin;
  for (int i = 0; i < 8; ++i) {
    const Vector3d s((i & 1) ? 0.5 : -0.5, (i & 2) ? 0.5 : -0.5, (i & 4) ? 0.5 : -0.5);
    const Vector3d p = pose.rotation * s.cwiseProduct(pose.scale) + pose.translation;
    if (p.z() <= 0.0) return {0, 0, k.width - 1, k.height - 1};
    const Vector2d px = project(p, k);
    umin = std::min(umin, px.x());
    umax = std::max(umax, px.x());
    vmin = std::min(vmin, px.y());
    vmax = std::max(vmax, px.y());
  }
  r.u0 = std::max(0, static_cast<int>(std::floor(umin)) - 1);
  r.v0 = std::max(0, static_cast<int>(std::floor(vmin)) - 1);
  r.u1 = std::min(k.width - 1, static_cast<int>(std::ceil(umax)) + 1);
  r.v1 = std::min(k.height - 1, static_cast<int>(std::ceil(vmax)) + 1);
  return r;
}

}  // namespace detail

/// Ray-casts `shape` posed at `pose` (object -> camera). Pixel (u, v) casts
/// the ray through continuous coordinates (u, v), matching backproject.
inline Render render_pose(const ShapeSpec& shape, const Pose9D& pose, const CameraIntrinsics& k) {
  k.validate();
  Render out{DepthMap(k.width, k.height, 0.0), Mask(k.width, k.height, 0),
             NocsMap(k.width, k.height), pose};
  const Matrix3d rt = pose.rotation.transpose();
  const Vector3d origin = -(rt * pose.translation);  // camera centre, object frame
  const double inv_scale = 1.0 / shape.nocs_scale();
  const auto rect = detail::projected_rect(pose, k);
  bool any = false;
  for (int v = rect.v0; v <= rect.v1; ++v) {
    for (int u = rect.u0; u <= rect.u1; ++u) {
      const Vector3d ray_cam((u - k.cx) / k.fx, (v - k.cy) / k.fy, 1.0);
      const auto t = intersect(shape, origin, rt * ray_cam);
      if (!t) continue;
      const Vector3d hit = origin + *t * (rt * ray_cam);
      out.depth(u, v) = *t;  // ray_cam has unit z, so t is camera-frame depth
      out.mask(u, v) = 1;
      out.nocs.set(u, v, (hit * inv_scale + Vector3d::Constant(0.5)).cwiseMax(0.0).cwiseMin(1.0));
      any = true;
    }
  }
  if (!any) throw Error(ErrorCode::kEmptyRender, "object is outside the camera frustum");
  return out;
}

inline Render render(const ShapeSpec& shape, const CameraPose& cam, const CameraIntrinsics& k) {
  return render_pose(shape, cam.object_pose(shape), k);
}

/// Depth-composites several single-object renders: each pixel keeps the
/// nearest object, and masks/NOCS become the visible part of each object.
inline std::vector<Render> composite(std::vector<Render> renders) {
  if (renders.empty()) return renders;
  const std::size_t n = renders.front().depth.size();
  for (const auto& r : renders) require_same_size(r.depth, renders.front().depth, "composite");
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t nearest = renders.size();
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < renders.size(); ++j) {
      if (renders[j].mask[i] && renders[j].depth[i] < best) {
        best = renders[j].depth[i];
        nearest = j;
      }
    }
    for (std::size_t j = 0; j < renders.size(); ++j) {
      if (j == nearest) continue;
      renders[j].mask[i] = 0;
      renders[j].nocs.valid[i] = 0;
      renders[j].nocs.values[i] = Vector3d::Zero();
    }
    for (auto& r : renders) r.depth[i] = nearest < renders.size() ? best : 0.0;
  }
  return renders;
}

struct NoiseSpec {
  double nocs_sigma = 0.0;   // NOCS units
  double depth_sigma = 0.0;  // meters
  double outlier_fraction = 0.0;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(nocs_sigma >= 0.0) || !(depth_sigma >= 0.0) || !(outlier_fraction >= 0.0) ||
        !(outlier_fraction < 1.0)) {
      throw Error(ErrorCode::kInvalidArgument, "invalid noise spec");
    }
  }

  bool is_zero() const { return nocs_sigma == 0.0 && depth_sigma == 0.0 && outlier_fraction == 0.0; }
};

/// Adds per-pixel Gaussian noise to valid depth and NOCS pixels and replaces
/// floor(outlier_fraction * n_valid) valid NOCS pixels with uniform values.
///
/// All randomness is a hash of (seed, pixel index, channel), so the result
/// does not depend on evaluation order. Outliers are the valid NOCS pixels
/// with the smallest selection hash. NOCS is clamped to [0,1] and noisy
/// depth to >= 0 (0 becomes invalid).
inline void corrupt(DepthMap& depth, NocsMap& nocs, const NoiseSpec& noise) {
  noise.validate();
  require_same_size(depth, nocs.values, "corrupt depth/nocs");
  if (noise.is_zero()) return;
  enum Stream : std::uint64_t { kDepth = 1, kNocs = 2, kSelect = 3, kOutlier = 4 };
  const std::uint64_t seed = noise.seed;

  if (noise.depth_sigma > 0.0) {
    for (std::size_t i = 0; i < depth.size(); ++i) {
      if (!(depth[i] > 0.0)) continue;
      const double z = counter_normal(hash_counter(seed, kDepth, i, 0), hash_counter(seed, kDepth, i, 1));
      depth[i] = std::max(0.0, depth[i] + noise.depth_sigma * z);
    }
  }
  std::vector<std::size_t> valid;
  for (std::size_t i = 0; i < nocs.valid.size(); ++i) {
    if (nocs.valid[i]) valid.push_back(i);
  }
  if (noise.nocs_sigma > 0.0) {
    for (auto i : valid) {
      for (int c = 0; c < 3; ++c) {
        const double z = counter_normal(hash_counter(seed, kNocs, i, 2 * c),
                                        hash_counter(seed, kNocs, i, 2 * c + 1));
        nocs.values[i](c) = std::clamp(nocs.values[i](c) + noise.nocs_sigma * z, 0.0, 1.0);
      }
    }
  }
  const auto n_out = static_cast<std::size_t>(
      std::floor(noise.outlier_fraction * static_cast<double>(valid.size())));
  if (n_out > 0) {
    std::vector<std::pair<std::uint64_t, std::size_t>> order;
    order.reserve(valid.size());
    for (auto i : valid) order.emplace_back(hash_counter(seed, kSelect, i), i);
    std::nth_element(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_out), order.end());
    for (std::size_t r = 0; r < n_out; ++r) {
      const std::size_t i = order[r].second;
      for (int c = 0; c < 3; ++c) nocs.values[i](c) = to_unit(hash_counter(seed, kOutlier, i, c));
    }
  }
}

}  // namespace nocs9d::synth
