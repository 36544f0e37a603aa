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
#include <numbers>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "nocs9d/error.hpp"
#include "nocs9d/image.hpp"

namespace nocs9d {

using Eigen::Matrix3d;
using Eigen::Vector2d;
using Eigen::Vector3d;

inline constexpr double kRotationTolerance = 1e-6;

inline double deg2rad(double deg) { return deg * std::numbers::pi / 180.0; }
inline double rad2deg(double rad) { return rad * 180.0 / std::numbers::pi; }

/// True when m is orthonormal and proper (det = +1), elementwise within tol.
inline bool is_rotation(const Matrix3d& m, double tol = kRotationTolerance) {
  if (!m.allFinite()) return false;
  const Matrix3d gram = m.transpose() * m;
  if ((gram - Matrix3d::Identity()).cwiseAbs().maxCoeff() > tol) return false;
  return std::abs(m.determinant() - 1.0) <= tol;
}

inline Matrix3d axis_angle(const Vector3d& axis, double angle_rad) {
  return Eigen::AngleAxisd(angle_rad, axis.normalized()).toRotationMatrix();
}

/// Size and pose of an object: x_cam = rotation * x_obj + translation, with
/// the object occupying the box of extents `scale` centred at the origin.
struct Pose9D {
  Vector3d scale = Vector3d::Ones();
  Matrix3d rotation = Matrix3d::Identity();
  Vector3d translation = Vector3d::Zero();

  bool valid() const {
    return scale.allFinite() && (scale.array() > 0.0).all() &&
           translation.allFinite() && is_rotation(rotation);
  }

  void validate() const {
    if (!valid()) throw Error(ErrorCode::kValidation, "invalid Pose9D");
  }
};

/// x -> scale * rotation * x + translation
struct SimilarityTransform {
  double scale = 1.0;
  Matrix3d rotation = Matrix3d::Identity();
  Vector3d translation = Vector3d::Zero();

  static SimilarityTransform identity() { return {}; }

  static SimilarityTransform rigid(const Matrix3d& r, const Vector3d& t) {
    return {1.0, r, t};
  }

  Vector3d apply(const Vector3d& x) const {
    return scale * (rotation * x) + translation;
  }

  bool finite() const {
    return std::isfinite(scale) && rotation.allFinite() && translation.allFinite();
  }
};

/// (a ∘ b)(x) = a(b(x))
inline SimilarityTransform compose(const SimilarityTransform& a,
                                   const SimilarityTransform& b) {
  return {a.scale * b.scale, a.rotation * b.rotation,
          a.scale * (a.rotation * b.translation) + a.translation};
}

inline SimilarityTransform invert(const SimilarityTransform& t) {
  if (!t.finite() || !(t.scale > 0.0)) {
    throw Error(ErrorCode::kInvalidTransform,
                "cannot invert a transform with non-finite fields or non-positive scale");
  }
  const Matrix3d rt = t.rotation.transpose();
  const double inv_c = 1.0 / t.scale;
  return {inv_c, rt, -inv_c * (rt * t.translation)};
}

/// Rigid object-to-camera part of a 9-DoF pose.
inline SimilarityTransform rigid_part(const Pose9D& p) {
  return SimilarityTransform::rigid(p.rotation, p.translation);
}

/// Geodesic angle between two rotations, in degrees.
inline double rotation_geodesic_deg(const Matrix3d& a, const Matrix3d& b) {
  const double cos_angle = ((a.transpose() * b).trace() - 1.0) / 2.0;
  return rad2deg(std::acos(std::clamp(cos_angle, -1.0, 1.0)));
}

/// Angle between two directions in degrees.
inline double direction_angle_deg(const Vector3d& a, const Vector3d& b) {
  const double c = a.normalized().dot(b.normalized());
  return rad2deg(std::acos(std::clamp(c, -1.0, 1.0)));
}

struct CameraIntrinsics {
  double fx = 0.0;
  double fy = 0.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 0;
  int height = 0;

  bool valid() const {
    return fx > 0.0 && fy > 0.0 && width > 0 && height > 0 && cx >= 0.0 &&
           cx < width && cy >= 0.0 && cy < height && std::isfinite(fx) &&
           std::isfinite(fy);
  }

  void validate() const {
    if (!valid()) throw Error(ErrorCode::kValidation, "invalid camera intrinsics");
  }

  Matrix3d matrix() const {
    Matrix3d k;
    k << fx, 0.0, cx, 0.0, fy, cy, 0.0, 0.0, 1.0;
    return k;
  }

  friend bool operator==(const CameraIntrinsics&, const CameraIntrinsics&) = default;
};

/// Continuous pixel coordinates of a camera-frame point (z > 0).
inline Vector2d project(const Vector3d& p, const CameraIntrinsics& k) {
  return {k.fx * p.x() / p.z() + k.cx, k.fy * p.y() / p.z() + k.cy};
}

inline Vector3d backproject_pixel(double u, double v, double depth,
                                  const CameraIntrinsics& k) {
  return {(u - k.cx) * depth / k.fx, (v - k.cy) * depth / k.fy, depth};
}

struct PixelPoint {
  int u = 0;
  int v = 0;
  Vector3d point = Vector3d::Zero();
};

/// Camera-frame points for every masked pixel with positive depth, in
/// row-major pixel order.
inline std::vector<PixelPoint> backproject(const DepthMap& depth,
                                           const CameraIntrinsics& k,
                                           const Mask& mask) {
  require_same_size(depth, mask, "backproject depth/mask");
  if (depth.width() != k.width || depth.height() != k.height) {
    throw Error(ErrorCode::kDimension,
                fmt::format("backproject: depth {}x{} vs intrinsics {}x{}",
                            depth.width(), depth.height(), k.width, k.height));
  }
  std::vector<PixelPoint> out;
  for (int v = 0; v < depth.height(); ++v) {
    for (int u = 0; u < depth.width(); ++u) {
      const double d = depth(u, v);
      if (!mask(u, v) || !(d > 0.0)) continue;
      out.push_back({u, v, backproject_pixel(u, v, d, k)});
    }
  }
  return out;
}

}  // namespace nocs9d
