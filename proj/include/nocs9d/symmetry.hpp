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
#include <limits>
#include <numbers>
#include <vector>

#include "nocs9d/core_geometry.hpp"

namespace nocs9d {

inline constexpr int kContinuousSymmetrySamples = 36;

/// Rigid object-frame transform under which the shape is invariant.
struct DiscreteSymmetry {
  Matrix3d rotation = Matrix3d::Identity();
  Vector3d translation = Vector3d::Zero();  // meters
};

/// Invariance under any rotation about the line {offset + s * axis}.
struct ContinuousSymmetry {
  Vector3d axis = Vector3d::UnitZ();
  Vector3d offset = Vector3d::Zero();  // meters
};

/// Symmetry metadata in the BOP style: the identity is implicit and never
/// listed. Objects with only a principal direction are annotated with a
/// continuous axis.
struct SymmetryAnnotation {
  std::vector<DiscreteSymmetry> discrete;
  std::vector<ContinuousSymmetry> continuous;

  bool empty() const { return discrete.empty() && continuous.empty(); }
  bool has_continuous() const { return !continuous.empty(); }

  void validate() const {
    for (const auto& d : discrete) {
      if (!is_rotation(d.rotation) || !d.translation.allFinite()) {
        throw Error(ErrorCode::kAnnotation,
                    "discrete symmetry with a non-rotation block");
      }
    }
    for (const auto& c : continuous) {
      if (!c.offset.allFinite() || std::abs(c.axis.norm() - 1.0) > kRotationTolerance) {
        throw Error(ErrorCode::kAnnotation, "continuous symmetry axis is not unit length");
      }
    }
  }
};

/// Object-frame transforms equivalent to the identity under `sym`: the
/// product of {I} ∪ discrete with the continuous samples, identity first.
inline std::vector<DiscreteSymmetry> symmetry_transforms(
    const SymmetryAnnotation& sym, int n_continuous = kContinuousSymmetrySamples) {
  sym.validate();
  if (n_continuous < 1) {
    throw Error(ErrorCode::kAnnotation, "n_continuous must be >= 1");
  }
  std::vector<DiscreteSymmetry> continuous_samples{DiscreteSymmetry{}};
  for (const auto& c : sym.continuous) {
    for (int i = 1; i < n_continuous; ++i) {
      const double angle = 2.0 * std::numbers::pi * i / n_continuous;
      const Matrix3d r = axis_angle(c.axis, angle);
      // rotation about the offset line: x -> R (x - o) + o
      continuous_samples.push_back({r, c.offset - r * c.offset});
    }
  }
  std::vector<DiscreteSymmetry> discrete{DiscreteSymmetry{}};
  discrete.insert(discrete.end(), sym.discrete.begin(), sym.discrete.end());

  std::vector<DiscreteSymmetry> out;
  out.reserve(discrete.size() * continuous_samples.size());
  for (const auto& d : discrete) {
    for (const auto& c : continuous_samples) {
      out.push_back({d.rotation * c.rotation, d.rotation * c.translation + d.translation});
    }
  }
  return out;
}

/// Ground-truth pose composed on the object side with every symmetry
/// transform; the first entry is `gt` itself and scale is never changed.
inline std::vector<Pose9D> augment_gt_poses(
    const Pose9D& gt, const SymmetryAnnotation& sym,
    int n_continuous = kContinuousSymmetrySamples) {
  std::vector<Pose9D> out;
  for (const auto& g : symmetry_transforms(sym, n_continuous)) {
    out.push_back({gt.scale, gt.rotation * g.rotation,
                   gt.rotation * g.translation + gt.translation});
  }
  return out;
}

/// Rotation error that ignores symmetry-equivalent orientations.
///
/// Non-symmetric objects use the geodesic distance. Discrete symmetries take
/// the minimum over the augmented ground-truth set. With a continuous axis
/// only the direction of that axis is compared, so the result is exactly
/// invariant to spinning either rotation about it; annotated discrete
/// transforms (e.g. a top/bottom flip) may still remap the axis.
inline double sym_rotation_error_deg(const Matrix3d& pred, const Matrix3d& gt,
                                     const SymmetryAnnotation& sym) {
  if (sym.empty()) return rotation_geodesic_deg(pred, gt);

  std::vector<Matrix3d> discrete{Matrix3d::Identity()};
  for (const auto& d : sym.discrete) discrete.push_back(d.rotation);

  double best = std::numeric_limits<double>::infinity();
  if (sym.has_continuous()) {
    for (const auto& c : sym.continuous) {
      const Vector3d pred_axis = pred * c.axis;
      for (const auto& d : discrete) {
        best = std::min(best, direction_angle_deg(pred_axis, gt * (d * c.axis)));
      }
    }
    return best;
  }
  for (const auto& d : discrete) {
    best = std::min(best, rotation_geodesic_deg(pred, gt * d));
  }
  return best;
}

}  // namespace nocs9d
