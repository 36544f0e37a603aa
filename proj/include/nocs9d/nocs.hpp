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
#include <limits>
#include <vector>

#include "nocs9d/core_geometry.hpp"
#include "nocs9d/symmetry.hpp"

namespace nocs9d {

inline constexpr double kDefaultSmoothL1Beta = 0.1;

/// Per-pixel normalized object coordinates in [0,1]^3 plus validity.
struct NocsMap {
  Image<Vector3d> values;
  Mask valid;

  NocsMap() = default;
  NocsMap(int width, int height)
      : values(width, height, Vector3d::Zero()), valid(width, height, 0) {}

  int width() const { return values.width(); }
  int height() const { return values.height(); }

  void set(int u, int v, const Vector3d& nocs) {
    values(u, v) = nocs;
    valid(u, v) = 1;
  }

  friend bool operator==(const NocsMap&, const NocsMap&) = default;
};

/// Object-frame coordinate (centred cube [-0.5, 0.5]^3) of a NOCS value.
inline Vector3d recenter(const Vector3d& nocs) {
  return nocs - Vector3d::Constant(0.5);
}

/// Paired NOCS (recentred) and camera-frame points, matched by index.
struct Correspondences {
  std::vector<Vector3d> nocs_points;
  std::vector<Vector3d> camera_points;

  std::size_t size() const { return nocs_points.size(); }
  bool empty() const { return nocs_points.empty(); }
};

inline Correspondences build_correspondences(const NocsMap& nocs, const DepthMap& depth,
                                             const CameraIntrinsics& k, const Mask& mask) {
  require_same_size(nocs.values, depth, "correspondences nocs/depth");
  require_same_size(nocs.valid, mask, "correspondences nocs/mask");
  Correspondences out;
  for (const auto& px : backproject(depth, k, mask)) {
    if (!nocs.valid(px.u, px.v)) continue;
    out.nocs_points.push_back(recenter(nocs.values(px.u, px.v)));
    out.camera_points.push_back(px.point);
  }
  return out;
}

/// Smooth-L1 of a scalar difference.
inline double smooth_l1(double diff, double beta) {
  const double a = std::abs(diff);
  return a < beta ? 0.5 * a * a / beta : a - 0.5 * beta;
}

namespace detail {

inline void check_loss_inputs(const NocsMap& pred, const NocsMap& gt, const Mask& mask,
                              double beta) {
  require_same_size(pred.values, gt.values, "loss pred/gt");
  require_same_size(pred.values, mask, "loss pred/mask");
  if (!(beta > 0.0)) throw Error(ErrorCode::kInvalidArgument, "beta must be > 0");
}

// Mean over masked pixels of the channel-summed smooth-L1 between pred and
// f(gt), where f maps recentred gt coordinates.
template <typename Map>
double masked_smooth_l1(const NocsMap& pred, const NocsMap& gt, const Mask& mask,
                        double beta, Map&& f) {
  double total = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (!mask[i]) continue;
    ++n;
    const Vector3d target = f(recenter(gt.values[i]));
    const Vector3d diff = recenter(pred.values[i]) - target;
    total += smooth_l1(diff.x(), beta) + smooth_l1(diff.y(), beta) +
             smooth_l1(diff.z(), beta);
  }
  if (n == 0) throw Error(ErrorCode::kEmptyRegion, "mask selects no pixels");
  return total / static_cast<double>(n);
}

}  // namespace detail

/// Mask-averaged smooth-L1 between predicted and ground-truth NOCS maps.
/// The per-pixel term sums the three channel contributions.
inline double smooth_l1_nocs_loss(const NocsMap& pred, const NocsMap& gt, const Mask& mask,
                                  double beta = kDefaultSmoothL1Beta) {
  detail::check_loss_inputs(pred, gt, mask, beta);
  return detail::masked_smooth_l1(pred, gt, mask, beta,
                                  [](const Vector3d& x) { return x; });
}

/// Minimum smooth-L1 loss over the ground truth transformed by every
/// symmetry-equivalent object transform (continuous axes sampled
/// `n_continuous` times). `object_scale` converts the annotation's metric
/// translations and offsets to NOCS units (meters per NOCS unit).
inline double symmetry_aware_nocs_loss(const NocsMap& pred, const NocsMap& gt,
                                       const Mask& mask, const SymmetryAnnotation& sym,
                                       double beta = kDefaultSmoothL1Beta,
                                       double object_scale = 1.0,
                                       int n_continuous = kContinuousSymmetrySamples) {
  detail::check_loss_inputs(pred, gt, mask, beta);
  if (!(object_scale > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "object_scale must be > 0");
  }
  double best = std::numeric_limits<double>::infinity();
  for (const auto& g : symmetry_transforms(sym, n_continuous)) {
    const Matrix3d r = g.rotation;
    const Vector3d t = g.translation / object_scale;
    best = std::min(best, detail::masked_smooth_l1(pred, gt, mask, beta, [&](const Vector3d& x) {
                      return Vector3d(r * x + t);
                    }));
  }
  return best;
}

}  // namespace nocs9d
