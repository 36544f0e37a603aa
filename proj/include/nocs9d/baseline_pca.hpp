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
#include <limits>
#include <span>
#include <vector>

#include <Eigen/Eigenvalues>

#include "nocs9d/core_geometry.hpp"

namespace nocs9d {

namespace detail {

inline constexpr double kEigenTieTolerance = 1e-9;

// Orthonormal basis of span(vectors) ordered so each slot is the member
// closest to camera x, then y, then z.
inline std::vector<Vector3d> canonical_basis(const std::vector<Vector3d>& span_vectors) {
  const std::size_t dim = span_vectors.size();
  if (dim == 1) return span_vectors;
  Eigen::Matrix<double, 3, Eigen::Dynamic> q(3, static_cast<Eigen::Index>(dim));
  for (std::size_t i = 0; i < dim; ++i) q.col(static_cast<Eigen::Index>(i)) = span_vectors[i];
  std::vector<Vector3d> out;
  for (int axis = 0; axis < 3 && out.size() < dim; ++axis) {
    Vector3d p = q * (q.transpose() * Vector3d::Unit(axis));
    for (const auto& b : out) p -= b.dot(p) * b;
    if (p.norm() > 1e-6) out.push_back(p.normalized());
  }
  return out;
}

inline double third_moment(std::span<const Vector3d> pts, const Vector3d& mean,
                           const Vector3d& axis) {
  double m3 = 0.0;
  for (const auto& p : pts) {
    const double s = (p - mean).dot(axis);
    m3 += s * s * s;
  }
  return m3 / static_cast<double>(pts.size());
}

}  // namespace detail

/// PCA baseline: frame from the point covariance of the observed cloud.
///
/// Object x/y/z take the eigenvectors of descending eigenvalue; equal
/// eigenvalues are resolved towards camera x, y, z in that order. The x and
/// y axes are signed so the third moment of the projections is non-negative
/// (ties fall back to a non-negative largest component) and z = x × y.
/// Translation is the centroid, scale the extent in the recovered frame.
inline Pose9D pca_fit(std::span<const Vector3d> points) {
  if (points.size() < 3) {
    throw Error(ErrorCode::kDegenerate, "pca_fit needs at least 3 points");
  }
  Vector3d mean = Vector3d::Zero();
  for (const auto& p : points) mean += p;
  mean /= static_cast<double>(points.size());
  Matrix3d cov = Matrix3d::Zero();
  for (const auto& p : points) cov.noalias() += (p - mean) * (p - mean).transpose();
  cov /= static_cast<double>(points.size());

  const Eigen::SelfAdjointEigenSolver<Matrix3d> eig(cov);
  const Vector3d ev = eig.eigenvalues();  // ascending
  if (!(ev(2) > 0.0) || ev(1) <= 1e-12 * ev(2)) {
    throw Error(ErrorCode::kDegenerate, "pca_fit: rank-deficient covariance");
  }

  std::array<Vector3d, 3> axes;
  std::size_t slot = 0;
  int i = 2;
  while (i >= 0) {
    std::vector<Vector3d> group{eig.eigenvectors().col(i)};
    int j = i - 1;
    while (j >= 0 && ev(i) - ev(j) <= detail::kEigenTieTolerance * ev(2)) {
      group.push_back(eig.eigenvectors().col(j));
      --j;
    }
    for (const auto& b : detail::canonical_basis(group)) axes[slot++] = b;
    i = j;
  }

  const double tol = 1e-12 * std::pow(ev(2), 1.5);
  for (int a = 0; a < 2; ++a) {
    const double m3 = detail::third_moment(points, mean, axes[a]);
    bool flip = m3 < -tol;
    if (std::abs(m3) <= tol) {
      Eigen::Index k;
      axes[a].cwiseAbs().maxCoeff(&k);
      flip = axes[a](k) < 0.0;
    }
    if (flip) axes[a] = -axes[a];
  }
  axes[2] = axes[0].cross(axes[1]).normalized();

  Pose9D pose;
  pose.rotation.col(0) = axes[0];
  pose.rotation.col(1) = axes[1];
  pose.rotation.col(2) = axes[2];
  pose.translation = mean;
  Vector3d lo = Vector3d::Constant(std::numeric_limits<double>::infinity());
  Vector3d hi = -lo;
  for (const auto& p : points) {
    const Vector3d local = pose.rotation.transpose() * (p - mean);
    lo = lo.cwiseMin(local);
    hi = hi.cwiseMax(local);
  }
  pose.scale = hi - lo;
  return pose;
}

}  // namespace nocs9d
