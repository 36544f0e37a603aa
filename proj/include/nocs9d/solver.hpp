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

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include <Eigen/SVD>

#include "nocs9d/core_geometry.hpp"
#include "nocs9d/nocs.hpp"
#include "nocs9d/random.hpp"

namespace nocs9d {

/// Least-squares similarity transform mapping src onto dst (Umeyama 1991).
///
/// Minimizes sum ||c R src_i + t - dst_i||^2 with det(R) = +1; the
/// reflection case is resolved by flipping the smallest singular direction.
inline SimilarityTransform umeyama(std::span<const Vector3d> src,
                                  std::span<const Vector3d> dst) {
  if (src.size() != dst.size()) {
    throw Error(ErrorCode::kDimension, "umeyama: src and dst differ in length");
  }
  const std::size_t n = src.size();
  if (n < 3) {
    throw Error(ErrorCode::kInsufficientPoints, "umeyama needs at least 3 points");
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  Vector3d mu_src = Vector3d::Zero();
  Vector3d mu_dst = Vector3d::Zero();
  for (std::size_t i = 0; i < n; ++i) {
    mu_src += src[i];
    mu_dst += dst[i];
  }
  mu_src *= inv_n;
  mu_dst *= inv_n;

  Matrix3d cov = Matrix3d::Zero();
  Matrix3d src_cov = Matrix3d::Zero();
  double src_var = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Vector3d s = src[i] - mu_src;
    const Vector3d d = dst[i] - mu_dst;
    cov.noalias() += d * s.transpose();
    src_cov.noalias() += s * s.transpose();
    src_var += s.squaredNorm();
  }
  cov *= inv_n;
  src_cov *= inv_n;
  src_var *= inv_n;

  // Rank < 2 (coincident or collinear source) leaves the rotation undefined.
  const Eigen::JacobiSVD<Matrix3d> src_svd(src_cov);
  const Vector3d src_sv = src_svd.singularValues();
  if (!(src_var > 0.0) || src_sv(1) <= 1e-12 * src_sv(0)) {
    throw Error(ErrorCode::kDegenerate, "umeyama: source points are coincident or collinear");
  }

  const Eigen::JacobiSVD<Matrix3d> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Matrix3d& u = svd.matrixU();
  const Matrix3d& v = svd.matrixV();
  Vector3d s = Vector3d::Ones();
  if (u.determinant() * v.determinant() < 0.0) s(2) = -1.0;

  SimilarityTransform t;
  t.rotation = u * s.asDiagonal() * v.transpose();
  t.scale = svd.singularValues().dot(s) / src_var;
  t.translation = mu_dst - t.scale * (t.rotation * mu_src);
  if (!(t.scale > 0.0) || !t.finite()) {
    throw Error(ErrorCode::kDegenerate, "umeyama: non-positive or non-finite scale");
  }
  return t;
}

struct RansacConfig {
  int max_iterations = 1000;
  double inlier_threshold = 0.01;  // meters, camera frame
  int min_inliers = 10;
  std::uint64_t seed = 0;
  // Adaptive stop once a better consensus is this unlikely to exist; 1.0
  // always runs max_iterations.
  double confidence = 0.999;

  void validate() const {
    if (max_iterations < 1 || !(inlier_threshold > 0.0) || min_inliers < 3 ||
        !(confidence > 0.0 && confidence <= 1.0)) {
      throw Error(ErrorCode::kInvalidArgument, "invalid RANSAC configuration");
    }
  }
};

inline constexpr int kRansacSampleSize = 4;

struct FitResult {
  SimilarityTransform transform;
  Pose9D pose;
  std::vector<std::size_t> inlier_indices;
  double rms_residual = 0.0;
  int iterations = 0;
};

namespace detail {

inline std::vector<std::size_t> collect_inliers(const SimilarityTransform& t,
                                                const Correspondences& corr,
                                                double threshold) {
  const double thr2 = threshold * threshold;
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < corr.size(); ++i) {
    if ((t.apply(corr.nocs_points[i]) - corr.camera_points[i]).squaredNorm() < thr2) {
      idx.push_back(i);
    }
  }
  return idx;
}

inline std::size_t count_inliers(const SimilarityTransform& t, const Correspondences& corr,
                                 double threshold) {
  const double thr2 = threshold * threshold;
  const Matrix3d m = t.scale * t.rotation;
  std::size_t n = 0;
  for (std::size_t i = 0; i < corr.size(); ++i) {
    n += (m * corr.nocs_points[i] + t.translation - corr.camera_points[i]).squaredNorm() < thr2;
  }
  return n;
}

inline SimilarityTransform fit_subset(const Correspondences& corr,
                                      std::span<const std::size_t> idx) {
  std::vector<Vector3d> src;
  std::vector<Vector3d> dst;
  src.reserve(idx.size());
  dst.reserve(idx.size());
  for (auto i : idx) {
    src.push_back(corr.nocs_points[i]);
    dst.push_back(corr.camera_points[i]);
  }
  return umeyama(src, dst);
}

inline int required_iterations(double inlier_ratio, double confidence, int max_iterations) {
  if (confidence >= 1.0) return max_iterations;
  const double p_good = std::pow(inlier_ratio, kRansacSampleSize);
  if (p_good >= 1.0) return 1;
  if (p_good <= 0.0) return max_iterations;
  const double k = std::log(1.0 - confidence) / std::log(1.0 - p_good);
  if (!std::isfinite(k) || k >= max_iterations) return max_iterations;
  return std::max(1, static_cast<int>(std::ceil(k)));
}

}  // namespace detail

/// Similarity fit from NOCS to camera points by Umeyama inside RANSAC.
///
/// Each iteration draws 4 distinct correspondences from a seeded
/// SplitMix64 stream, fits a hypothesis, and counts correspondences with
/// camera-frame residual below the threshold. The largest consensus wins
/// (earliest iteration on ties). The winner is refit on its consensus set and
/// the inliers and RMS are recomputed under the refit transform.
inline FitResult ransac_fit(const Correspondences& corr, const RansacConfig& cfg) {
  cfg.validate();
  if (corr.nocs_points.size() != corr.camera_points.size()) {
    throw Error(ErrorCode::kDimension, "correspondence lists differ in length");
  }
  const std::size_t n = corr.size();
  if (n < static_cast<std::size_t>(cfg.min_inliers) || n < kRansacSampleSize) {
    throw Error(ErrorCode::kInsufficientPoints,
                fmt::format("{} correspondences, need at least {}", n,
                            std::max(cfg.min_inliers, kRansacSampleSize)));
  }

  SplitMix64 rng(cfg.seed);
  std::size_t best_count = 0;
  SimilarityTransform best;
  int needed = cfg.max_iterations;
  int it = 0;
  for (; it < needed; ++it) {
    std::array<std::size_t, kRansacSampleSize> sample{};
    for (int j = 0; j < kRansacSampleSize; ++j) {
      bool fresh = false;
      while (!fresh) {
        sample[j] = static_cast<std::size_t>(rng.below(n));
        fresh = true;
        for (int q = 0; q < j; ++q) fresh = fresh && sample[q] != sample[j];
      }
    }
    SimilarityTransform hyp;
    try {
      hyp = detail::fit_subset(corr, sample);
    } catch (const Error&) {
      continue;  // degenerate sample
    }
    const std::size_t count = detail::count_inliers(hyp, corr, cfg.inlier_threshold);
    if (count > best_count) {
      best_count = count;
      best = hyp;
      if (best_count >= static_cast<std::size_t>(cfg.min_inliers)) {
        needed = detail::required_iterations(
            static_cast<double>(best_count) / static_cast<double>(n), cfg.confidence,
            cfg.max_iterations);
      }
    }
  }
  if (best_count < static_cast<std::size_t>(cfg.min_inliers)) {
    throw Error(ErrorCode::kNoConsensus,
                fmt::format("best consensus {} below min_inliers {}", best_count,
                            cfg.min_inliers));
  }

  FitResult result;
  result.iterations = it;
  const auto consensus = detail::collect_inliers(best, corr, cfg.inlier_threshold);
  result.transform = detail::fit_subset(corr, consensus);
  result.inlier_indices = detail::collect_inliers(result.transform, corr, cfg.inlier_threshold);
  if (result.inlier_indices.size() < static_cast<std::size_t>(cfg.min_inliers)) {
    // refit drifted away from its own support; keep the hypothesis model
    result.transform = best;
    result.inlier_indices = consensus;
  }
  double sq = 0.0;
  for (auto i : result.inlier_indices) {
    sq += (result.transform.apply(corr.nocs_points[i]) - corr.camera_points[i]).squaredNorm();
  }
  result.rms_residual = std::sqrt(sq / static_cast<double>(result.inlier_indices.size()));
  return result;
}

/// 9-DoF pose of a fit: rotation and translation from the transform, size
/// from the NOCS extent of the inliers times the fitted scale.
inline Pose9D pose_from_fit(const FitResult& fit, const Correspondences& corr) {
  if (fit.inlier_indices.size() < 3) {
    throw Error(ErrorCode::kInsufficientPoints, "pose_from_fit needs at least 3 inliers");
  }
  Vector3d lo = Vector3d::Constant(std::numeric_limits<double>::infinity());
  Vector3d hi = -lo;
  for (auto i : fit.inlier_indices) {
    lo = lo.cwiseMin(corr.nocs_points.at(i));
    hi = hi.cwiseMax(corr.nocs_points.at(i));
  }
  Pose9D pose;
  pose.rotation = fit.transform.rotation;
  pose.translation = fit.transform.translation;
  pose.scale = fit.transform.scale * (hi - lo);
  return pose;
}

/// ransac_fit followed by pose_from_fit; the result's pose is filled in.
inline FitResult fit_pose(const Correspondences& corr, const RansacConfig& cfg) {
  FitResult fit = ransac_fit(corr, cfg);
  fit.pose = pose_from_fit(fit, corr);
  return fit;
}

}  // namespace nocs9d
