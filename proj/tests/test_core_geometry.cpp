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

#include <cmath>
#include <limits>
#include <random>

#include <gtest/gtest.h>

#include "nocs9d/core_geometry.hpp"
#include "test_util.hpp"

namespace nocs9d {
namespace {

using testing::random_rotation;
using testing::random_similarity;
using testing::random_vector;

void expect_transform_near(const SimilarityTransform& a, const SimilarityTransform& b, double tol) {
  EXPECT_NEAR(a.scale, b.scale, tol);
  EXPECT_LE((a.rotation - b.rotation).cwiseAbs().maxCoeff(), tol);
  EXPECT_LE((a.translation - b.translation).cwiseAbs().maxCoeff(), tol);
}

TEST(Compose, IdentityIsNeutral) {
  std::mt19937_64 rng(1);
  const auto t = random_similarity(rng);
  expect_transform_near(compose(SimilarityTransform::identity(), t), t, 0.0);
  expect_transform_near(compose(t, SimilarityTransform::identity()), t, 1e-15);
}

TEST(Compose, WithInverseIsIdentity) {
  std::mt19937_64 rng(2);
  const auto t = random_similarity(rng);
  expect_transform_near(compose(t, invert(t)), SimilarityTransform::identity(), 1e-9);
}

TEST(Compose, PureScalesMultiply) {
  const SimilarityTransform two{2.0, Matrix3d::Identity(), Vector3d::Zero()};
  const SimilarityTransform three{3.0, Matrix3d::Identity(), Vector3d::Zero()};
  const auto six = compose(two, three);
  EXPECT_DOUBLE_EQ(six.scale, 6.0);
  EXPECT_EQ(six.rotation, Matrix3d::Identity());
  EXPECT_EQ(six.translation, Vector3d::Zero());
  std::mt19937_64 rng(3);
  for (int i = 0; i < 10; ++i) {
    const Vector3d x = random_vector(rng, -1.0, 1.0);
    EXPECT_LE((six.apply(x) - two.apply(three.apply(x))).norm(), 1e-12);
  }
}

TEST(Compose, ActionMatchesSequentialApplication) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    const auto a = random_similarity(rng);
    const auto b = random_similarity(rng);
    const auto ab = compose(a, b);
    for (int i = 0; i < 10; ++i) {
      const Vector3d x = random_vector(rng, -1.0, 1.0);
      EXPECT_LE((ab.apply(x) - a.apply(b.apply(x))).norm(), 1e-9);
    }
  }
}

TEST(Compose, Associative) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const auto a = random_similarity(rng);
    const auto b = random_similarity(rng);
    const auto c = random_similarity(rng);
    expect_transform_near(compose(compose(a, b), c), compose(a, compose(b, c)), 1e-9);
  }
}

TEST(Invert, Identity) {
  expect_transform_near(invert(SimilarityTransform::identity()), SimilarityTransform::identity(), 0.0);
}

TEST(Invert, PureTranslation) {
  const Vector3d v(0.3, -1.2, 4.5);
  const auto inv = invert(SimilarityTransform::rigid(Matrix3d::Identity(), v));
  EXPECT_EQ(inv.scale, 1.0);
  EXPECT_EQ(inv.rotation, Matrix3d::Identity());
  EXPECT_EQ(inv.translation, -v);
}

TEST(Invert, RoundTripOnRandomSimilarities) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    std::mt19937_64 rng(seed);
    const auto t = random_similarity(rng);
    expect_transform_near(compose(t, invert(t)), SimilarityTransform::identity(), 1e-9);
    expect_transform_near(compose(invert(t), t), SimilarityTransform::identity(), 1e-9);
  }
}

TEST(Invert, RejectsNonFinite) {
  SimilarityTransform t;
  t.translation.x() = std::numeric_limits<double>::quiet_NaN();
  try {
    invert(t);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInvalidTransform);
  }
  t = SimilarityTransform::identity();
  t.scale = std::numeric_limits<double>::infinity();
  EXPECT_THROW(invert(t), Error);
  t.scale = 0.0;
  EXPECT_THROW(invert(t), Error);
}

TEST(Geodesic, IdentityPair) {
  EXPECT_EQ(rotation_geodesic_deg(Matrix3d::Identity(), Matrix3d::Identity()), 0.0);
}

TEST(Geodesic, NinetyAboutZ) {
  Matrix3d rz;
  rz << 0, -1, 0, 1, 0, 0, 0, 0, 1;
  EXPECT_NEAR(rotation_geodesic_deg(Matrix3d::Identity(), rz), 90.0, 1e-12);
}

TEST(Geodesic, MatchesAxisAngleOracle) {
  std::mt19937_64 rng(6);
  for (int i = 0; i < 1000; ++i) {
    const Matrix3d a = random_rotation(rng);
    const Matrix3d b = random_rotation(rng);
    const double oracle = Eigen::AngleAxisd(Matrix3d(a.transpose() * b)).angle() * 180.0 / M_PI;
    EXPECT_NEAR(rotation_geodesic_deg(a, b), oracle, 1e-6);
  }
}

TEST(Geodesic, ClampsNearZeroAndPi) {
  // a product of rotations whose trace exceeds 3 by rounding
  const Matrix3d r = axis_angle(Vector3d(1, 2, 3), 1e-9);
  EXPECT_FALSE(std::isnan(rotation_geodesic_deg(r, r)));
  const Matrix3d flip = axis_angle(Vector3d(1, 1, 0), M_PI);
  EXPECT_NEAR(rotation_geodesic_deg(Matrix3d::Identity(), flip), 180.0, 1e-6);
}

TEST(Geodesic, IsAMetric) {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 1000; ++i) {
    const Matrix3d a = random_rotation(rng);
    const Matrix3d b = random_rotation(rng);
    const Matrix3d c = random_rotation(rng);
    const double ab = rotation_geodesic_deg(a, b);
    EXPECT_GE(ab, 0.0);
    EXPECT_NEAR(ab, rotation_geodesic_deg(b, a), 1e-6);
    EXPECT_LE(rotation_geodesic_deg(a, c), ab + rotation_geodesic_deg(b, c) + 1e-6);
  }
  const Matrix3d r = random_rotation(rng);
  EXPECT_NEAR(rotation_geodesic_deg(r, r), 0.0, 1e-5);
}

TEST(IsRotation, Invariants) {
  std::mt19937_64 rng(8);
  EXPECT_TRUE(is_rotation(random_rotation(rng)));
  EXPECT_FALSE(is_rotation(Matrix3d(Vector3d(1, 1, -1).asDiagonal())));  // reflection
  EXPECT_FALSE(is_rotation(2.0 * Matrix3d::Identity()));
}

TEST(Pose9D, Validation) {
  Pose9D p;
  EXPECT_TRUE(p.valid());
  p.scale.y() = 0.0;
  EXPECT_FALSE(p.valid());
  EXPECT_THROW(p.validate(), Error);
  p = Pose9D{};
  p.translation.z() = std::numeric_limits<double>::infinity();
  EXPECT_FALSE(p.valid());
}

TEST(CameraIntrinsics, Validation) {
  EXPECT_TRUE(CameraIntrinsics({500, 500, 320, 240, 640, 480}).valid());
  EXPECT_FALSE(CameraIntrinsics({-1, 500, 320, 240, 640, 480}).valid());
  EXPECT_FALSE(CameraIntrinsics({500, 500, 640, 240, 640, 480}).valid());
  EXPECT_FALSE(CameraIntrinsics({500, 500, 320, -1, 640, 480}).valid());
}

TEST(Backproject, PrincipalPoint) {
  const CameraIntrinsics k{100.0, 120.0, 2.0, 1.0, 5, 3};
  DepthMap depth(5, 3, 0.0);
  Mask mask(5, 3, 0);
  depth(2, 1) = 1.0;
  mask(2, 1) = 1;
  const auto pts = backproject(depth, k, mask);
  ASSERT_EQ(pts.size(), 1u);
  EXPECT_EQ(pts[0].u, 2);
  EXPECT_EQ(pts[0].v, 1);
  EXPECT_EQ(pts[0].point, Vector3d(0.0, 0.0, 1.0));
}

TEST(Backproject, ConstantPlane) {
  const auto k = testing::small_camera();
  DepthMap depth(k.width, k.height, 2.0);
  Mask mask(k.width, k.height, 1);
  const auto pts = backproject(depth, k, mask);
  EXPECT_EQ(pts.size(), static_cast<std::size_t>(k.width * k.height));
  for (const auto& p : pts) EXPECT_EQ(p.point.z(), 2.0);
}

TEST(Backproject, SkipsUnmaskedAndInvalidDepth) {
  const CameraIntrinsics k{100.0, 100.0, 1.0, 1.0, 3, 3};
  DepthMap depth(3, 3, 1.0);
  Mask mask(3, 3, 1);
  depth(0, 0) = 0.0;
  depth(1, 0) = -1.0;
  mask(2, 2) = 0;
  EXPECT_EQ(backproject(depth, k, mask).size(), 6u);
}

TEST(Backproject, ResolutionMismatch) {
  const CameraIntrinsics k{100.0, 100.0, 1.0, 1.0, 3, 3};
  try {
    backproject(DepthMap(4, 3), k, Mask(4, 3));
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDimension);
  }
  EXPECT_THROW(backproject(DepthMap(3, 3), k, Mask(3, 2)), Error);
}

TEST(Backproject, ProjectRoundTrip) {
  const auto k = testing::small_camera();
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> xy(-0.5, 0.5);
  std::uniform_real_distribution<double> z(0.3, 4.0);
  for (int i = 0; i < 1000; ++i) {
    const Vector3d p(xy(rng), xy(rng), z(rng));
    const Vector2d uv = project(p, k);
    EXPECT_LE((backproject_pixel(uv.x(), uv.y(), p.z(), k) - p).norm(), 1e-6);
  }
}

}  // namespace
}  // namespace nocs9d
