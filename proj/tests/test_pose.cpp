#include <gtest/gtest.h>

#include <cmath>

#include "roadforge/pose.hpp"
#include "roadforge/random.hpp"
#include "support/pose_configs.hpp"
#include "support/test_util.hpp"

using namespace roadforge;
using roadforge::testing::kind_of;
using roadforge::testing::random_two_view;

namespace {

const Intrinsics kUnitK{1, 1, 0, 0, 0};

Pose random_pose(Rng& rng) {
  return {so3_exp(roadforge::testing::random_unit(rng) * uniform(rng, 0, M_PI)),
          Eigen::Vector3d(uniform(rng, -5, 5), uniform(rng, -5, 5), uniform(rng, -5, 5))};
}

}  // namespace

TEST(Project, UnitCamera) {
  EXPECT_EQ(project({0, 0, 1}, kUnitK, Pose{}), Eigen::Vector2d(0, 0));
  EXPECT_EQ(project({2, 3, 1}, kUnitK, Pose{}), Eigen::Vector2d(2, 3));
  EXPECT_EQ(kind_of([] { project({0, 0, -1}, kUnitK, Pose{}); }), ErrorKind::BehindCamera);
  EXPECT_EQ(kind_of([] { project({1, 0, 0}, kUnitK, Pose{}); }), ErrorKind::BehindCamera);
}

TEST(Project, MatchesStepByStepOracle) {
  Rng rng(1);
  for (int i = 0; i < 500; ++i) {
    const Intrinsics K = roadforge::testing::random_intrinsics(rng);
    const Pose pose = random_pose(rng);
    const Eigen::Vector3d X(uniform(rng, -10, 10), uniform(rng, -10, 10), uniform(rng, -10, 10));
    double xc[3];
    for (int r = 0; r < 3; ++r) xc[r] = pose.R(r, 0) * X.x() + pose.R(r, 1) * X.y() + pose.R(r, 2) * X.z() + pose.t(r);
    if (xc[2] <= 0) {
      EXPECT_EQ(kind_of([&] { project(X, K, pose); }), ErrorKind::BehindCamera);
      continue;
    }
    const double u = (K.fx * xc[0] + K.skew * xc[1]) / xc[2] + K.cx;
    const double v = K.fy * xc[1] / xc[2] + K.cy;
    const Eigen::Vector2d p = project(X, K, pose);
    EXPECT_NEAR(p.x(), u, 1e-9 * std::max(1.0, std::fabs(u)));
    EXPECT_NEAR(p.y(), v, 1e-9 * std::max(1.0, std::fabs(v)));
  }
}

TEST(Rotation, HelpersStayOrthonormal) {
  Rng rng(2);
  for (int i = 0; i < 200; ++i) {
    const Eigen::Vector3d w = roadforge::testing::random_unit(rng) * uniform(rng, 0, 3.1);
    const Eigen::Matrix3d R = so3_exp(w);
    EXPECT_LT((R.transpose() * R - Eigen::Matrix3d::Identity()).norm(), 1e-12);
    EXPECT_NEAR(R.determinant(), 1.0, 1e-12);
    EXPECT_LT((so3_log(R) - w).norm(), 1e-9);
    EXPECT_NEAR(rotation_distance(R, Eigen::Matrix3d::Identity()), w.norm(), 1e-9);
    Eigen::Matrix3d noisy = R;
    noisy(0, 1) += 1e-3;
    const Eigen::Matrix3d fixed = nearest_rotation(noisy);
    EXPECT_LT((fixed.transpose() * fixed - Eigen::Matrix3d::Identity()).norm(), 1e-12);
  }
}

TEST(Compose, SamePoseGivesIdentity) {
  Rng rng(3);
  const Pose p = random_pose(rng);
  Plane plane;
  plane.d = 4;
  const Eigen::Matrix3d I = normalize_homography(Eigen::Matrix3d::Identity());
  EXPECT_LT((compose_homography(kUnitK, kUnitK, p, p, plane) - I).norm(), 1e-12);
  EXPECT_LT((compose_homography(kUnitK, kUnitK, p, p, plane, HomographyMode::Verbatim) - I).norm(), 1e-12);
}

TEST(Compose, TranslationAlongNormalCollapsesIt) {
  Plane plane;
  plane.n = {0, 0, 1};
  plane.d = 2.5;
  Pose p1, p2;
  p1.t = {0.3, -0.2, 1.0};
  p2.t = p1.t - plane.d * plane.n;
  const Eigen::Matrix3d H = compose_homography(kUnitK, kUnitK, p1, p2, plane);
  const Eigen::Matrix3d expected = normalize_homography(Eigen::Vector3d(1, 1, 0).asDiagonal());
  EXPECT_LT((H - expected).norm(), 1e-12);
  EXPECT_EQ(kind_of([&] { compose_homography(kUnitK, kUnitK, p1, p2, Plane{{0, 0, 1}, 0.0}); }), ErrorKind::Parameter);
}

TEST(Compose, TransfersPlanePointsBetweenViews) {
  Rng rng(4);
  for (int i = 0; i < 100; ++i) {
    const auto c = random_two_view(rng);
    const Eigen::Matrix3d H = compose_homography(c.K1, c.K2, c.pose1, c.pose2, c.plane);
    for (const Eigen::Vector3d& X : c.plane_points) {
      const Eigen::Vector2d x1 = project(X, c.K1, c.pose1), x2 = project(X, c.K2, c.pose2);
      EXPECT_LT((apply_homography(H, x1) - x2).norm(), 1e-7);
    }
  }
}

TEST(Decompose, SamePoseIsRecoveredExactly) {
  Rng rng(5);
  const auto c = random_two_view(rng);
  const Eigen::Matrix3d H = compose_homography(c.K1, c.K1, c.pose1, c.pose1, c.plane);
  const Pose back = decompose_homography(H, c.K1, c.K1, c.pose1, c.plane);
  EXPECT_LT(rotation_distance(back.R, c.pose1.R), 1e-12);
  EXPECT_LT((back.t - c.pose1.t).norm(), 1e-10);
}

TEST(Decompose, RoundTripRecoversSecondPose) {
  Rng rng(6);
  for (int i = 0; i < 300; ++i) {
    const auto c = random_two_view(rng);
    const Eigen::Matrix3d H = compose_homography(c.K1, c.K2, c.pose1, c.pose2, c.plane);
    const Pose back = decompose_homography(H, c.K1, c.K2, c.pose1, c.plane);
    EXPECT_LT(rotation_distance(back.R, c.pose2.R), 1e-7);
    EXPECT_LT((back.t - c.pose2.t).norm(), 1e-7);
  }
}

TEST(Decompose, InvariantToScale) {
  Rng rng(7);
  for (int i = 0; i < 50; ++i) {
    const auto c = random_two_view(rng);
    const Eigen::Matrix3d H = compose_homography(c.K1, c.K2, c.pose1, c.pose2, c.plane);
    const Pose ref = decompose_homography(H, c.K1, c.K2, c.pose1, c.plane);
    for (double lambda : {-3.0, 0.5, 10.0}) {
      EXPECT_LT((normalize_homography(lambda * H) - H).norm(), 1e-12);
      const Pose p = decompose_homography(lambda * H, c.K1, c.K2, c.pose1, c.plane);
      EXPECT_LT(rotation_distance(p.R, ref.R), 1e-9);
      EXPECT_LT((p.t - ref.t).norm(), 1e-9);
    }
  }
}

TEST(Decompose, SmallNoiseGivesSmallRotationError) {
  Rng rng(8);
  for (int i = 0; i < 200; ++i) {
    const auto c = random_two_view(rng);
    Eigen::Matrix3d H = compose_homography(c.K1, c.K2, c.pose1, c.pose2, c.plane);
    for (int k = 0; k < 9; ++k) H(k / 3, k % 3) *= 1.0 + 1e-4 * normal(rng, 0, 1);
    const Pose p = decompose_homography(H, c.K1, c.K2, c.pose1, c.plane);
    EXPECT_LT(rotation_distance(p.R, c.pose2.R) * 180.0 / M_PI, 0.1);
  }
}

TEST(Decompose, AnisotropicPlaneScalingIsInconsistent) {
  Plane plane;
  plane.d = 3;
  const Eigen::Matrix3d H = Eigen::Vector3d(1, 2, 1).asDiagonal();
  EXPECT_EQ(kind_of([&] { decompose_homography(H, kUnitK, kUnitK, Pose{}, plane); }), ErrorKind::InconsistentHomography);
}

TEST(PlaneFrame, DistanceIsPositiveAndMatchesGeometry) {
  Rng rng(9);
  for (int i = 0; i < 100; ++i) {
    const auto c = random_two_view(rng);
    EXPECT_GT(c.plane.d, 0.0);
    for (const Eigen::Vector3d& X : c.plane_points) {
      const Eigen::Vector3d xc = c.pose1.R * X + c.pose1.t;
      EXPECT_NEAR(c.plane.n.dot(xc), c.plane.d, 1e-9);
    }
  }
}
