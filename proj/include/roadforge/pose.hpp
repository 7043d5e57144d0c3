#pragma once

// Pinhole cameras, plane-induced homographies between two views of a road
// plane, and the closed-form inverse that recovers the second camera's pose.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "roadforge/error.hpp"

namespace roadforge {

using Eigen::Matrix3d;
using Eigen::Vector2d;
using Eigen::Vector3d;

struct Intrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;
  double skew = 0.0;

  Matrix3d matrix() const {
    Matrix3d k;
    k << fx, skew, cx, 0.0, fy, cy, 0.0, 0.0, 1.0;
    return k;
  }

  Matrix3d inverse() const {
    require_param(fx > 0.0 && fy > 0.0, "focal lengths must be positive");
    return matrix().inverse();
  }
};

/// World-to-camera: x_cam = R * X + t.
struct Pose {
  Matrix3d R = Matrix3d::Identity();
  Vector3d t = Vector3d::Zero();

  Vector3d center() const { return -R.transpose() * t; }
  static Pose from_center(const Matrix3d& R, const Vector3d& c) { return {R, -R * c}; }
};

/// n^T x = d in camera-1 coordinates.
struct Plane {
  Vector3d n = Vector3d::UnitZ();
  double d = 1.0;
};

enum class HomographyMode { Consistent, Verbatim };

inline Matrix3d skew_matrix(const Vector3d& w) {
  Matrix3d s;
  s << 0.0, -w.z(), w.y(), w.z(), 0.0, -w.x(), -w.y(), w.x(), 0.0;
  return s;
}

inline Matrix3d so3_exp(const Vector3d& w) {
  const double theta = w.norm();
  if (theta < 1e-12) return Matrix3d::Identity() + skew_matrix(w);
  return Eigen::AngleAxisd(theta, w / theta).toRotationMatrix();
}

inline Vector3d so3_log(const Matrix3d& R) {
  const Eigen::AngleAxisd aa(R);
  return aa.angle() * aa.axis();
}

/// Closest rotation in the Frobenius sense.
inline Matrix3d nearest_rotation(const Matrix3d& m) {
  Eigen::JacobiSVD<Matrix3d> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Matrix3d d = Matrix3d::Identity();
  d(2, 2) = (svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0 ? -1.0 : 1.0;
  return svd.matrixU() * d * svd.matrixV().transpose();
}

/// Angle in radians of R_a * R_b^T.
inline double rotation_distance(const Matrix3d& a, const Matrix3d& b) {
  const double c = std::clamp(((a * b.transpose()).trace() - 1.0) / 2.0, -1.0, 1.0);
  // acos loses precision near zero; recover small angles from the skew part.
  if (c > 0.99) return so3_log(a * b.transpose()).norm();
  return std::acos(c);
}

/// Frobenius norm 1, largest-magnitude entry positive.
inline Matrix3d normalize_homography(const Matrix3d& h) {
  const double f = h.norm();
  if (!(f > 0.0) || !std::isfinite(f)) fail(ErrorKind::Degenerate, "homography is zero or non-finite");
  Matrix3d out = h / f;
  Eigen::Index r = 0, c = 0;
  out.cwiseAbs().maxCoeff(&r, &c);
  if (out(r, c) < 0.0) out = -out;
  return out;
}

inline Vector2d project(const Vector3d& X, const Intrinsics& K, const Pose& pose) {
  const Vector3d xc = pose.R * X + pose.t;
  if (!(xc.z() > 0.0)) fail(ErrorKind::BehindCamera, "point is not in front of the camera");
  const Vector3d h = K.matrix() * xc;
  return h.head<2>() / h.z();
}

/// Dehomogenised image of pixel x under H.
inline Vector2d apply_homography(const Matrix3d& H, const Vector2d& x) {
  const Vector3d h = H * x.homogeneous();
  return h.head<2>() / h.z();
}

/// Camera-1 to camera-2 motion: x_c2 = R_rel * x_c1 + t_rel.
inline Pose relative_pose(const Pose& pose1, const Pose& pose2) {
  const Matrix3d r = pose2.R * pose1.R.transpose();
  return {r, pose2.t - r * pose1.t};
}

/// World plane n_w^T X = d_w expressed in a camera frame with d > 0.
inline Plane plane_in_camera(const Vector3d& n_world, double d_world, const Pose& pose) {
  Plane p;
  p.n = pose.R * n_world.normalized();
  p.d = d_world + p.n.dot(pose.t);
  if (p.d < 0.0) {
    p.n = -p.n;
    p.d = -p.d;
  }
  return p;
}

/// Consistent: H = K2 (R_rel + t_rel n^T / d) K1^-1, so H x1 ~ x2 for plane
/// points. Verbatim: K2 R2 (I - (t1 - t2) n^T / d) R1^T K1^T taken literally.
inline Matrix3d compose_homography(const Intrinsics& K1, const Intrinsics& K2, const Pose& pose1,
                                   const Pose& pose2, const Plane& plane,
                                   HomographyMode mode = HomographyMode::Consistent) {
  require_param(plane.d > 0.0, "plane distance d must be positive");
  const Vector3d n = plane.n.normalized();
  if (mode == HomographyMode::Verbatim) {
    const Matrix3d mid = Matrix3d::Identity() - (pose1.t - pose2.t) * n.transpose() / plane.d;
    return normalize_homography(K2.matrix() * pose2.R * mid * pose1.R.transpose() * K1.matrix().transpose());
  }
  const Pose rel = relative_pose(pose1, pose2);
  const Matrix3d e = rel.R + rel.t * n.transpose() / plane.d;
  return normalize_homography(K2.matrix() * e * K1.inverse());
}

/// Inverse of the consistent composition: recovers pose2 from H given the
/// plane and pose1.
inline Pose decompose_homography(const Matrix3d& H, const Intrinsics& K1, const Intrinsics& K2,
                                 const Pose& pose1, const Plane& plane) {
  require_param(plane.d > 0.0, "plane distance d must be positive");
  const Vector3d n = plane.n.normalized();
  Matrix3d m = K2.inverse() * H * K1.matrix();

  // Orthonormal basis of the plane-parallel subspace.
  const Vector3d a = std::abs(n.x()) < 0.9 ? Vector3d::UnitX() : Vector3d::UnitY();
  const Vector3d v1 = n.cross(a).normalized();
  const Vector3d v2 = n.cross(v1);

  const double s1 = (m * v1).norm(), s2 = (m * v2).norm();
  const double scale = 0.5 * (s1 + s2);
  if (!(scale > 0.0) || !std::isfinite(scale))
    fail(ErrorKind::InconsistentHomography, "homography annihilates the plane directions");
  if (std::abs(s1 - s2) > 0.01 * scale)
    fail(ErrorKind::InconsistentHomography, "homography scales plane directions inconsistently");
  m /= scale;
  // The relative motion keeps both cameras on one side of the plane, so the
  // Euclidean homography has positive determinant.
  if (m.determinant() < 0.0) m = -m;

  const Vector3d m1 = m * v1, m2 = m * v2;
  Matrix3d src, dst;
  src << v1, v2, v1.cross(v2);
  dst << m1, m2, m1.cross(m2);
  const Matrix3d r_rel = nearest_rotation(dst * src.transpose());
  const Vector3d t_rel = (m - r_rel) * n * plane.d;

  Pose out;
  out.R = r_rel * pose1.R;
  out.t = t_rel + r_rel * pose1.t;
  return out;
}

}  // namespace roadforge
