#pragma once

// Normalised DLT homography estimation and a seeded 4-point RANSAC wrapper.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <vector>

#include "roadforge/error.hpp"
#include "roadforge/pose.hpp"
#include "roadforge/random.hpp"

namespace roadforge {

struct Correspondence {
  Vector2d x1;
  Vector2d x2;
};

using CorrespondenceSet = std::vector<Correspondence>;

struct RansacParams {
  double threshold = 2.0;  // pixels, symmetric transfer error
  double confidence = 0.999;
  int max_trials = 2000;
  std::uint64_t seed = 0;

  void validate() const {
    require_param(threshold > 0.0, "ransac threshold must be positive");
    require_param(confidence > 0.0 && confidence < 1.0, "ransac confidence must lie in (0, 1)");
    require_param(max_trials > 0, "ransac max_trials must be positive");
  }
};

struct RansacResult {
  Matrix3d H;
  std::vector<bool> inliers;
  std::size_t inlier_count = 0;
  int trials = 0;
};

namespace detail {

/// Similarity moving the centroid to the origin with mean distance sqrt(2).
inline Matrix3d hartley_transform(const std::vector<Vector2d>& pts) {
  Vector2d c = Vector2d::Zero();
  for (const auto& p : pts) c += p;
  c /= static_cast<double>(pts.size());
  double mean = 0.0;
  for (const auto& p : pts) mean += (p - c).norm();
  mean /= static_cast<double>(pts.size());
  if (!(mean > 0.0)) fail(ErrorKind::Degenerate, "all correspondence points coincide");
  const double s = std::sqrt(2.0) / mean;
  Matrix3d t;
  t << s, 0.0, -s * c.x(), 0.0, s, -s * c.y(), 0.0, 0.0, 1.0;
  return t;
}

inline bool has_collinear_triple(const std::vector<Vector2d>& p) {
  for (std::size_t i = 0; i < p.size(); ++i)
    for (std::size_t j = i + 1; j < p.size(); ++j)
      for (std::size_t k = j + 1; k < p.size(); ++k) {
        const Vector2d a = p[j] - p[i], b = p[k] - p[i];
        const double scale = a.squaredNorm() + b.squaredNorm();
        if (std::abs(a.x() * b.y() - a.y() * b.x()) <= 1e-10 * scale) return true;
      }
  return false;
}

}  // namespace detail

/// Least-squares DLT in Hartley-normalised coordinates. Maps x1 to x2.
inline Matrix3d estimate_homography(const CorrespondenceSet& pairs) {
  const std::size_t n = pairs.size();
  if (n < 4) fail(ErrorKind::InsufficientData, "homography needs at least 4 correspondences");
  std::vector<Vector2d> a(n), b(n);
  for (std::size_t i = 0; i < n; ++i) {
    a[i] = pairs[i].x1;
    b[i] = pairs[i].x2;
    if (!a[i].allFinite() || !b[i].allFinite()) fail(ErrorKind::Parameter, "non-finite correspondence");
  }
  const Matrix3d ta = detail::hartley_transform(a), tb = detail::hartley_transform(b);
  for (std::size_t i = 0; i < n; ++i) {
    a[i] = (ta * a[i].homogeneous()).head<2>();
    b[i] = (tb * b[i].homogeneous()).head<2>();
  }
  if (n == 4 && (detail::has_collinear_triple(a) || detail::has_collinear_triple(b)))
    fail(ErrorKind::Degenerate, "three of the four correspondences are collinear");

  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(std::max<std::size_t>(2 * n, 9)), 9);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = a[i].x(), y = a[i].y(), u = b[i].x(), v = b[i].y();
    const auto r = static_cast<Eigen::Index>(2 * i);
    A.row(r) << -x, -y, -1.0, 0.0, 0.0, 0.0, u * x, u * y, u;
    A.row(r + 1) << 0.0, 0.0, 0.0, -x, -y, -1.0, v * x, v * y, v;
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  if (!(s(7) > 1e-9 * s(0))) fail(ErrorKind::Degenerate, "degenerate correspondence configuration");
  const Eigen::VectorXd h = svd.matrixV().col(8);
  Matrix3d hn;
  hn << h(0), h(1), h(2), h(3), h(4), h(5), h(6), h(7), h(8);
  return normalize_homography(tb.inverse() * hn * ta);
}

/// Root mean square of forward and backward transfer distances; infinite
/// when either mapping sends the point to infinity.
inline double symmetric_transfer_error(const Matrix3d& H, const Matrix3d& H_inv, const Correspondence& c) {
  const Vector3d f = H * c.x1.homogeneous();
  const Vector3d b = H_inv * c.x2.homogeneous();
  if (std::abs(f.z()) < 1e-300 || std::abs(b.z()) < 1e-300) return std::numeric_limits<double>::infinity();
  const double ef = (f.head<2>() / f.z() - c.x2).squaredNorm();
  const double eb = (b.head<2>() / b.z() - c.x1).squaredNorm();
  return std::sqrt(0.5 * (ef + eb));
}

namespace detail {

inline std::size_t mark_inliers(const Matrix3d& H, const CorrespondenceSet& pairs, double thresh,
                                std::vector<bool>& flags) {
  flags.assign(pairs.size(), false);
  const Eigen::FullPivLU<Matrix3d> lu(H);
  if (!lu.isInvertible()) return 0;
  const Matrix3d inv = lu.inverse();
  std::size_t count = 0;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (symmetric_transfer_error(H, inv, pairs[i]) <= thresh) {
      flags[i] = true;
      ++count;
    }
  }
  return count;
}

}  // namespace detail

/// 4-point RANSAC with adaptive trial count, then a DLT refit on the
/// consensus set repeated until the inlier set is stable.
inline RansacResult ransac_homography(const CorrespondenceSet& pairs, const RansacParams& params) {
  params.validate();
  const std::size_t n = pairs.size();
  if (n < 4) fail(ErrorKind::InsufficientData, "homography needs at least 4 correspondences");

  Rng rng(params.seed);
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::vector<bool> flags, best_flags;
  std::size_t best = 0;
  double needed = params.max_trials;
  int trial = 0;
  for (; trial < params.max_trials && trial < needed; ++trial) {
    for (std::size_t k = 0; k < 4; ++k) std::swap(idx[k], idx[k + uniform_index(rng, n - k)]);
    const CorrespondenceSet sample{pairs[idx[0]], pairs[idx[1]], pairs[idx[2]], pairs[idx[3]]};
    Matrix3d h;
    try {
      h = estimate_homography(sample);
    } catch (const Error&) {
      continue;
    }
    const std::size_t count = detail::mark_inliers(h, pairs, params.threshold, flags);
    if (count > best) {
      best = count;
      best_flags = flags;
      const double w = static_cast<double>(count) / static_cast<double>(n);
      const double miss = 1.0 - std::pow(w, 4.0);
      if (miss <= 0.0) {
        needed = 0.0;
      } else {
        needed = std::log(1.0 - params.confidence) / std::log(miss);
      }
    }
  }
  if (best < 4) fail(ErrorKind::RobustFailure, "no homography model reached 4 inliers");

  RansacResult out;
  out.trials = trial;
  out.inliers = best_flags;
  // Refit until the consensus set is stable; the minimal-sample model
  // clips inliers near the threshold.
  for (int round = 0; round < 10; ++round) {
    CorrespondenceSet consensus;
    for (std::size_t i = 0; i < n; ++i)
      if (out.inliers[i]) consensus.push_back(pairs[i]);
    out.H = estimate_homography(consensus);
    const std::vector<bool> previous = out.inliers;
    out.inlier_count = detail::mark_inliers(out.H, pairs, params.threshold, out.inliers);
    if (out.inlier_count < 4) fail(ErrorKind::RobustFailure, "refit homography lost its consensus set");
    if (out.inliers == previous) break;
  }
  return out;
}

}  // namespace roadforge
