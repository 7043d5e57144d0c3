#pragma once

// Iterative camera-pose correction from plane-induced homographies. A
// correspondence source pairs pixels rendered with the current estimate
// against the real camera's observations; each iteration fits a homography,
// decomposes it into a corrected pose, and optionally polishes the pose with
// Gauss-Newton on reprojection error.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "roadforge/error.hpp"
#include "roadforge/homography.hpp"
#include "roadforge/pose.hpp"
#include "roadforge/random.hpp"

namespace roadforge {

using Vector6d = Eigen::Matrix<double, 6, 1>;

struct SceneConfig {
  std::size_t plane_points = 200;
  std::size_t clutter_points = 30;
  double camera_height = 10.0;  // metres above the road plane z = 0
  double pitch_deg = 30.0;      // downward tilt
  Intrinsics K{800.0, 800.0, 640.0, 360.0, 0.0};
  int image_width = 1280;
  int image_height = 720;
  double noise_sigma = 0.0;       // pixels
  double outlier_fraction = 0.0;  // share of matches replaced by random pixels
  std::uint64_t seed = 0;

  void validate() const {
    require_param(plane_points >= 4, "scene needs at least 4 plane points");
    require_param(camera_height > 0.0, "camera_height must be positive");
    require_param(pitch_deg > 0.0 && pitch_deg < 90.0, "pitch_deg must lie in (0, 90)");
    require_param(K.fx > 0.0 && K.fy > 0.0, "focal lengths must be positive");
    require_param(image_width > 0 && image_height > 0, "image size must be positive");
    require_param(noise_sigma >= 0.0, "noise_sigma must be non-negative");
    require_param(outlier_fraction >= 0.0 && outlier_fraction < 1.0, "outlier_fraction must lie in [0, 1)");
  }
};

struct SyntheticScene {
  std::vector<Vector3d> points;  // plane points first, then clutter
  std::size_t plane_count = 0;
  Vector3d plane_normal = Vector3d::UnitZ();  // world plane n^T X = d
  double plane_d = 0.0;
  Pose true_pose;
  Intrinsics K;
  int image_width = 0;
  int image_height = 0;
  std::vector<Vector2d> observed;  // true-camera pixels with sensor noise
  double noise_sigma = 0.0;
  double outlier_fraction = 0.0;
  std::uint64_t seed = 0;
};

/// Camera looking along +y, tilted down by pitch, centred above the origin.
inline Pose pole_camera(double height, double pitch_deg) {
  const double p = pitch_deg * M_PI / 180.0;
  const Vector3d right(1.0, 0.0, 0.0);
  const Vector3d forward(0.0, std::cos(p), -std::sin(p));
  const Vector3d down = forward.cross(right);
  Matrix3d R;
  R.row(0) = right;
  R.row(1) = down;
  R.row(2) = forward;
  return Pose::from_center(R, Vector3d(0.0, 0.0, height));
}

inline SyntheticScene make_scene(const SceneConfig& cfg) {
  cfg.validate();
  SyntheticScene s;
  s.true_pose = pole_camera(cfg.camera_height, cfg.pitch_deg);
  s.K = cfg.K;
  s.image_width = cfg.image_width;
  s.image_height = cfg.image_height;
  s.noise_sigma = cfg.noise_sigma;
  s.outlier_fraction = cfg.outlier_fraction;
  s.seed = cfg.seed;

  Rng rng(derive_seed(cfg.seed, 0x5ce7e));
  const Matrix3d k_inv = cfg.K.inverse();
  const Vector3d c = s.true_pose.center();
  const auto ray = [&](double u, double v) -> Vector3d {
    return s.true_pose.R.transpose() * (k_inv * Vector3d(u, v, 1.0));
  };
  const double margin = 10.0;
  while (s.points.size() < cfg.plane_points) {
    const Vector3d d = ray(uniform(rng, margin, cfg.image_width - margin),
                           uniform(rng, margin, cfg.image_height - margin));
    if (d.z() >= -1e-6) continue;  // at or above the horizon
    const double lambda = -c.z() / d.z();
    if (lambda > 200.0) continue;
    s.points.push_back(c + lambda * d);
  }
  s.plane_count = s.points.size();
  while (s.points.size() < cfg.plane_points + cfg.clutter_points) {
    const Vector3d d = ray(uniform(rng, margin, cfg.image_width - margin),
                           uniform(rng, margin, cfg.image_height - margin));
    if (d.z() >= -1e-6) continue;
    const double ground = -c.z() / d.z();
    if (ground > 200.0) continue;
    // Poles, signs and vehicles: 1 to 5 m above the road along the same ray.
    const double h = uniform(rng, 1.0, std::min(5.0, 0.8 * cfg.camera_height));
    s.points.push_back(c + (ground * (c.z() - h) / c.z()) * d);
  }

  Rng noise(derive_seed(cfg.seed, 0x0b5e));
  s.observed.reserve(s.points.size());
  for (const Vector3d& X : s.points) {
    Vector2d u = project(X, cfg.K, s.true_pose);
    if (cfg.noise_sigma > 0.0) {
      u.x() += normal(noise, 0.0, cfg.noise_sigma);
      u.y() += normal(noise, 0.0, cfg.noise_sigma);
    }
    s.observed.push_back(u);
  }
  return s;
}

/// Rotates by `angle_deg` about a random axis and moves the camera centre by
/// `offset_m` in a random direction. Draws again until the centre stays at
/// least 1 m above the road plane.
inline Pose perturb_pose(const Pose& pose, double angle_deg, double offset_m, Rng& rng) {
  for (;;) {
    Vector3d axis(normal(rng, 0.0, 1.0), normal(rng, 0.0, 1.0), normal(rng, 0.0, 1.0));
    Vector3d dir(normal(rng, 0.0, 1.0), normal(rng, 0.0, 1.0), normal(rng, 0.0, 1.0));
    if (axis.norm() < 1e-9 || dir.norm() < 1e-9) continue;
    const Matrix3d R = so3_exp(axis.normalized() * angle_deg * M_PI / 180.0) * pose.R;
    const Vector3d c = pose.center() + dir.normalized() * offset_m;
    if (c.z() < 1.0) continue;
    return Pose::from_center(R, c);
  }
}

/// One rendered-to-observed pairing with the world point behind it.
struct Match {
  Vector3d world;
  Vector2d rendered;
  Vector2d observed;
};

/// Supplies matches between a view rendered at `estimate` and the real image.
class CorrespondenceSource {
 public:
  virtual ~CorrespondenceSource() = default;
  virtual std::vector<Match> match(const Pose& estimate, int iteration) = 0;
  virtual const Intrinsics& intrinsics() const = 0;
  virtual Vector3d plane_normal() const = 0;
  virtual double plane_d() const = 0;
};

/// Renders scene points in front of the estimated camera and pairs them with
/// the true-camera observations. Per iteration, a fixed share of matches is
/// replaced by uniformly random pixels (mismatches).
class SyntheticMatcher : public CorrespondenceSource {
 public:
  explicit SyntheticMatcher(const SyntheticScene& scene) : scene_(scene) {}

  std::vector<Match> match(const Pose& estimate, int iteration) override {
    std::vector<Match> out;
    for (std::size_t i = 0; i < scene_.points.size(); ++i) {
      const Vector3d& X = scene_.points[i];
      if (!((estimate.R * X + estimate.t).z() > 1e-6)) continue;
      if (!((scene_.true_pose.R * X + scene_.true_pose.t).z() > 1e-6)) continue;
      out.push_back({X, project(X, scene_.K, estimate), scene_.observed[i]});
    }
    if (scene_.outlier_fraction > 0.0 && !out.empty()) {
      Rng rng(derive_seed(scene_.seed, 0x1000 + static_cast<std::uint64_t>(iteration)));
      const auto n_out = static_cast<std::size_t>(std::llround(scene_.outlier_fraction * out.size()));
      std::vector<std::size_t> idx(out.size());
      std::iota(idx.begin(), idx.end(), std::size_t{0});
      for (std::size_t k = 0; k < n_out; ++k) {
        std::swap(idx[k], idx[k + uniform_index(rng, idx.size() - k)]);
        out[idx[k]].observed = Vector2d(uniform(rng, 0.0, scene_.image_width), uniform(rng, 0.0, scene_.image_height));
      }
    }
    return out;
  }

  const Intrinsics& intrinsics() const override { return scene_.K; }
  Vector3d plane_normal() const override { return scene_.plane_normal; }
  double plane_d() const override { return scene_.plane_d; }

 private:
  const SyntheticScene& scene_;
};

struct RefineParams {
  int max_iters = 20;
  double stop_rel_change = 0.05;
  double change_floor = 1e-8;
  RansacParams ransac;
  bool polish = true;
  int gn_max_iters = 50;
  double gn_step_tol = 1e-10;
  int divergence_streak = 3;

  void validate() const {
    require_param(max_iters > 0, "max_iters must be positive");
    require_param(stop_rel_change > 0.0, "stop_rel_change must be positive");
    require_param(change_floor > 0.0, "change_floor must be positive");
    require_param(gn_max_iters > 0, "gn_max_iters must be positive");
    require_param(gn_step_tol > 0.0, "gn_step_tol must be positive");
    require_param(divergence_streak > 0, "divergence_streak must be positive");
    ransac.validate();
  }
};

struct IterationRecord {
  int iteration = 0;
  Pose pose;
  double rotation_error = 0.0;     // radians, against the reference pose if known
  double translation_error = 0.0;  // metres between camera centres
  std::size_t matches = 0;
  std::size_t inliers = 0;
  double rmse = 0.0;  // pixels over RANSAC inliers at the corrected pose
  double rel_change = 0.0;
};

struct RefineResult {
  Pose pose;
  std::vector<IterationRecord> trace;
  bool converged = false;
};

/// Raised when reprojection RMSE grows for `divergence_streak` iterations.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& msg, std::vector<IterationRecord> trace)
      : Error(ErrorKind::Divergence, msg), trace_(std::move(trace)) {}
  const std::vector<IterationRecord>& trace() const { return trace_; }

 private:
  std::vector<IterationRecord> trace_;
};

/// Axis-angle followed by translation.
inline Vector6d pose_vector(const Pose& p) {
  Vector6d v;
  v << so3_log(p.R), p.t;
  return v;
}

/// Left perturbation: R <- Exp(w) R, t <- t + dt, re-projected onto SO(3).
inline Pose apply_increment(const Pose& p, const Vector6d& delta) {
  Pose out;
  out.R = nearest_rotation(so3_exp(delta.head<3>()) * p.R);
  out.t = p.t + delta.tail<3>();
  return out;
}

/// Stacked (u, v) reprojection residuals, projected minus observed.
inline Eigen::VectorXd reprojection_residuals(const std::vector<Vector3d>& X, const std::vector<Vector2d>& obs,
                                              const Intrinsics& K, const Pose& pose) {
  Eigen::VectorXd r(static_cast<Eigen::Index>(2 * X.size()));
  for (std::size_t i = 0; i < X.size(); ++i) r.segment<2>(static_cast<Eigen::Index>(2 * i)) = project(X[i], K, pose) - obs[i];
  return r;
}

/// d residuals / d (w, dt) at zero increment.
inline Eigen::MatrixXd reprojection_jacobian(const std::vector<Vector3d>& X, const Intrinsics& K, const Pose& pose) {
  Eigen::MatrixXd J(static_cast<Eigen::Index>(2 * X.size()), 6);
  for (std::size_t i = 0; i < X.size(); ++i) {
    const Vector3d rx = pose.R * X[i];
    const Vector3d xc = rx + pose.t;
    if (!(xc.z() > 0.0)) fail(ErrorKind::BehindCamera, "point is not in front of the camera");
    const double iz = 1.0 / xc.z();
    Eigen::Matrix<double, 2, 3> dpi;
    dpi << K.fx * iz, K.skew * iz, -(K.fx * xc.x() + K.skew * xc.y()) * iz * iz,
        0.0, K.fy * iz, -K.fy * xc.y() * iz * iz;
    Eigen::Matrix<double, 3, 6> dx;
    dx << -skew_matrix(rx), Matrix3d::Identity();
    J.block<2, 6>(static_cast<Eigen::Index>(2 * i), 0) = dpi * dx;
  }
  return J;
}

/// Gauss-Newton on squared reprojection error. Steps are kept only if they
/// lower the cost.
inline Pose gauss_newton_polish(const std::vector<Vector3d>& X, const std::vector<Vector2d>& obs,
                                const Intrinsics& K, Pose pose, int max_iters, double step_tol) {
  if (X.size() < 3) return pose;
  const auto cost_at = [&](const Pose& p) -> double {
    for (const Vector3d& x : X)
      if (!((p.R * x + p.t).z() > 0.0)) return std::numeric_limits<double>::infinity();
    return reprojection_residuals(X, obs, K, p).squaredNorm();
  };
  double cost = cost_at(pose);
  if (!std::isfinite(cost)) return pose;
  for (int it = 0; it < max_iters; ++it) {
    const Eigen::VectorXd r = reprojection_residuals(X, obs, K, pose);
    const Eigen::MatrixXd J = reprojection_jacobian(X, K, pose);
    const Eigen::Matrix<double, 6, 6> A = J.transpose() * J;
    const Vector6d delta = A.ldlt().solve(-J.transpose() * r);
    if (!delta.allFinite()) break;
    const Pose trial = apply_increment(pose, delta);
    const double c = cost_at(trial);
    if (!(c < cost)) break;
    pose = trial;
    cost = c;
    if (delta.norm() < step_tol) break;
  }
  return pose;
}

inline double reprojection_rmse(const std::vector<Vector3d>& X, const std::vector<Vector2d>& obs,
                                const Intrinsics& K, const Pose& pose) {
  if (X.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < X.size(); ++i) {
    const Vector3d xc = pose.R * X[i] + pose.t;
    if (!(xc.z() > 0.0)) return std::numeric_limits<double>::infinity();
    sum += (project(X[i], K, pose) - obs[i]).squaredNorm();
  }
  return std::sqrt(sum / static_cast<double>(X.size()));
}

/// Iterates render -> match -> RANSAC -> decompose -> polish until the pose
/// vector changes by less than stop_rel_change relative to its previous value.
/// `reference` (if given) fills the error columns of the trace.
inline RefineResult refine_pose(CorrespondenceSource& source, const Pose& initial, const RefineParams& params,
                                const Pose* reference = nullptr) {
  params.validate();
  const Intrinsics& K = source.intrinsics();
  RefineResult out;
  Pose est = initial;
  int rising = 0;
  for (int it = 0; it < params.max_iters; ++it) {
    const std::vector<Match> matches = source.match(est, it);
    CorrespondenceSet pairs;
    pairs.reserve(matches.size());
    for (const Match& m : matches) pairs.push_back({m.rendered, m.observed});
    if (pairs.size() < 4) fail(ErrorKind::InsufficientData, "fewer than 4 scene points in front of the estimated camera");

    RansacParams rp = params.ransac;
    rp.seed = derive_seed(params.ransac.seed, static_cast<std::uint64_t>(it));
    const RansacResult fit = ransac_homography(pairs, rp);
    const Plane plane = plane_in_camera(source.plane_normal(), source.plane_d(), est);
    Pose next = decompose_homography(fit.H, K, K, est, plane);

    std::vector<Vector3d> X;
    std::vector<Vector2d> obs;
    for (std::size_t i = 0; i < matches.size(); ++i) {
      if (!fit.inliers[i]) continue;
      X.push_back(matches[i].world);
      obs.push_back(matches[i].observed);
    }
    if (params.polish) next = gauss_newton_polish(X, obs, K, next, params.gn_max_iters, params.gn_step_tol);

    IterationRecord rec;
    rec.iteration = it + 1;
    rec.pose = next;
    rec.matches = matches.size();
    rec.inliers = fit.inlier_count;
    rec.rmse = reprojection_rmse(X, obs, K, next);
    const Vector6d prev_v = pose_vector(est);
    rec.rel_change = (pose_vector(next) - prev_v).norm() / std::max(prev_v.norm(), params.change_floor);
    if (reference) {
      rec.rotation_error = rotation_distance(next.R, reference->R);
      rec.translation_error = (next.center() - reference->center()).norm();
    }
    if (!out.trace.empty() && rec.rmse > out.trace.back().rmse) {
      ++rising;
    } else {
      rising = 0;
    }
    out.trace.push_back(rec);
    est = next;
    if (rising >= params.divergence_streak)
      throw DivergenceError("reprojection error rose for " + std::to_string(rising) + " consecutive iterations",
                            out.trace);
    if (rec.rel_change < params.stop_rel_change) {
      out.converged = true;
      break;
    }
  }
  out.pose = est;
  return out;
}

inline RefineResult refine_pose(const SyntheticScene& scene, const Pose& initial, const RefineParams& params) {
  SyntheticMatcher matcher(scene);
  return refine_pose(matcher, initial, params, &scene.true_pose);
}

}  // namespace roadforge
