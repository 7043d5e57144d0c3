#pragma once

// JSON encodings of synthetic scenes and refinement traces.

#include <json.hpp>
#include <string>

#include "roadforge/refine.hpp"

namespace roadforge {

inline constexpr int kPoseSchemaVersion = 1;

inline nlohmann::json vec_json(const Eigen::VectorXd& v) {
  nlohmann::json a = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

inline nlohmann::json pose_json(const Pose& p) {
  nlohmann::json rows = nlohmann::json::array();
  for (int r = 0; r < 3; ++r) rows.push_back(vec_json(p.R.row(r).transpose()));
  return {{"R", rows}, {"t", vec_json(p.t)}, {"center", vec_json(p.center())}};
}

inline nlohmann::json intrinsics_json(const Intrinsics& k) {
  return {{"fx", k.fx}, {"fy", k.fy}, {"cx", k.cx}, {"cy", k.cy}, {"skew", k.skew}};
}

inline nlohmann::json scene_json(const SyntheticScene& s) {
  nlohmann::json points = nlohmann::json::array();
  for (std::size_t i = 0; i < s.points.size(); ++i) {
    points.push_back({{"world", vec_json(s.points[i])},
                      {"observed", vec_json(s.observed[i])},
                      {"on_plane", i < s.plane_count}});
  }
  return {{"schema_version", kPoseSchemaVersion},
          {"plane", {{"normal", vec_json(s.plane_normal)}, {"d", s.plane_d}}},
          {"true_pose", pose_json(s.true_pose)},
          {"intrinsics", intrinsics_json(s.K)},
          {"image", {{"width", s.image_width}, {"height", s.image_height}}},
          {"noise", {{"sigma_px", s.noise_sigma}, {"outlier_fraction", s.outlier_fraction}, {"seed", s.seed}}},
          {"points", points}};
}

inline nlohmann::json trace_json(const std::vector<IterationRecord>& trace) {
  nlohmann::json a = nlohmann::json::array();
  for (const IterationRecord& r : trace) {
    a.push_back({{"iteration", r.iteration},
                 {"pose", pose_json(r.pose)},
                 {"rotation_error_rad", r.rotation_error},
                 {"translation_error_m", r.translation_error},
                 {"matches", r.matches},
                 {"inliers", r.inliers},
                 {"rmse_px", r.rmse},
                 {"rel_change", r.rel_change}});
  }
  return a;
}

}  // namespace roadforge
