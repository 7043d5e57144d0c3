#pragma once

// Progressive TIN densification ground filter with a halving grid pyramid,
// virtual corner seeds, and the non-obtuse / normal-deviation constraints.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "roadforge/cloud.hpp"
#include "roadforge/error.hpp"
#include "roadforge/tin.hpp"

namespace roadforge {

enum class CornerSeedMode { NearestSeedZ, IdwK3 };

inline const char* to_string(CornerSeedMode m) {
  return m == CornerSeedMode::NearestSeedZ ? "nearest_seed_z" : "idw_k3";
}

struct FilterParams {
  double initial_cell = 40.0;   // m, larger than the largest building
  double min_cell = 2.0;        // m, pyramid floor
  double dist_thresh = 0.3;     // m
  double angle_thresh = 8.0;    // degrees
  double normal_limit = 90.0;   // degrees
  bool enable_nonobtuse = true;
  bool enable_normal = true;
  CornerSeedMode corner_seed_mode = CornerSeedMode::NearestSeedZ;

  void validate() const {
    require_param(min_cell > 0.0, "min_cell must be positive");
    require_param(initial_cell > min_cell, "initial_cell must exceed min_cell");
    require_param(dist_thresh > 0.0, "dist_thresh must be positive");
    require_param(angle_thresh > 0.0 && angle_thresh < 90.0, "angle_thresh must lie in (0, 90)");
    require_param(normal_limit > 0.0 && normal_limit <= 90.0, "normal_limit must lie in (0, 90]");
  }
};

struct SeedSet {
  std::vector<std::size_t> real;   // point indices, one per non-empty cell
  std::vector<Vertex> virtual_seeds;
};

struct LevelRecord {
  double cell = 0.0;
  std::size_t seeds_added = 0;
  std::size_t accepted = 0;
};

struct GroundResult {
  std::vector<std::size_t> ground;
  std::vector<std::size_t> nonground;
  std::vector<LevelRecord> levels;
  std::size_t final_pass_accepted = 0;
  std::size_t virtual_seeds = 0;
};

/// One accepted densification step, kept for audit.
struct AcceptanceRecord {
  std::size_t point_index = 0;
  std::vector<SplitTriangle> split;
};

inline constexpr double kDotEpsilon = 1e-12;

/// Grid cell index of (x, y) for a grid anchored at (x0, y0).
inline std::pair<long long, long long> grid_cell(double x, double y, double x0, double y0,
                                                 double cell) {
  return {static_cast<long long>(std::floor((x - x0) / cell)),
          static_cast<long long>(std::floor((y - y0) / cell))};
}

/// Lowest point of every non-empty grid cell among `indices` (ties: lowest
/// point index). Returned in (row, col) cell order.
inline std::vector<std::size_t> lowest_per_cell(const PointCloud& cloud,
                                                const std::vector<std::size_t>& indices,
                                                double cell, double x0, double y0) {
  require_param(cell > 0.0, "seed cell size must be positive");
  std::map<std::pair<long long, long long>, std::size_t> best;
  for (std::size_t i : indices) {
    const Point& p = cloud[i];
    const auto [cx, cy] = grid_cell(p.x, p.y, x0, y0, cell);
    const auto key = std::pair(cy, cx);
    auto it = best.find(key);
    if (it == best.end()) {
      best.emplace(key, i);
    } else {
      const Point& q = cloud[it->second];
      if (p.z < q.z || (p.z == q.z && i < it->second)) it->second = i;
    }
  }
  std::vector<std::size_t> out;
  out.reserve(best.size());
  for (const auto& [key, i] : best) out.push_back(i);
  return out;
}

inline SeedSet select_seeds(const PointCloud& cloud, double cell) {
  if (cloud.empty()) fail(ErrorKind::EmptyInput, "seed selection on an empty cloud");
  require_param(cell > 0.0, "seed cell size must be positive");
  const Bounds b = bounds(cloud);
  std::vector<std::size_t> all(cloud.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return {lowest_per_cell(cloud, all, cell, b.min_x, b.min_y), {}};
}

/// Four vertices at the XY bounding-box corners, elevations interpolated
/// from the real seeds. Order: (min,min), (max,min), (max,max), (min,max).
inline std::vector<Vertex> virtual_corner_seeds(const Bounds& b, const std::vector<Vertex>& seeds,
                                                CornerSeedMode mode) {
  if (seeds.empty()) fail(ErrorKind::EmptyInput, "virtual corners need at least one seed");
  const std::array<std::pair<double, double>, 4> corners{
      {{b.min_x, b.min_y}, {b.max_x, b.min_y}, {b.max_x, b.max_y}, {b.min_x, b.max_y}}};
  std::vector<Vertex> out;
  for (const auto& [cx, cy] : corners) {
    std::vector<std::pair<double, std::size_t>> by_dist;
    by_dist.reserve(seeds.size());
    for (std::size_t i = 0; i < seeds.size(); ++i) {
      const double dx = seeds[i].x - cx, dy = seeds[i].y - cy;
      by_dist.emplace_back(dx * dx + dy * dy, i);
    }
    const std::size_t k = mode == CornerSeedMode::NearestSeedZ ? 1 : std::min<std::size_t>(3, seeds.size());
    std::partial_sort(by_dist.begin(), by_dist.begin() + static_cast<std::ptrdiff_t>(k), by_dist.end());
    double z = 0.0;
    if (by_dist[0].first == 0.0 || k == 1) {
      z = seeds[by_dist[0].second].z;
    } else {
      double wsum = 0.0;
      for (std::size_t j = 0; j < k; ++j) {
        const double w = 1.0 / by_dist[j].first;  // inverse distance, power 2
        wsum += w;
        z += w * seeds[by_dist[j].second].z;
      }
      z /= wsum;
    }
    out.push_back(Vertex::virtual_at(cx, cy, z));
  }
  return out;
}

/// True iff no interior angle of triangle abc is obtuse (right angles pass).
inline bool nonobtuse_ok(const Eigen::Vector3d& a, const Eigen::Vector3d& b, const Eigen::Vector3d& c) {
  if (!((b - a).cross(c - a).norm() > 0.0)) fail(ErrorKind::Degenerate, "degenerate triangle");
  return (b - a).dot(c - a) >= -kDotEpsilon && (a - b).dot(c - b) >= -kDotEpsilon &&
         (a - c).dot(b - c) >= -kDotEpsilon;
}

namespace detail {

inline bool acute_or_right_at(const Eigen::Vector3d& corner, const Eigen::Vector3d& a,
                              const Eigen::Vector3d& b) {
  return (a - corner).dot(b - corner) >= -kDotEpsilon;
}

}  // namespace detail

/// Non-obtuse constraint for a split triangle (u, w, p) cut from `parent`:
/// fails iff a corner angle at u or w that is not obtuse in the parent
/// becomes obtuse in the split triangle.
inline bool split_keeps_nonobtuse(const std::array<Eigen::Vector3d, 3>& parent,
                                  const Eigen::Vector3d& u, const Eigen::Vector3d& w,
                                  const Eigen::Vector3d& p) {
  if (!((w - u).cross(p - u).norm() > 0.0)) fail(ErrorKind::Degenerate, "degenerate triangle");
  auto parent_ok_at = [&](const Eigen::Vector3d& corner) {
    for (int k = 0; k < 3; ++k) {
      if (parent[k] == corner)
        return detail::acute_or_right_at(parent[k], parent[(k + 1) % 3], parent[(k + 2) % 3]);
    }
    return true;
  };
  if (parent_ok_at(u) && !detail::acute_or_right_at(u, w, p)) return false;
  if (parent_ok_at(w) && !detail::acute_or_right_at(w, u, p)) return false;
  return true;
}

/// True iff the angle between two upward normals is below `limit_deg`.
inline bool normal_ok(const Eigen::Vector3d& existing, const Eigen::Vector3d& candidate,
                      double limit_deg = 90.0) {
  const double ne = existing.norm(), nc = candidate.norm();
  if (!(ne > 0.0) || !(nc > 0.0)) fail(ErrorKind::Degenerate, "zero normal");
  const double cosang = existing.dot(candidate) / (ne * nc);
  if (limit_deg >= 90.0) return cosang > kDotEpsilon;
  return cosang > std::cos(limit_deg * 3.14159265358979323846 / 180.0);
}

namespace detail {

enum class Verdict { Accept, AcceptDuplicate, Reject };

inline Verdict judge(const Tin& tin, const Location& loc, const Point& p, const FilterParams& params,
                     std::vector<SplitTriangle>* split_out) {
  if (loc.kind == LocateKind::Outside) return Verdict::Reject;
  if (loc.kind == LocateKind::OnVertex) {
    const Vertex& v = tin.vertex(tin.triangle(loc.triangle).v[loc.slot]);
    return std::fabs(p.z - v.z) <= params.dist_thresh ? Verdict::AcceptDuplicate : Verdict::Reject;
  }
  try {
    if (vertical_distance(tin, loc.triangle, p) > params.dist_thresh) return Verdict::Reject;
    if (vertex_angle(tin, loc.triangle, p) > params.angle_thresh) return Verdict::Reject;
    if (!params.enable_nonobtuse && !params.enable_normal) return Verdict::Accept;

    const Vertex candidate{p.x, p.y, p.z, std::nullopt};
    std::vector<SplitTriangle> split = tin.split_preview(loc, candidate);
    for (const SplitTriangle& s : split) {
      if (params.enable_nonobtuse) {
        const Triangle& par = tin.triangle(s.parent);
        const std::array<Eigen::Vector3d, 3> parent{tin.vertex(par.v[0]).xyz(), tin.vertex(par.v[1]).xyz(),
                                                    tin.vertex(par.v[2]).xyz()};
        if (!split_keeps_nonobtuse(parent, s.corners[0], s.corners[1], s.corners[2]))
          return Verdict::Reject;
      }
      if (params.enable_normal) {
        const Eigen::Vector3d n_new = Tin::upward_normal(s.corners[0], s.corners[1], s.corners[2]);
        if (!normal_ok(tin.normal(s.parent), n_new, params.normal_limit)) return Verdict::Reject;
      }
    }
    if (split_out) *split_out = std::move(split);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Degenerate) return Verdict::Reject;
    throw;
  }
  return Verdict::Accept;
}

}  // namespace detail

/// Offers candidates to the TIN until a full pass accepts nothing.
/// Accepted points are inserted immediately. Returns accepted indices in
/// acceptance order.
inline std::vector<std::size_t> densify_level(Tin& tin, const PointCloud& cloud,
                                              std::vector<std::size_t> candidates,
                                              const FilterParams& params,
                                              std::vector<AcceptanceRecord>* log = nullptr) {
  std::vector<std::size_t> accepted;
  int hint = 0;
  std::vector<SplitTriangle> split;
  while (!candidates.empty()) {
    std::vector<std::size_t> remaining;
    remaining.reserve(candidates.size());
    const std::size_t before = accepted.size();
    for (std::size_t idx : candidates) {
      const Point& p = cloud[idx];
      const Location loc = tin.walk(p.x, p.y, hint);
      if (loc.kind != LocateKind::Outside) hint = loc.triangle;
      split.clear();
      switch (detail::judge(tin, loc, p, params, log ? &split : nullptr)) {
        case detail::Verdict::Accept:
          tin.insert_at(Vertex::from_point(p, idx), loc);
          accepted.push_back(idx);
          if (log) log->push_back({idx, split});
          break;
        case detail::Verdict::AcceptDuplicate:
          accepted.push_back(idx);
          if (log) log->push_back({idx, {}});
          break;
        case detail::Verdict::Reject:
          remaining.push_back(idx);
          break;
      }
    }
    if (accepted.size() == before) break;
    candidates = std::move(remaining);
  }
  return accepted;
}

/// Pyramid cell sizes: initial_cell halved while not below min_cell.
inline std::vector<double> pyramid_cells(const FilterParams& params) {
  std::vector<double> cells;
  for (double c = params.initial_cell; c >= params.min_cell; c /= 2.0) cells.push_back(c);
  return cells;
}

inline GroundResult filter_ground(const PointCloud& cloud, const FilterParams& params,
                                  std::vector<AcceptanceRecord>* log = nullptr) {
  params.validate();
  if (cloud.empty()) fail(ErrorKind::EmptyInput, "ground filter on an empty cloud");
  const Bounds b = bounds(cloud);
  const std::vector<double> cells = pyramid_cells(params);

  std::vector<char> ground(cloud.size(), 0);
  std::vector<std::size_t> all(cloud.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;

  GroundResult result;
  const std::vector<std::size_t> seeds = lowest_per_cell(cloud, all, cells[0], b.min_x, b.min_y);
  if (seeds.size() < 3) fail(ErrorKind::Degenerate, "fewer than 3 seed points");

  std::vector<Vertex> verts;
  verts.reserve(seeds.size() + 4);
  for (std::size_t i : seeds) verts.push_back(Vertex::from_point(cloud[i], i));
  for (const Vertex& c : virtual_corner_seeds(b, verts, params.corner_seed_mode)) {
    const bool taken = std::any_of(verts.begin(), verts.end(),
                                   [&](const Vertex& v) { return v.x == c.x && v.y == c.y; });
    if (!taken) {
      verts.push_back(c);
      ++result.virtual_seeds;
    }
  }
  Tin tin = delaunay_triangulate(std::move(verts));
  for (std::size_t i : seeds) ground[i] = 1;
  result.levels.push_back({cells[0], seeds.size(), 0});

  auto unclassified = [&]() {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < cloud.size(); ++i)
      if (!ground[i]) out.push_back(i);
    return out;
  };

  for (std::size_t k = 1; k < cells.size(); ++k) {
    const std::vector<std::size_t> candidates =
        lowest_per_cell(cloud, unclassified(), cells[k], b.min_x, b.min_y);
    const std::vector<std::size_t> acc = densify_level(tin, cloud, candidates, params, log);
    for (std::size_t i : acc) ground[i] = 1;
    result.levels.push_back({cells[k], candidates.size(), acc.size()});
  }

  std::vector<std::size_t> rest = unclassified();
  const std::vector<int> order = hilbert_order(rest.size(), [&](std::size_t j) {
    return std::pair(cloud[rest[j]].x, cloud[rest[j]].y);
  });
  std::vector<std::size_t> sorted(rest.size());
  for (std::size_t j = 0; j < order.size(); ++j) sorted[j] = rest[static_cast<std::size_t>(order[j])];
  const std::vector<std::size_t> acc = densify_level(tin, cloud, std::move(sorted), params, log);
  for (std::size_t i : acc) ground[i] = 1;
  result.final_pass_accepted = acc.size();

  for (std::size_t i = 0; i < cloud.size(); ++i)
    (ground[i] ? result.ground : result.nonground).push_back(i);
  return result;
}

}  // namespace roadforge
