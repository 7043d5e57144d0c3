#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <numeric>
#include <utility>
#include <vector>

#include "roadforge/cloud.hpp"

namespace roadforge {

/// Balanced 3-d tree over point XYZ. Immutable after construction; the
/// points are copied so the index owns its data.
class SpatialIndex {
 public:
  explicit SpatialIndex(const std::vector<Point>& points) {
    coords_.reserve(points.size());
    for (const Point& p : points) coords_.push_back({p.x, p.y, p.z});
    order_.resize(points.size());
    std::iota(order_.begin(), order_.end(), std::uint32_t{0});
    if (!order_.empty()) nodes_.reserve(2 * order_.size() / kLeafSize + 1);
    if (!order_.empty()) build(0, order_.size());
  }

  explicit SpatialIndex(const PointCloud& cloud) : SpatialIndex(cloud.points) {}

  std::size_t size() const { return coords_.size(); }

  /// Calls `visit(index)` for every point with squared distance <= r*r from q.
  template <typename Visitor>
  void radius_visit(const std::array<double, 3>& q, double r, Visitor&& visit) const {
    if (nodes_.empty()) return;
    radius_visit_node(0, q, r * r, visit);
  }

  std::size_t count_radius(const std::array<double, 3>& q, double r) const {
    std::size_t n = 0;
    radius_visit(q, r, [&](std::size_t) { ++n; });
    return n;
  }

  const std::array<double, 3>& coord(std::size_t i) const { return coords_[i]; }

 private:
  static constexpr std::size_t kLeafSize = 8;

  struct Node {
    std::uint32_t begin, end;  // range in order_
    std::int32_t left = -1, right = -1;
    int axis = 0;
    double split = 0.0;
    std::array<double, 3> lo, hi;  // bounding box of the subtree
  };

  int build(std::size_t begin, std::size_t end) {
    Node node;
    node.begin = static_cast<std::uint32_t>(begin);
    node.end = static_cast<std::uint32_t>(end);
    node.lo = node.hi = coords_[order_[begin]];
    for (std::size_t i = begin; i < end; ++i) {
      const auto& c = coords_[order_[i]];
      for (int a = 0; a < 3; ++a) {
        node.lo[a] = std::min(node.lo[a], c[a]);
        node.hi[a] = std::max(node.hi[a], c[a]);
      }
    }
    const int id = static_cast<int>(nodes_.size());
    nodes_.push_back(node);
    if (end - begin <= kLeafSize) return id;

    int axis = 0;
    double widest = -1.0;
    for (int a = 0; a < 3; ++a) {
      if (node.hi[a] - node.lo[a] > widest) {
        widest = node.hi[a] - node.lo[a];
        axis = a;
      }
    }
    const std::size_t mid = begin + (end - begin) / 2;
    std::nth_element(order_.begin() + static_cast<std::ptrdiff_t>(begin),
                     order_.begin() + static_cast<std::ptrdiff_t>(mid),
                     order_.begin() + static_cast<std::ptrdiff_t>(end),
                     [&](std::uint32_t a, std::uint32_t b) {
                       return coords_[a][axis] < coords_[b][axis];
                     });
    const int left = build(begin, mid);
    const int right = build(mid, end);
    nodes_[id].left = left;
    nodes_[id].right = right;
    nodes_[id].axis = axis;
    nodes_[id].split = coords_[order_[mid]][axis];
    return id;
  }

  static double box_dist2(const Node& n, const std::array<double, 3>& q) {
    double d2 = 0.0;
    for (int a = 0; a < 3; ++a) {
      double d = 0.0;
      if (q[a] < n.lo[a]) d = n.lo[a] - q[a];
      else if (q[a] > n.hi[a]) d = q[a] - n.hi[a];
      d2 += d * d;
    }
    return d2;
  }

  template <typename Visitor>
  void radius_visit_node(int id, const std::array<double, 3>& q, double r2,
                         Visitor& visit) const {
    const Node& n = nodes_[id];
    if (box_dist2(n, q) > r2) return;
    if (n.left < 0) {
      for (std::uint32_t i = n.begin; i < n.end; ++i) {
        const auto& c = coords_[order_[i]];
        const double dx = c[0] - q[0], dy = c[1] - q[1], dz = c[2] - q[2];
        if (dx * dx + dy * dy + dz * dz <= r2) visit(static_cast<std::size_t>(order_[i]));
      }
      return;
    }
    radius_visit_node(n.left, q, r2, visit);
    radius_visit_node(n.right, q, r2, visit);
  }

  std::vector<std::array<double, 3>> coords_;
  std::vector<std::uint32_t> order_;
  std::vector<Node> nodes_;
};

/// Neighbours of indexed point `i` within `r` (3-D Euclidean), excluding i.
inline std::size_t count_within_radius(const SpatialIndex& index, std::size_t i, double r) {
  require_param(r > 0.0, "radius must be positive");
  std::size_t n = 0;
  index.radius_visit(index.coord(i), r, [&](std::size_t j) {
    if (j != i) ++n;
  });
  return n;
}

/// Neighbours of an arbitrary query point. One indexed point at exactly the
/// query location is treated as the query itself and not counted.
inline std::size_t count_within_radius(const SpatialIndex& index, const Point& p, double r) {
  require_param(r > 0.0, "radius must be positive");
  std::size_t n = 0;
  bool self_seen = false;
  index.radius_visit({p.x, p.y, p.z}, r, [&](std::size_t j) {
    const auto& c = index.coord(j);
    if (!self_seen && c[0] == p.x && c[1] == p.y && c[2] == p.z) {
      self_seen = true;
      return;
    }
    ++n;
  });
  return n;
}

struct OutlierSplit {
  PointCloud inliers;
  PointCloud outliers;
  std::vector<std::size_t> inlier_indices;
  std::vector<std::size_t> outlier_indices;
};

/// Radius outlier removal. Every point is classified against the original
/// cloud in a single pass: outlier iff fewer than k_min neighbours within r.
inline OutlierSplit remove_outliers(const PointCloud& cloud, double r, std::size_t k_min) {
  require_param(r > 0.0, "outlier radius must be positive");
  require_param(k_min >= 1, "outlier k_min must be >= 1");
  if (cloud.empty()) fail(ErrorKind::EmptyInput, "outlier removal on an empty cloud");
  const SpatialIndex index(cloud);
  OutlierSplit split;
  split.inliers.source_id = cloud.source_id;
  split.outliers.source_id = cloud.source_id;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    std::size_t n = 0;
    index.radius_visit(index.coord(i), r, [&](std::size_t j) {
      if (j != i) ++n;
    });
    if (n < k_min) {
      split.outliers.points.push_back(cloud[i]);
      split.outlier_indices.push_back(i);
    } else {
      split.inliers.points.push_back(cloud[i]);
      split.inlier_indices.push_back(i);
    }
  }
  return split;
}

}  // namespace roadforge
