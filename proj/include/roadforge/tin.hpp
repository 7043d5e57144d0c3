#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "roadforge/cloud.hpp"
#include "roadforge/error.hpp"
#include "roadforge/predicates.hpp"

namespace roadforge {

/// A 2.5-D vertex. `point_index` refers back to the source cloud; virtual
/// vertices (synthesized corners) have none.
struct Vertex {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  std::optional<std::size_t> point_index;

  bool is_virtual() const { return !point_index.has_value(); }
  Eigen::Vector3d xyz() const { return {x, y, z}; }

  static Vertex from_point(const Point& p, std::size_t index) { return {p.x, p.y, p.z, index}; }
  static Vertex virtual_at(double x, double y, double z) { return {x, y, z, std::nullopt}; }
};

inline constexpr int kNoTriangle = -1;

/// Counter-clockwise triangle. nbr[i] is the triangle across the edge
/// opposite v[i], i.e. edge (v[i+1], v[i+2]), or kNoTriangle on the hull.
struct Triangle {
  std::array<int, 3> v{};
  std::array<int, 3> nbr{kNoTriangle, kNoTriangle, kNoTriangle};
};

enum class LocateKind { Inside, OnEdge, OnVertex, Outside };

struct Location {
  int triangle = kNoTriangle;
  LocateKind kind = LocateKind::Inside;
  /// OnEdge / Outside: slot of the vertex opposite the edge. OnVertex: slot
  /// of the coincident vertex.
  int slot = 0;
};

/// A triangle that an insertion would create, before any edge flips.
struct SplitTriangle {
  std::array<Eigen::Vector3d, 3> corners;
  int parent = kNoTriangle;
};

inline constexpr double kAreaEpsilon = 1e-12;

namespace detail {

inline std::uint64_t hilbert_d(std::uint32_t n, std::uint32_t x, std::uint32_t y) {
  std::uint64_t d = 0;
  for (std::uint32_t s = n / 2; s > 0; s /= 2) {
    const std::uint32_t rx = (x & s) ? 1 : 0;
    const std::uint32_t ry = (y & s) ? 1 : 0;
    d += static_cast<std::uint64_t>(s) * s * ((3 * rx) ^ ry);
    if (ry == 0) {
      if (rx == 1) {
        x = s - 1 - x;
        y = s - 1 - y;
      }
      std::swap(x, y);
    }
  }
  return d;
}

}  // namespace detail

/// Indices 0..n-1 sorted along a Hilbert curve over the XY extent; ties
/// keep index order. `xy_of(i)` returns a pair (x, y).
template <typename XyOf>
std::vector<int> hilbert_order(std::size_t n, XyOf&& xy_of) {
  if (n == 0) return {};
  auto [min_x, min_y] = xy_of(0);
  double max_x = min_x, max_y = min_y;
  for (std::size_t i = 1; i < n; ++i) {
    const auto [x, y] = xy_of(i);
    min_x = std::min(min_x, x);
    max_x = std::max(max_x, x);
    min_y = std::min(min_y, y);
    max_y = std::max(max_y, y);
  }
  constexpr std::uint32_t kSide = 1u << 16;
  const double sx = max_x > min_x ? (kSide - 1) / (max_x - min_x) : 0.0;
  const double sy = max_y > min_y ? (kSide - 1) / (max_y - min_y) : 0.0;
  std::vector<std::pair<std::uint64_t, int>> keyed(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto [x, y] = xy_of(i);
    const auto hx = static_cast<std::uint32_t>((x - min_x) * sx);
    const auto hy = static_cast<std::uint32_t>((y - min_y) * sy);
    keyed[i] = {detail::hilbert_d(kSide, hx, hy), static_cast<int>(i)};
  }
  std::sort(keyed.begin(), keyed.end());
  std::vector<int> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = keyed[i].second;
  return order;
}

/// Delaunay triangulation of 2.5-D vertices over their XY convex hull.
///
/// Construction inserts vertices one at a time (Lawson flips) using exact
/// orientation and in-circle signs. When four vertices are cocircular the
/// diagonal incident to the smallest vertex index is kept.
class Tin {
 public:
  Tin() = default;

  /// Batch construction. Vertex indices in the result equal input order.
  static Tin triangulate(std::vector<Vertex> vertices) {
    if (vertices.size() < 3) fail(ErrorKind::Degenerate, "triangulation needs at least 3 vertices");
    for (const Vertex& v : vertices) {
      if (!std::isfinite(v.x) || !std::isfinite(v.y) || !std::isfinite(v.z))
        fail(ErrorKind::Parameter, "non-finite vertex coordinate");
    }
    check_duplicates(vertices);

    Tin tin;
    tin.vertices_ = std::move(vertices);
    const std::vector<int> order = tin.spatial_order();

    // Seed triangle: first two vertices in order plus the first one not
    // collinear with them.
    const int a = order[0], b = order[1];
    int c = -1;
    std::size_t c_pos = 0;
    for (std::size_t k = 2; k < order.size(); ++k) {
      if (tin.orient(a, b, order[k]) != 0) {
        c = order[k];
        c_pos = k;
        break;
      }
    }
    if (c < 0) fail(ErrorKind::Degenerate, "all vertices are collinear");
    Triangle first;
    first.v = tin.orient(a, b, c) > 0 ? std::array<int, 3>{a, b, c} : std::array<int, 3>{a, c, b};
    tin.triangles_.push_back(first);

    int hint = 0;
    for (std::size_t k = 2; k < order.size(); ++k) {
      if (k == c_pos) continue;
      hint = tin.insert_index(order[k], hint, /*allow_outside=*/true);
    }
    return tin;
  }

  const std::vector<Vertex>& vertices() const { return vertices_; }
  const std::vector<Triangle>& triangles() const { return triangles_; }
  const Vertex& vertex(int i) const { return vertices_[static_cast<std::size_t>(i)]; }
  const Triangle& triangle(int t) const { return triangles_[static_cast<std::size_t>(t)]; }
  std::size_t num_vertices() const { return vertices_.size(); }
  std::size_t num_triangles() const { return triangles_.size(); }

  /// Inserts a vertex lying inside or on the hull and restores the Delaunay
  /// property. Returns its vertex index.
  int insert(const Vertex& v) {
    if (!std::isfinite(v.x) || !std::isfinite(v.y) || !std::isfinite(v.z))
      fail(ErrorKind::Parameter, "non-finite vertex coordinate");
    const Location loc = walk(v.x, v.y, last_);
    if (loc.kind == LocateKind::Outside) fail(ErrorKind::Location, "vertex lies outside the TIN hull");
    if (loc.kind == LocateKind::OnVertex) fail(ErrorKind::Duplicate, "vertex duplicates an existing XY");
    vertices_.push_back(v);
    const int id = static_cast<int>(vertices_.size() - 1);
    last_ = insert_located(id, loc);
    return id;
  }

  /// Walk-based point location with a starting triangle hint.
  Location walk(double x, double y, int hint = -1) const {
    if (triangles_.empty()) fail(ErrorKind::Location, "empty TIN");
    int t = (hint >= 0 && hint < static_cast<int>(triangles_.size())) ? hint : last_;
    if (t < 0 || t >= static_cast<int>(triangles_.size())) t = 0;
    const predicates::Xy p{x, y};
    const std::size_t max_steps = 4 * triangles_.size() + 64;
    int rot = 0;
    for (std::size_t step = 0; step < max_steps; ++step) {
      const Triangle& tri = triangles_[static_cast<std::size_t>(t)];
      int moved = -1;
      std::array<int, 3> sgn{};
      for (int k = 0; k < 3; ++k) {
        const int e = (k + rot) % 3;
        sgn[e] = predicates::orient2d(xy(tri.v[(e + 1) % 3]), xy(tri.v[(e + 2) % 3]), p);
        if (sgn[e] < 0) {
          moved = e;
          break;
        }
      }
      rot = (rot + 1) % 3;
      if (moved >= 0) {
        if (tri.nbr[moved] == kNoTriangle) return {t, LocateKind::Outside, moved};
        t = tri.nbr[moved];
        continue;
      }
      return classify(t, sgn);
    }
    return scan(x, y);
  }

  /// Deterministic point location: on a shared edge or vertex the lowest
  /// triangle index containing the point is returned.
  int locate(double x, double y) const {
    const Location loc = walk(x, y, 0);
    switch (loc.kind) {
      case LocateKind::Outside:
        fail(ErrorKind::Location, "point lies outside the TIN hull");
      case LocateKind::Inside:
        return loc.triangle;
      case LocateKind::OnEdge: {
        const int other = triangle(loc.triangle).nbr[loc.slot];
        return other == kNoTriangle ? loc.triangle : std::min(loc.triangle, other);
      }
      case LocateKind::OnVertex: {
        const auto around = incident_triangles(loc.triangle, triangle(loc.triangle).v[loc.slot]);
        return *std::min_element(around.begin(), around.end());
      }
    }
    return loc.triangle;
  }

  /// Triangles the insertion of `v` at `loc` would create, before flips.
  std::vector<SplitTriangle> split_preview(const Location& loc, const Vertex& v) const {
    const Cavity cav = cavity(loc, predicates::Xy{v.x, v.y});
    std::vector<SplitTriangle> out;
    out.reserve(cav.edges.size());
    for (const BoundaryEdge& e : cav.edges) {
      out.push_back({{vertex(e.u).xyz(), vertex(e.w).xyz(), v.xyz()}, e.owner});
    }
    return out;
  }

  /// Inserts at a location previously obtained from walk(). Returns vertex index.
  int insert_at(const Vertex& v, const Location& loc) {
    if (loc.kind == LocateKind::Outside) fail(ErrorKind::Location, "vertex lies outside the TIN hull");
    if (loc.kind == LocateKind::OnVertex) fail(ErrorKind::Duplicate, "vertex duplicates an existing XY");
    vertices_.push_back(v);
    const int id = static_cast<int>(vertices_.size() - 1);
    last_ = insert_located(id, loc);
    return id;
  }

  /// Signed XY area of a triangle (positive for CCW).
  double signed_area(int t) const {
    const Triangle& tri = triangle(t);
    const Vertex& a = vertex(tri.v[0]);
    const Vertex& b = vertex(tri.v[1]);
    const Vertex& c = vertex(tri.v[2]);
    return 0.5 * ((b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x));
  }

  /// Barycentric coordinates of (x, y) with respect to triangle t.
  std::array<double, 3> barycentric(int t, double x, double y) const {
    const Triangle& tri = triangle(t);
    const Vertex& a = vertex(tri.v[0]);
    const Vertex& b = vertex(tri.v[1]);
    const Vertex& c = vertex(tri.v[2]);
    const double det = (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
    const double l1 = ((x - a.x) * (c.y - a.y) - (y - a.y) * (c.x - a.x)) / det;
    const double l2 = ((b.x - a.x) * (y - a.y) - (b.y - a.y) * (x - a.x)) / det;
    return {1.0 - l1 - l2, l1, l2};
  }

  /// Elevation of triangle t's supporting plane at (x, y).
  double plane_z(int t, double x, double y) const {
    const auto w = barycentric(t, x, y);
    const Triangle& tri = triangle(t);
    return w[0] * vertex(tri.v[0]).z + w[1] * vertex(tri.v[1]).z + w[2] * vertex(tri.v[2]).z;
  }

  /// Upward (z >= 0) unit normal of triangle t.
  Eigen::Vector3d normal(int t) const {
    const Triangle& tri = triangle(t);
    return upward_normal(vertex(tri.v[0]).xyz(), vertex(tri.v[1]).xyz(), vertex(tri.v[2]).xyz());
  }

  static Eigen::Vector3d upward_normal(const Eigen::Vector3d& a, const Eigen::Vector3d& b,
                                       const Eigen::Vector3d& c) {
    Eigen::Vector3d n = (b - a).cross(c - a);
    if (n.z() < 0.0) n = -n;
    const double len = n.norm();
    if (!(len > 0.0)) fail(ErrorKind::Degenerate, "degenerate triangle has no normal");
    return n / len;
  }

  std::vector<int> incident_triangles(int t, int vid) const {
    std::vector<int> out;
    // Rotate one way until we return or hit the hull, then the other way.
    int cur = t;
    do {
      out.push_back(cur);
      const Triangle& tri = triangle(cur);
      const int j = slot_of(tri, vid);
      cur = tri.nbr[(j + 1) % 3];
    } while (cur != kNoTriangle && cur != t);
    if (cur == t) return out;
    cur = triangle(t).nbr[(slot_of(triangle(t), vid) + 2) % 3];
    while (cur != kNoTriangle) {
      out.push_back(cur);
      const Triangle& tri = triangle(cur);
      cur = tri.nbr[(slot_of(tri, vid) + 2) % 3];
    }
    return out;
  }

  static int slot_of(const Triangle& tri, int vid) {
    for (int k = 0; k < 3; ++k)
      if (tri.v[k] == vid) return k;
    return -1;
  }

 private:
  struct BoundaryEdge {
    int u, w;   // new triangle is (u, w, p)
    int outer;  // triangle across (u, w), or kNoTriangle
    int owner;  // cavity triangle that owned the edge (parent)
  };

  struct Cavity {
    std::vector<int> triangles;
    std::vector<BoundaryEdge> edges;
  };

  predicates::Xy xy(int vid) const {
    const Vertex& v = vertices_[static_cast<std::size_t>(vid)];
    return {v.x, v.y};
  }

  int orient(int a, int b, int c) const { return predicates::orient2d(xy(a), xy(b), xy(c)); }

  static void check_duplicates(const std::vector<Vertex>& vs) {
    std::vector<std::size_t> idx(vs.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::sort(idx.begin(), idx.end(), [&](std::size_t i, std::size_t j) {
      return std::pair(vs[i].x, vs[i].y) < std::pair(vs[j].x, vs[j].y);
    });
    for (std::size_t k = 1; k < idx.size(); ++k) {
      const Vertex& p = vs[idx[k - 1]];
      const Vertex& q = vs[idx[k]];
      if (p.x == q.x && p.y == q.y) {
        fail(ErrorKind::Duplicate, "duplicate XY at vertices " + std::to_string(idx[k - 1]) +
                                       " and " + std::to_string(idx[k]));
      }
    }
  }

  std::vector<int> spatial_order() const {
    return hilbert_order(vertices_.size(), [&](std::size_t i) {
      return std::pair(vertices_[i].x, vertices_[i].y);
    });
  }

  Location classify(int t, const std::array<int, 3>& sgn) const {
    int zeros = 0, zero_slot = -1, nonzero_slot = -1;
    for (int e = 0; e < 3; ++e) {
      if (sgn[e] == 0) {
        ++zeros;
        zero_slot = e;
      } else {
        nonzero_slot = e;
      }
    }
    if (zeros == 0) return {t, LocateKind::Inside, 0};
    if (zeros == 1) return {t, LocateKind::OnEdge, zero_slot};
    // Two edge lines through p meet at the vertex opposite the third edge.
    return {t, LocateKind::OnVertex, nonzero_slot};
  }

  Location scan(double x, double y) const {
    const predicates::Xy p{x, y};
    for (int t = 0; t < static_cast<int>(triangles_.size()); ++t) {
      const Triangle& tri = triangles_[static_cast<std::size_t>(t)];
      std::array<int, 3> sgn{};
      bool inside = true;
      for (int e = 0; e < 3; ++e) {
        sgn[e] = predicates::orient2d(xy(tri.v[(e + 1) % 3]), xy(tri.v[(e + 2) % 3]), p);
        if (sgn[e] < 0) inside = false;
      }
      if (inside) return classify(t, sgn);
    }
    for (int t = 0; t < static_cast<int>(triangles_.size()); ++t) {
      const Triangle& tri = triangles_[static_cast<std::size_t>(t)];
      for (int e = 0; e < 3; ++e) {
        if (tri.nbr[e] == kNoTriangle &&
            predicates::orient2d(xy(tri.v[(e + 1) % 3]), xy(tri.v[(e + 2) % 3]), p) < 0)
          return {t, LocateKind::Outside, e};
      }
    }
    fail(ErrorKind::Location, "point location failed");
  }

  Cavity cavity(const Location& loc, predicates::Xy p) const {
    Cavity cav;
    auto add_edges_of = [&](int t) {
      const Triangle& tri = triangle(t);
      for (int e = 0; e < 3; ++e) {
        const int u = tri.v[(e + 1) % 3], w = tri.v[(e + 2) % 3];
        if (predicates::orient2d(xy(u), xy(w), p) <= 0) continue;  // split edge
        cav.edges.push_back({u, w, tri.nbr[e], t});
      }
    };
    switch (loc.kind) {
      case LocateKind::Inside:
        cav.triangles = {loc.triangle};
        add_edges_of(loc.triangle);
        break;
      case LocateKind::OnEdge: {
        cav.triangles = {loc.triangle};
        const int other = triangle(loc.triangle).nbr[loc.slot];
        if (other != kNoTriangle) cav.triangles.push_back(other);
        for (int t : cav.triangles) add_edges_of(t);
        // Edges shared inside the cavity are not boundary edges.
        std::erase_if(cav.edges, [&](const BoundaryEdge& e) {
          return std::find(cav.triangles.begin(), cav.triangles.end(), e.outer) != cav.triangles.end();
        });
        break;
      }
      case LocateKind::Outside: {
        for (const auto& [t, e] : visible_hull(loc.triangle, loc.slot, p)) {
          const Triangle& tri = triangle(t);
          const int u = tri.v[(e + 1) % 3], w = tri.v[(e + 2) % 3];
          cav.edges.push_back({w, u, t, t});
        }
        break;
      }
      case LocateKind::OnVertex:
        fail(ErrorKind::Duplicate, "vertex duplicates an existing XY");
    }
    return cav;
  }

  // Hull edges are (triangle, slot) pairs with nbr[slot] == kNoTriangle.
  std::pair<int, int> next_hull_edge(int t, int slot) const {
    const int w = triangle(t).v[(slot + 2) % 3];
    int cur = t;
    while (true) {
      const Triangle& tri = triangle(cur);
      const int opp = (slot_of(tri, w) + 2) % 3;
      if (tri.nbr[opp] == kNoTriangle) return {cur, opp};
      cur = tri.nbr[opp];
    }
  }

  std::pair<int, int> prev_hull_edge(int t, int slot) const {
    const int u = triangle(t).v[(slot + 1) % 3];
    int cur = t;
    while (true) {
      const Triangle& tri = triangle(cur);
      const int opp = (slot_of(tri, u) + 1) % 3;
      if (tri.nbr[opp] == kNoTriangle) return {cur, opp};
      cur = tri.nbr[opp];
    }
  }

  bool sees(std::pair<int, int> edge, predicates::Xy p) const {
    const Triangle& tri = triangle(edge.first);
    return predicates::orient2d(xy(tri.v[(edge.second + 1) % 3]), xy(tri.v[(edge.second + 2) % 3]),
                                p) < 0;
  }

  std::vector<std::pair<int, int>> visible_hull(int t, int slot, predicates::Xy p) const {
    std::vector<std::pair<int, int>> before, after;
    const std::pair<int, int> start{t, slot};
    for (auto e = prev_hull_edge(t, slot); e != start && sees(e, p); e = prev_hull_edge(e.first, e.second))
      before.push_back(e);
    for (auto e = next_hull_edge(t, slot); e != start && sees(e, p); e = next_hull_edge(e.first, e.second))
      after.push_back(e);
    std::vector<std::pair<int, int>> out(before.rbegin(), before.rend());
    out.push_back(start);
    out.insert(out.end(), after.begin(), after.end());
    return out;
  }

  void retarget(int nb, int old_t, int new_t) {
    if (nb == kNoTriangle) return;
    for (int& n : triangles_[static_cast<std::size_t>(nb)].nbr)
      if (n == old_t) {
        n = new_t;
        return;
      }
  }

  void set_neighbor_on_edge(int t, int u, int w, int nb) {
    Triangle& tri = triangles_[static_cast<std::size_t>(t)];
    for (int e = 0; e < 3; ++e) {
      const int a = tri.v[(e + 1) % 3], b = tri.v[(e + 2) % 3];
      if ((a == u && b == w) || (a == w && b == u)) {
        tri.nbr[e] = nb;
        return;
      }
    }
  }

  int insert_index(int vid, int hint, bool allow_outside) {
    const Vertex& v = vertex(vid);
    const Location loc = walk(v.x, v.y, hint);
    if (loc.kind == LocateKind::OnVertex) fail(ErrorKind::Duplicate, "vertex duplicates an existing XY");
    if (loc.kind == LocateKind::Outside && !allow_outside)
      fail(ErrorKind::Location, "vertex lies outside the TIN hull");
    return insert_located(vid, loc);
  }

  // Replaces the cavity by a fan around vid, then legalizes. Returns one
  // triangle incident to vid.
  int insert_located(int vid, const Location& loc) {
    const Cavity cav = cavity(loc, xy(vid));
    std::vector<int> made;
    made.reserve(cav.edges.size());
    std::size_t reuse = 0;
    for (std::size_t k = 0; k < cav.edges.size(); ++k) {
      int t;
      if (reuse < cav.triangles.size()) {
        t = cav.triangles[reuse++];
      } else {
        t = static_cast<int>(triangles_.size());
        triangles_.emplace_back();
      }
      made.push_back(t);
    }
    for (std::size_t k = 0; k < cav.edges.size(); ++k) {
      const BoundaryEdge& e = cav.edges[k];
      Triangle& tri = triangles_[static_cast<std::size_t>(made[k])];
      tri.v = {e.u, e.w, vid};
      tri.nbr = {kNoTriangle, kNoTriangle, e.outer};
    }
    for (std::size_t k = 0; k < cav.edges.size(); ++k) {
      const BoundaryEdge& e = cav.edges[k];
      if (e.outer != kNoTriangle) set_neighbor_on_edge(e.outer, e.u, e.w, made[k]);
      for (std::size_t j = 0; j < cav.edges.size(); ++j) {
        if (cav.edges[j].u == e.w) {  // shares edge (w, p)
          triangles_[static_cast<std::size_t>(made[k])].nbr[0] = made[j];
          triangles_[static_cast<std::size_t>(made[j])].nbr[1] = made[k];
        }
      }
    }
    std::vector<int> stack(made.begin(), made.end());
    legalize(vid, stack);
    const Location after = walk(vertex(vid).x, vertex(vid).y, made.front());
    return after.triangle;
  }

  bool should_flip(int a, int b, int p, int q) const {
    // Triangle (a, b, p) is CCW; q is across edge (a, b).
    const int s = predicates::incircle(xy(a), xy(b), xy(p), xy(q));
    if (s > 0) return true;
    if (s < 0) return false;
    const int lowest = std::min({a, b, p, q});
    return lowest != a && lowest != b;
  }

  void legalize(int p, std::vector<int>& stack) {
    while (!stack.empty()) {
      const int t = stack.back();
      stack.pop_back();
      const Triangle tri = triangle(t);
      const int i = slot_of(tri, p);
      if (i < 0) continue;
      const int s = tri.nbr[i];
      if (s == kNoTriangle) continue;
      const int x = tri.v[(i + 1) % 3], y = tri.v[(i + 2) % 3];
      const Triangle other = triangle(s);
      const int xs = slot_of(other, x);
      const int q = other.v[(xs + 1) % 3];  // other is (q, y, x) rotated
      if (!should_flip(x, y, p, q)) continue;

      const int n_px = tri.nbr[(i + 2) % 3];   // across (p, x)
      const int n_yp = tri.nbr[(i + 1) % 3];   // across (y, p)
      const int n_xq = other.nbr[slot_of(other, y)];  // across (x, q)
      const int n_qy = other.nbr[slot_of(other, x)];  // across (q, y)

      Triangle& t1 = triangles_[static_cast<std::size_t>(t)];
      t1.v = {p, x, q};
      t1.nbr = {n_xq, s, n_px};
      Triangle& t2 = triangles_[static_cast<std::size_t>(s)];
      t2.v = {p, q, y};
      t2.nbr = {n_qy, n_yp, t};
      retarget(n_xq, s, t);
      retarget(n_yp, t, s);
      stack.push_back(t);
      stack.push_back(s);
    }
  }

  std::vector<Vertex> vertices_;
  std::vector<Triangle> triangles_;
  int last_ = 0;
};

inline Tin delaunay_triangulate(std::vector<Vertex> vertices) {
  return Tin::triangulate(std::move(vertices));
}

inline int insert_vertex(Tin& tin, const Vertex& v) { return tin.insert(v); }

inline int locate(const Tin& tin, double x, double y) { return tin.locate(x, y); }

namespace detail {

inline void require_nondegenerate(const Tin& tin, int t) {
  if (!(std::fabs(tin.signed_area(t)) > kAreaEpsilon))
    fail(ErrorKind::Degenerate, "triangle " + std::to_string(t) + " is degenerate");
}

}  // namespace detail

/// |p.z - z of the triangle's supporting plane at (p.x, p.y)|.
inline double vertical_distance(const Tin& tin, int t, const Point& p) {
  detail::require_nondegenerate(tin, t);
  return std::fabs(p.z - tin.plane_z(t, p.x, p.y));
}

/// Largest angle, in degrees, between the triangle plane and the segments
/// from each of its vertices to p.
inline double vertex_angle(const Tin& tin, int t, const Point& p) {
  detail::require_nondegenerate(tin, t);
  const Eigen::Vector3d n = tin.normal(t);
  const Eigen::Vector3d q{p.x, p.y, p.z};
  double best = 0.0;
  for (int k = 0; k < 3; ++k) {
    const Eigen::Vector3d d = q - tin.vertex(tin.triangle(t).v[k]).xyz();
    const double len = d.norm();
    if (!(len > 0.0)) fail(ErrorKind::Degenerate, "point coincides with a triangle vertex");
    const double perp = std::fabs(n.dot(d));
    const double along = (d - n.dot(d) * n).norm();
    best = std::max(best, std::atan2(perp, along) * 180.0 / 3.14159265358979323846);
  }
  return best;
}

}  // namespace roadforge
