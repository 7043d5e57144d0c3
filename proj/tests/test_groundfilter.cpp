#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "roadforge/groundfilter.hpp"
#include "roadforge/random.hpp"
#include "support/synthetic_ground.hpp"
#include "support/test_util.hpp"

using namespace roadforge;
using roadforge::testing::kind_of;

namespace {

constexpr double kPi = 3.14159265358979323846;

PointCloud make_cloud(const std::vector<std::array<double, 3>>& xyz) {
  PointCloud c;
  for (const auto& p : xyz) c.points.push_back({p[0], p[1], p[2], 0});
  return c;
}

// Reference acceptance test written from the definitions: locate by scanning
// every triangle, plane height from barycentric weights, angle via asin,
// and the sub-triangle constraints on the three triangles (a,b,p), (b,c,p),
// (c,a,p).
enum class Oracle { Accept, Duplicate, Reject };

double angle_deg(const Eigen::Vector3d& at, const Eigen::Vector3d& a, const Eigen::Vector3d& b) {
  const Eigen::Vector3d u = (a - at).normalized(), v = (b - at).normalized();
  return std::acos(std::clamp(u.dot(v), -1.0, 1.0)) * 180.0 / kPi;
}

Eigen::Vector3d up(const Eigen::Vector3d& a, const Eigen::Vector3d& b, const Eigen::Vector3d& c) {
  Eigen::Vector3d n = (b - a).cross(c - a);
  return n.z() < 0 ? Eigen::Vector3d(-n) : n;
}

struct SubTriangle {
  std::array<Eigen::Vector3d, 3> parent;
  int k;  // sub-triangle (parent[k], parent[k+1], p)
};

// Triangles containing p (closed), and the non-degenerate sub-triangles
// inserting p would create.
std::vector<int> containing(const Tin& tin, double x, double y, std::vector<std::array<double, 3>>* bary = nullptr) {
  std::vector<int> out;
  for (int t = 0; t < static_cast<int>(tin.num_triangles()); ++t) {
    const Triangle& tri = tin.triangle(t);
    const Vertex &a = tin.vertex(tri.v[0]), &b = tin.vertex(tri.v[1]), &c = tin.vertex(tri.v[2]);
    const double det = (b.y - c.y) * (a.x - c.x) + (c.x - b.x) * (a.y - c.y);
    const double l1 = ((b.y - c.y) * (x - c.x) + (c.x - b.x) * (y - c.y)) / det;
    const double l2 = ((c.y - a.y) * (x - c.x) + (a.x - c.x) * (y - c.y)) / det;
    const double l3 = 1 - l1 - l2;
    if (l1 < -1e-12 || l2 < -1e-12 || l3 < -1e-12) continue;
    out.push_back(t);
    if (bary) bary->push_back({l1, l2, l3});
  }
  return out;
}

std::vector<SubTriangle> sub_triangles(const Tin& tin, const Eigen::Vector3d& P) {
  std::vector<SubTriangle> out;
  for (int t : containing(tin, P.x(), P.y())) {
    const Triangle& tri = tin.triangle(t);
    const std::array<Eigen::Vector3d, 3> q{tin.vertex(tri.v[0]).xyz(), tin.vertex(tri.v[1]).xyz(), tin.vertex(tri.v[2]).xyz()};
    for (int k = 0; k < 3; ++k) {
      const Eigen::Vector3d &u = q[k], &w = q[(k + 1) % 3];
      if (predicates::orient2d({u.x(), u.y()}, {w.x(), w.y()}, {P.x(), P.y()}) != 0) out.push_back({q, k});
    }
  }
  return out;
}

bool becomes_obtuse(const SubTriangle& s, const Eigen::Vector3d& P) {
  const Eigen::Vector3d &u = s.parent[s.k], &w = s.parent[(s.k + 1) % 3], &o = s.parent[(s.k + 2) % 3];
  if (angle_deg(u, w, o) <= 90.0 && angle_deg(u, w, P) > 90.0) return true;
  return angle_deg(w, o, u) <= 90.0 && angle_deg(w, u, P) > 90.0;
}

Oracle oracle_judge(const Tin& tin, const Point& p, const FilterParams& fp) {
  for (const Vertex& v : tin.vertices())
    if (v.x == p.x && v.y == p.y) return std::fabs(v.z - p.z) <= fp.dist_thresh ? Oracle::Duplicate : Oracle::Reject;
  std::vector<std::array<double, 3>> bary;
  const std::vector<int> tris = containing(tin, p.x, p.y, &bary);
  if (tris.empty()) return Oracle::Reject;
  const Triangle& t = tin.triangle(tris[0]);
  const Vertex &a = tin.vertex(t.v[0]), &b = tin.vertex(t.v[1]), &c = tin.vertex(t.v[2]);
  const auto [l1, l2, l3] = bary[0];
  const Eigen::Vector3d P(p.x, p.y, p.z);
  if (std::fabs(p.z - (l1 * a.z + l2 * b.z + l3 * c.z)) > fp.dist_thresh) return Oracle::Reject;
  const Eigen::Vector3d n = up(a.xyz(), b.xyz(), c.xyz()).normalized();
  for (const Vertex* v : {&a, &b, &c}) {
    const Eigen::Vector3d d = P - v->xyz();
    if (std::asin(std::fabs(n.dot(d)) / d.norm()) * 180.0 / kPi > fp.angle_thresh) return Oracle::Reject;
  }
  for (const SubTriangle& s : sub_triangles(tin, P)) {
    if (fp.enable_nonobtuse && becomes_obtuse(s, P)) return Oracle::Reject;
    if (fp.enable_normal) {
      const Eigen::Vector3d pn = up(s.parent[0], s.parent[1], s.parent[2]).normalized();
      const Eigen::Vector3d m = up(s.parent[s.k], s.parent[(s.k + 1) % 3], P).normalized();
      if (!(pn.dot(m) > 1e-12)) return Oracle::Reject;
    }
  }
  return Oracle::Accept;
}

// Sloped terrain with bumps and a few raised clusters.
PointCloud mixed_scene(std::uint64_t seed) {
  Rng rng(seed);
  PointCloud c;
  for (int i = 0; i < 3000; ++i) {
    const double x = uniform(rng, 0, 60), y = uniform(rng, 0, 60);
    double z = 0.05 * x + 0.02 * y + 0.3 * std::sin(x / 7.0) + normal(rng, 0, 0.05);
    if (bernoulli(rng, 0.1)) z += uniform(rng, 0.5, 4.0);
    c.points.push_back({x, y, z, 0});
  }
  return c;
}

Tin initial_tin(const PointCloud& c, double cell, const FilterParams& fp, std::vector<std::size_t>* seeds) {
  *seeds = select_seeds(c, cell).real;
  std::vector<Vertex> v;
  for (std::size_t i : *seeds) v.push_back(Vertex::from_point(c[i], i));
  for (const Vertex& corner : virtual_corner_seeds(bounds(c), v, fp.corner_seed_mode)) v.push_back(corner);
  return delaunay_triangulate(v);
}

}  // namespace

TEST(Seeds, LowestPointOfACell) {
  const PointCloud c = make_cloud({{1, 1, 3}, {2, 2, 1}, {3, 3, 2}});
  EXPECT_EQ(select_seeds(c, 10.0).real, (std::vector<std::size_t>{1}));
}

TEST(Seeds, OnePerNonEmptyCell) {
  const PointCloud c = make_cloud({{1, 1, 0}, {11, 1, 0}, {1, 11, 0}, {11, 11, 0}});
  EXPECT_EQ(select_seeds(c, 10.0).real.size(), 4u);
}

TEST(Seeds, TiesGoToLowestIndex) {
  const PointCloud c = make_cloud({{1, 1, 5}, {2, 2, 0}, {3, 3, 0}});
  EXPECT_EQ(select_seeds(c, 10.0).real, (std::vector<std::size_t>{1}));
}

TEST(Seeds, RandomCloudMatchesGroupingOracle) {
  Rng rng(31);
  PointCloud c;
  for (int i = 0; i < 5000; ++i) c.points.push_back({uniform(rng, -30, 70), uniform(rng, 5, 95), uniform(rng, 0, 10), 0});
  const Bounds b = bounds(c);
  std::map<std::pair<long long, long long>, std::size_t> oracle;
  for (std::size_t i = 0; i < c.size(); ++i) {
    const auto key = std::pair(static_cast<long long>((c[i].x - b.min_x) / 10.0), static_cast<long long>((c[i].y - b.min_y) / 10.0));
    auto it = oracle.find(key);
    if (it == oracle.end() || c[i].z < c[it->second].z) oracle[key] = i;
  }
  std::set<std::size_t> expected;
  for (const auto& [k, i] : oracle) expected.insert(i);
  const std::vector<std::size_t> got = select_seeds(c, 10.0).real;
  EXPECT_EQ(std::set<std::size_t>(got.begin(), got.end()), expected);
  EXPECT_EQ(got.size(), expected.size());
}

TEST(Seeds, Errors) {
  EXPECT_EQ(kind_of([] { select_seeds(PointCloud{}, 1.0); }), ErrorKind::EmptyInput);
  EXPECT_EQ(kind_of([] { select_seeds(make_cloud({{0, 0, 0}}), 0.0); }), ErrorKind::Parameter);
}

TEST(VirtualCorners, SingleSeedGivesFlatCorners) {
  const Bounds b{0, 0, 0, 10, 10, 2};
  const auto corners = virtual_corner_seeds(b, {Vertex::virtual_at(5, 5, 2)}, CornerSeedMode::NearestSeedZ);
  ASSERT_EQ(corners.size(), 4u);
  for (const Vertex& v : corners) {
    EXPECT_EQ(v.z, 2.0);
    EXPECT_TRUE(v.is_virtual());
  }
  EXPECT_EQ(corners[2].x, 10.0);
  EXPECT_EQ(corners[2].y, 10.0);
}

TEST(VirtualCorners, NearestSeedOnSlopedPlane) {
  Rng rng(2);
  std::vector<Vertex> seeds;
  for (int i = 0; i < 40; ++i) {
    const double x = uniform(rng, 0, 100), y = uniform(rng, 0, 100);
    seeds.push_back(Vertex::virtual_at(x, y, x));
  }
  const Bounds b{0, 0, 0, 100, 100, 100};
  const auto corners = virtual_corner_seeds(b, seeds, CornerSeedMode::NearestSeedZ);
  for (const Vertex& c : corners) {
    const Vertex* best = &seeds[0];
    for (const Vertex& s : seeds)
      if (std::hypot(s.x - c.x, s.y - c.y) < std::hypot(best->x - c.x, best->y - c.y)) best = &s;
    EXPECT_EQ(c.z, best->z);
  }
}

TEST(VirtualCorners, IdwOfEquidistantSeedsIsTheMean) {
  // Three seeds at distance 5 from the (0,0) corner.
  const std::vector<Vertex> seeds = {Vertex::virtual_at(5, 0, 1), Vertex::virtual_at(0, 5, 2), Vertex::virtual_at(3, 4, 3)};
  const Bounds b{0, 0, 0, 100, 100, 3};
  EXPECT_NEAR(virtual_corner_seeds(b, seeds, CornerSeedMode::IdwK3)[0].z, 2.0, 1e-12);
  EXPECT_EQ(kind_of([&] { virtual_corner_seeds(b, {}, CornerSeedMode::IdwK3); }), ErrorKind::EmptyInput);
}

TEST(Constraints, NonObtuse) {
  EXPECT_TRUE(nonobtuse_ok({0, 0, 0}, {1, 0, 0}, {0.5, std::sqrt(3.0) / 2, 0}));
  EXPECT_FALSE(nonobtuse_ok({0, 0, 0}, {1, 0, 0}, {std::cos(2 * kPi / 3), std::sin(2 * kPi / 3), 0}));
  EXPECT_TRUE(nonobtuse_ok({0, 0, 0}, {3, 0, 0}, {0, 4, 0}));
  EXPECT_EQ(kind_of([] { nonobtuse_ok({0, 0, 0}, {1, 1, 1}, {2, 2, 2}); }), ErrorKind::Degenerate);
}

TEST(Constraints, NormalDeviation) {
  EXPECT_TRUE(normal_ok({0, 0, 1}, {0, 0, 1}));
  EXPECT_FALSE(normal_ok({0, 0, 1}, {1, 0, 0}));
  EXPECT_TRUE(normal_ok({0, 0, 1}, {0, std::sin(10 * kPi / 180), std::cos(10 * kPi / 180)}));
  EXPECT_EQ(kind_of([] { normal_ok({0, 0, 0}, {0, 0, 1}); }), ErrorKind::Degenerate);
}

TEST(Densify, PlaneCandidatesAreAllAccepted) {
  Rng rng(5);
  PointCloud c;
  for (int i = 0; i < 400; ++i) {
    const double x = uniform(rng, 1, 99), y = uniform(rng, 1, 99);
    c.points.push_back({x, y, 0.01 * x + 2, 0});
  }
  Tin tin = delaunay_triangulate({Vertex::virtual_at(0, 0, 2), Vertex::virtual_at(100, 0, 3), Vertex::virtual_at(100, 100, 3),
                                  Vertex::virtual_at(0, 100, 2)});
  std::vector<std::size_t> all(c.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  FilterParams fp;
  EXPECT_EQ(densify_level(tin, c, all, fp).size(), c.size());
}

TEST(Densify, PointFarAboveFlatTinIsRejected) {
  const PointCloud c = make_cloud({{5, 5, 5}});
  Tin tin = delaunay_triangulate({Vertex::virtual_at(0, 0, 0), Vertex::virtual_at(10, 0, 0), Vertex::virtual_at(10, 10, 0),
                                  Vertex::virtual_at(0, 10, 0)});
  EXPECT_TRUE(densify_level(tin, c, {0}, FilterParams{}).empty());
  EXPECT_EQ(tin.num_vertices(), 4u);
}

TEST(Densify, MatchesReferenceLoopAndFinalRecheck) {
  for (std::uint64_t seed : {7u, 8u, 9u}) {
    const PointCloud c = mixed_scene(seed);
    FilterParams fp;
    std::vector<std::size_t> seeds;
    Tin tin = initial_tin(c, 20.0, fp, &seeds);
    Tin ref = tin;
    std::set<std::size_t> seed_set(seeds.begin(), seeds.end());
    std::vector<std::size_t> candidates;
    for (std::size_t i = 0; i < c.size(); ++i)
      if (!seed_set.count(i)) candidates.push_back(i);

    std::vector<AcceptanceRecord> log;
    const std::vector<std::size_t> got = densify_level(tin, c, candidates, fp, &log);

    // Reference: same pass structure, oracle acceptance test.
    std::vector<std::size_t> expected, pending = candidates;
    while (true) {
      std::vector<std::size_t> rest;
      const std::size_t before = expected.size();
      for (std::size_t i : pending) {
        switch (oracle_judge(ref, c[i], fp)) {
          case Oracle::Accept:
            ref.insert(Vertex::from_point(c[i], i));
            expected.push_back(i);
            break;
          case Oracle::Duplicate:
            expected.push_back(i);
            break;
          case Oracle::Reject:
            rest.push_back(i);
        }
      }
      pending = rest;
      if (expected.size() == before) break;
    }
    EXPECT_EQ(got, expected) << "seed " << seed;
    EXPECT_GT(got.size(), candidates.size() / 2);
    EXPECT_LT(got.size(), candidates.size());

    // Every candidate left over is still rejected by the final TIN.
    std::set<std::size_t> acc(got.begin(), got.end());
    for (std::size_t i : candidates)
      if (!acc.count(i)) {
        EXPECT_EQ(oracle_judge(tin, c[i], fp), Oracle::Reject) << i;
      }
    EXPECT_EQ(log.size(), got.size());
  }
}

TEST(Densify, LogReplayNeverCreatesNewObtuseCorner) {
  const PointCloud c = mixed_scene(12);
  FilterParams fp;
  std::vector<std::size_t> seeds;
  Tin tin = initial_tin(c, 20.0, fp, &seeds);
  Tin replay = tin;
  std::set<std::size_t> seed_set(seeds.begin(), seeds.end());
  std::vector<std::size_t> candidates;
  for (std::size_t i = 0; i < c.size(); ++i)
    if (!seed_set.count(i)) candidates.push_back(i);
  std::vector<AcceptanceRecord> log;
  densify_level(tin, c, candidates, fp, &log);
  ASSERT_FALSE(log.empty());

  for (const AcceptanceRecord& r : log) {
    const Point& p = c[r.point_index];
    const Eigen::Vector3d P(p.x, p.y, p.z);
    const std::vector<SubTriangle> subs = sub_triangles(replay, P);
    ASSERT_EQ(r.split.size(), subs.size());
    for (const SubTriangle& s : subs) EXPECT_FALSE(becomes_obtuse(s, P)) << r.point_index;
    replay.insert(Vertex::from_point(p, r.point_index));
  }
}

TEST(Pyramid, LevelsHalveDownToTheFloor) {
  FilterParams fp;
  EXPECT_EQ(pyramid_cells(fp), (std::vector<double>{40, 20, 10, 5, 2.5}));
  fp.min_cell = 2.5;
  EXPECT_EQ(pyramid_cells(fp).back(), 2.5);
  fp.min_cell = 50;
  EXPECT_EQ(kind_of([&] { fp.validate(); }), ErrorKind::Parameter);
}

TEST(FilterGround, LevelPlaneIsAllGround) {
  Rng rng(3);
  PointCloud c;
  for (int i = 0; i < 20000; ++i) c.points.push_back({uniform(rng, 0, 100), uniform(rng, 0, 100), 12.5, 0});
  const GroundResult r = filter_ground(c, FilterParams{});
  EXPECT_EQ(r.ground.size(), c.size());
  EXPECT_TRUE(r.nonground.empty());
}

TEST(FilterGround, SlopedPlaneLosesOnlyBorderPoints) {
  // Corner seeds copy the nearest seed's height, so on a slope the TIN dips
  // away from the plane near the survey border.
  Rng rng(3);
  PointCloud c;
  for (int i = 0; i < 20000; ++i) {
    const double x = uniform(rng, 0, 100), y = uniform(rng, 0, 100);
    c.points.push_back({x, y, 0.01 * x - 0.015 * y, 0});
  }
  const GroundResult r = filter_ground(c, FilterParams{});
  EXPECT_LT(r.nonground.size(), c.size() / 100);
  for (std::size_t i : r.nonground) {
    const double border = std::min({c[i].x, c[i].y, 100 - c[i].x, 100 - c[i].y});
    EXPECT_LT(border, 10.0) << c[i].x << "," << c[i].y;
  }
}

TEST(FilterGround, RaisedBoxIsSeparatedExactly) {
  roadforge::testing::GroundSceneConfig cfg;
  cfg.size = 100;
  cfg.n_points = 30000;
  cfg.amplitude = 0;
  cfg.ground_sigma = 0;
  cfg.noise_fraction = 0;
  cfg.boxes = {{45, 45, 55, 55, 5.0}};
  const auto scene = roadforge::testing::make_ground_scene(cfg);
  const GroundResult r = filter_ground(scene.cloud, FilterParams{});
  std::size_t type1 = 0, type2 = 0;
  for (std::size_t i : r.nonground) type1 += scene.labels[i] == roadforge::testing::TrueLabel::Ground;
  for (std::size_t i : r.ground) type2 += scene.labels[i] != roadforge::testing::TrueLabel::Ground;
  EXPECT_EQ(type1, 0u);
  EXPECT_EQ(type2, 0u);
}

TEST(FilterGround, ResultInvariants) {
  roadforge::testing::GroundSceneConfig cfg;
  cfg.n_points = 40000;
  cfg.noise_fraction = 0;
  const auto scene = roadforge::testing::make_ground_scene(cfg);
  const GroundResult r = filter_ground(scene.cloud, FilterParams{});

  std::vector<int> seen(scene.cloud.size(), 0);
  for (std::size_t i : r.ground) ++seen.at(i);
  for (std::size_t i : r.nonground) ++seen.at(i);
  for (int s : seen) EXPECT_EQ(s, 1);

  ASSERT_EQ(r.levels.size(), 5u);
  for (std::size_t k = 1; k < r.levels.size(); ++k) EXPECT_EQ(r.levels[k].cell, r.levels[k - 1].cell / 2);
  std::size_t total = r.levels[0].seeds_added + r.final_pass_accepted;
  for (std::size_t k = 1; k < r.levels.size(); ++k) total += r.levels[k].accepted;
  EXPECT_EQ(total, r.ground.size());
  EXPECT_EQ(r.virtual_seeds, 4u);
}

TEST(FilterGround, TooFewSeedsIsDegenerate) {
  const PointCloud c = make_cloud({{0, 0, 0}, {1, 1, 0}});
  EXPECT_EQ(kind_of([&] { filter_ground(c, FilterParams{}); }), ErrorKind::Degenerate);
}
