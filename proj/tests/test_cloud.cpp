#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "roadforge/cloud.hpp"
#include "roadforge/random.hpp"
#include "roadforge/spatial_index.hpp"
#include "support/test_util.hpp"

using namespace roadforge;
using roadforge::testing::kind_of;
using roadforge::testing::read_file;
using roadforge::testing::temp_path;

namespace {

std::size_t brute_count(const std::vector<Point>& pts, const Point& q, double r, std::size_t skip) {
  std::size_t n = 0;
  for (std::size_t j = 0; j < pts.size(); ++j) {
    if (j == skip) continue;
    const double dx = pts[j].x - q.x, dy = pts[j].y - q.y, dz = pts[j].z - q.z;
    if (dx * dx + dy * dy + dz * dz <= r * r) ++n;
  }
  return n;
}

PointCloud random_cloud(std::size_t n, double extent, std::uint64_t seed) {
  Rng rng(seed);
  PointCloud c;
  for (std::size_t i = 0; i < n; ++i)
    c.points.push_back({uniform(rng, 0, extent), uniform(rng, 0, extent), uniform(rng, 0, extent / 4), uniform(rng, 0, 255)});
  return c;
}

}  // namespace

TEST(CloudIo, ParsesThreePointsAndBounds) {
  std::istringstream in("0 0 0 10\n1 0 0 20\n0 1 0 30\n");
  const PointCloud c = parse_cloud(in, "mem");
  ASSERT_EQ(c.size(), 3u);
  EXPECT_EQ(c[1], (Point{1, 0, 0, 20}));
  const Bounds b = bounds(c);
  EXPECT_EQ(b.min_x, 0);
  EXPECT_EQ(b.max_x, 1);
  EXPECT_EQ(b.max_y, 1);
  EXPECT_EQ(b.min_z, 0);
  EXPECT_EQ(b.max_z, 0);
}

TEST(CloudIo, SkipsCommentsAndBlankLines) {
  std::istringstream in("# header\n\n1 2 3 4\n   \n");
  EXPECT_EQ(parse_cloud(in, "mem").size(), 1u);
}

TEST(CloudIo, EmptyInputIsAnError) {
  std::istringstream in("");
  EXPECT_EQ(kind_of([&] { parse_cloud(in, "mem"); }), ErrorKind::EmptyInput);
}

TEST(CloudIo, MalformedLineNamesLineNumber) {
  std::istringstream in("0 0 0 1\n0 0 x 1\n");
  try {
    parse_cloud(in, "mem");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Parse);
    EXPECT_NE(std::string(e.what()).find(":2"), std::string::npos) << e.what();
  }
}

TEST(CloudIo, RejectsNegativeIntensityAndWrongFieldCount) {
  std::istringstream neg("0 0 0 -1\n");
  EXPECT_EQ(kind_of([&] { parse_cloud(neg, "mem"); }), ErrorKind::Parse);
  std::istringstream three("0 0 0\n");
  EXPECT_EQ(kind_of([&] { parse_cloud(three, "mem"); }), ErrorKind::Parse);
}

TEST(CloudIo, MissingFileIsIoError) {
  EXPECT_EQ(kind_of([] { load_cloud("/nonexistent/roadforge.xyz"); }), ErrorKind::Io);
}

TEST(CloudIo, FixedFormatting) {
  EXPECT_EQ(format_point({1.5, 2.5, 3.5, 7}), "1.500000 2.500000 3.500000 7");
}

TEST(CloudIo, SaveEmptyCloudFails) {
  EXPECT_EQ(kind_of([] { save_cloud(PointCloud{}, temp_path("empty.xyz")); }), ErrorKind::EmptyInput);
}

TEST(CloudIo, SaveLoadRoundTripIsExact) {
  PointCloud c;
  Rng rng(3);
  // Values representable at 6 decimals survive the text round trip exactly.
  for (int i = 0; i < 200; ++i)
    c.points.push_back({std::round(uniform(rng, -1e3, 1e3) * 1e6) / 1e6, std::round(uniform(rng, -1e3, 1e3) * 1e6) / 1e6,
                        std::round(uniform(rng, -50, 50) * 1e6) / 1e6, std::floor(uniform(rng, 0, 65535))});
  const std::string path = temp_path("roundtrip.xyz");
  save_cloud(c, path);
  const PointCloud back = load_cloud(path);
  ASSERT_EQ(back.size(), c.size());
  for (std::size_t i = 0; i < c.size(); ++i) EXPECT_EQ(format_point(back[i]), format_point(c[i]));
  const std::string path2 = temp_path("roundtrip2.xyz");
  save_cloud(back, path2);
  EXPECT_EQ(read_file(path), read_file(path2));
  std::remove(path.c_str());
  std::remove(path2.c_str());
}

TEST(SpatialIndex, RadiusCountsMatchBruteForce) {
  const PointCloud c = random_cloud(1000, 20.0, 11);
  const SpatialIndex index(c);
  Rng rng(12);
  for (int q = 0; q < 200; ++q) {
    const std::size_t i = uniform_index(rng, c.size());
    const double r = uniform(rng, 0.2, 4.0);
    EXPECT_EQ(count_within_radius(index, i, r), brute_count(c.points, c[i], r, i));
    const Point free{uniform(rng, 0, 20), uniform(rng, 0, 20), uniform(rng, 0, 5), 0};
    EXPECT_EQ(count_within_radius(index, free, r), brute_count(c.points, free, r, c.size()));
  }
}

TEST(SpatialIndex, BoundaryDistanceIsInclusive) {
  PointCloud c;
  c.points = {{0, 0, 0, 0}, {1, 0, 0, 0}, {2, 0, 0, 0}};
  const SpatialIndex index(c);
  EXPECT_EQ(count_within_radius(index, std::size_t{0}, 1.0), 1u);
  EXPECT_EQ(count_within_radius(index, std::size_t{1}, 1.0), 2u);
}

TEST(SpatialIndex, QueryPointExcludesOneCoincidentPoint) {
  PointCloud c;
  c.points = {{0, 0, 0, 0}, {0.5, 0, 0, 0}};
  const SpatialIndex index(c);
  EXPECT_EQ(count_within_radius(index, Point{0, 0, 0, 0}, 1.0), 1u);
}

TEST(SpatialIndex, NonPositiveRadiusIsParameterError) {
  const PointCloud c = random_cloud(10, 1.0, 1);
  const SpatialIndex index(c);
  EXPECT_EQ(kind_of([&] { count_within_radius(index, std::size_t{0}, 0.0); }), ErrorKind::Parameter);
}

TEST(Outliers, IsolatedPointIsTheOnlyOutlier) {
  PointCloud c;
  Rng rng(4);
  for (int i = 0; i < 10; ++i) c.points.push_back({uniform(rng, 0, 0.1), uniform(rng, 0, 0.1), uniform(rng, 0, 0.1), 1});
  c.points.push_back({100, 0, 0, 1});
  const OutlierSplit s = remove_outliers(c, 1.0, 3);
  ASSERT_EQ(s.outlier_indices.size(), 1u);
  EXPECT_EQ(s.outlier_indices[0], 10u);
  EXPECT_EQ(s.inliers.size(), 10u);
}

TEST(Outliers, KMinOneKeepsClusteredCloud) {
  PointCloud c;
  for (int i = 0; i < 5; ++i) c.points.push_back({0.1 * i, 0, 0, 0});
  EXPECT_TRUE(remove_outliers(c, 1.0, 1).outliers.empty());
}

TEST(Outliers, PartitionMatchesBruteForce) {
  const PointCloud c = random_cloud(800, 8.0, 21);
  const OutlierSplit s = remove_outliers(c, 0.5, 4);
  EXPECT_EQ(s.inliers.size() + s.outliers.size(), c.size());
  std::vector<int> seen(c.size(), 0);
  for (std::size_t i : s.inlier_indices) {
    ++seen[i];
    EXPECT_GE(brute_count(c.points, c[i], 0.5, i), 4u);
  }
  for (std::size_t i : s.outlier_indices) {
    ++seen[i];
    EXPECT_LT(brute_count(c.points, c[i], 0.5, i), 4u);
  }
  for (int v : seen) EXPECT_EQ(v, 1);
  EXPECT_TRUE(std::is_sorted(s.inlier_indices.begin(), s.inlier_indices.end()));
  EXPECT_TRUE(std::is_sorted(s.outlier_indices.begin(), s.outlier_indices.end()));
}

TEST(Outliers, SinglePassDoesNotCascade) {
  // Chain with spacing 1: ends have one neighbour, interior points two.
  PointCloud c;
  for (int i = 0; i < 5; ++i) c.points.push_back({static_cast<double>(i), 0, 0, 0});
  const OutlierSplit first = remove_outliers(c, 1.0, 2);
  EXPECT_EQ(first.outlier_indices, (std::vector<std::size_t>{0, 4}));
  // A second pass over the survivors peels the new ends.
  const OutlierSplit second = remove_outliers(first.inliers, 1.0, 2);
  EXPECT_EQ(second.outliers.size(), 2u);
}
