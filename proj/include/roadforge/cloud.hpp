#pragma once

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "roadforge/error.hpp"

namespace roadforge {

struct Point {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  double intensity = 0.0;

  friend bool operator==(const Point&, const Point&) = default;
};

struct PointCloud {
  std::vector<Point> points;
  std::string source_id;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
  const Point& operator[](std::size_t i) const { return points[i]; }
};

struct Bounds {
  double min_x = 0, min_y = 0, min_z = 0;
  double max_x = 0, max_y = 0, max_z = 0;

  bool contains(const Point& p) const {
    return p.x >= min_x && p.x <= max_x && p.y >= min_y && p.y <= max_y &&
           p.z >= min_z && p.z <= max_z;
  }
};

inline Bounds bounds(const std::vector<Point>& points) {
  if (points.empty()) fail(ErrorKind::EmptyInput, "bounds of an empty point set");
  Bounds b{points[0].x, points[0].y, points[0].z,
           points[0].x, points[0].y, points[0].z};
  for (const Point& p : points) {
    b.min_x = std::min(b.min_x, p.x);
    b.min_y = std::min(b.min_y, p.y);
    b.min_z = std::min(b.min_z, p.z);
    b.max_x = std::max(b.max_x, p.x);
    b.max_y = std::max(b.max_y, p.y);
    b.max_z = std::max(b.max_z, p.z);
  }
  return b;
}

inline Bounds bounds(const PointCloud& cloud) { return bounds(cloud.points); }

inline PointCloud subset(const PointCloud& cloud, const std::vector<std::size_t>& indices) {
  PointCloud out;
  out.source_id = cloud.source_id;
  out.points.reserve(indices.size());
  for (std::size_t i : indices) out.points.push_back(cloud.points[i]);
  return out;
}

namespace detail {

inline bool parse_double(std::string_view token, double& out) {
  const char* first = token.data();
  const char* last = token.data() + token.size();
  if (first != last && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

inline std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> tokens;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    const std::size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i > start) tokens.push_back(line.substr(start, i - start));
  }
  return tokens;
}

/// Shortest decimal string that parses back to exactly `v`.
inline std::string shortest(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace detail

/// Parses ASCII XYZI text (`x y z intensity` per line, `#` comments).
inline PointCloud parse_cloud(std::istream& in, std::string source_id) {
  PointCloud cloud;
  cloud.source_id = std::move(source_id);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto tokens = detail::split_ws(line);
    if (tokens.empty() || tokens[0].front() == '#') continue;
    if (tokens.size() != 4) {
      fail(ErrorKind::Parse, cloud.source_id + ":" + std::to_string(line_no) +
                                 ": expected 4 fields, got " + std::to_string(tokens.size()));
    }
    double v[4];
    for (int k = 0; k < 4; ++k) {
      if (!detail::parse_double(tokens[k], v[k]) || !std::isfinite(v[k])) {
        fail(ErrorKind::Parse, cloud.source_id + ":" + std::to_string(line_no) +
                                   ": bad number '" + std::string(tokens[k]) + "'");
      }
    }
    if (v[3] < 0.0) {
      fail(ErrorKind::Parse, cloud.source_id + ":" + std::to_string(line_no) +
                                 ": negative intensity");
    }
    cloud.points.push_back({v[0], v[1], v[2], v[3]});
  }
  if (cloud.points.empty()) fail(ErrorKind::EmptyInput, cloud.source_id + ": no points");
  return cloud;
}

inline PointCloud load_cloud(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open '" + path + "'");
  return parse_cloud(in, path);
}

inline std::string format_point(const Point& p) {
  char buf[128];
  std::snprintf(buf, sizeof(buf), "%.6f %.6f %.6f ", p.x, p.y, p.z);
  return std::string(buf) + detail::shortest(p.intensity);
}

inline void write_cloud(std::ostream& out, const PointCloud& cloud) {
  if (cloud.empty()) fail(ErrorKind::EmptyInput, "refusing to write an empty cloud");
  for (const Point& p : cloud.points) out << format_point(p) << '\n';
}

inline void save_cloud(const PointCloud& cloud, const std::string& path) {
  if (cloud.empty()) fail(ErrorKind::EmptyInput, "refusing to write an empty cloud");
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::Io, "cannot write '" + path + "'");
  write_cloud(out, cloud);
  if (!out) fail(ErrorKind::Io, "write failed for '" + path + "'");
}

}  // namespace roadforge
