#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <string>
#include <vector>

#include "roadforge/error.hpp"
#include "roadforge/tin.hpp"

namespace roadforge {

inline constexpr double kNoData = -9999.0;

/// Regular elevation grid. Row 0 is the southernmost row (minimum y).
struct RasterGrid {
  double x0 = 0.0;
  double y0 = 0.0;
  double cell = 1.0;
  std::size_t n_rows = 1;
  std::size_t n_cols = 1;
  std::vector<double> cells;  // row-major, kNoData where undefined

  double& at(std::size_t r, std::size_t c) { return cells[r * n_cols + c]; }
  double at(std::size_t r, std::size_t c) const { return cells[r * n_cols + c]; }
  double center_x(std::size_t c) const { return x0 + (static_cast<double>(c) + 0.5) * cell; }
  double center_y(std::size_t r) const { return y0 + (static_cast<double>(r) + 0.5) * cell; }
};

/// Samples the TIN at every cell centre by barycentric interpolation.
inline RasterGrid rasterize_dem(const Tin& tin, double cell) {
  require_param(cell > 0.0 && std::isfinite(cell), "DEM cell size must be positive");
  if (tin.num_triangles() == 0) fail(ErrorKind::EmptyInput, "DEM from an empty TIN");
  double min_x = tin.vertex(0).x, max_x = min_x, min_y = tin.vertex(0).y, max_y = min_y;
  for (const Vertex& v : tin.vertices()) {
    min_x = std::min(min_x, v.x);
    max_x = std::max(max_x, v.x);
    min_y = std::min(min_y, v.y);
    max_y = std::max(max_y, v.y);
  }
  RasterGrid grid;
  grid.x0 = min_x;
  grid.y0 = min_y;
  grid.cell = cell;
  grid.n_cols = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil((max_x - min_x) / cell)));
  grid.n_rows = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil((max_y - min_y) / cell)));
  grid.cells.assign(grid.n_rows * grid.n_cols, kNoData);

  int hint = 0;
  for (std::size_t r = 0; r < grid.n_rows; ++r) {
    for (std::size_t c = 0; c < grid.n_cols; ++c) {
      const double x = grid.center_x(c), y = grid.center_y(r);
      const Location loc = tin.walk(x, y, hint);
      if (loc.kind == LocateKind::Outside) continue;
      hint = loc.triangle;
      grid.at(r, c) = tin.plane_z(loc.triangle, x, y);
    }
  }
  return grid;
}

/// Esri ASCII grid, north-up (last internal row written first).
inline void write_ascii_grid(std::ostream& out, const RasterGrid& grid) {
  char buf[64];
  out << "ncols " << grid.n_cols << '\n' << "nrows " << grid.n_rows << '\n';
  std::snprintf(buf, sizeof(buf), "%.6f", grid.x0);
  out << "xllcorner " << buf << '\n';
  std::snprintf(buf, sizeof(buf), "%.6f", grid.y0);
  out << "yllcorner " << buf << '\n';
  std::snprintf(buf, sizeof(buf), "%.6f", grid.cell);
  out << "cellsize " << buf << '\n';
  out << "NODATA_value -9999\n";
  for (std::size_t k = 0; k < grid.n_rows; ++k) {
    const std::size_t r = grid.n_rows - 1 - k;
    for (std::size_t c = 0; c < grid.n_cols; ++c) {
      const double v = grid.at(r, c);
      if (v == kNoData) {
        out << "-9999";
      } else {
        std::snprintf(buf, sizeof(buf), "%.6f", v);
        out << buf;
      }
      out << (c + 1 == grid.n_cols ? '\n' : ' ');
    }
  }
}

inline void save_ascii_grid(const RasterGrid& grid, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::Io, "cannot write '" + path + "'");
  write_ascii_grid(out, grid);
  if (!out) fail(ErrorKind::Io, "write failed for '" + path + "'");
}

}  // namespace roadforge
