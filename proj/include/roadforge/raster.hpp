#pragma once

// Intensity rasterization of ground returns for road-marking extraction:
// histogram thresholding, gridding, Gaussian smoothing, and sliding-window
// tiling pruned by Sobel edge density.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <unordered_map>
#include <vector>

#include "roadforge/cloud.hpp"
#include "roadforge/error.hpp"
#include "roadforge/pgm.hpp"

namespace roadforge {

/// Gridded intensity. Pixel (r, c) covers [x0 + c*res, x0 + (c+1)*res) x
/// [y0 + r*res, y0 + (r+1)*res); row 0 is the minimum-y row. 0 = empty.
struct IntensityImage {
  double x0 = 0.0;
  double y0 = 0.0;
  double resolution = 1.0;
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<double> pixels;

  IntensityImage() = default;
  IntensityImage(std::size_t w, std::size_t h, double fill = 0.0)
      : width(w), height(h), pixels(w * h, fill) {}

  double& at(std::size_t r, std::size_t c) { return pixels[r * width + c]; }
  double at(std::size_t r, std::size_t c) const { return pixels[r * width + c]; }
};

enum class Aggregator { Max, Mean };
enum class ThresholdMethod { Otsu, Percentile };

struct RasterParams {
  double resolution = 0.05;  // m / px
  Aggregator aggregator = Aggregator::Max;
  ThresholdMethod threshold_method = ThresholdMethod::Otsu;
  double percentile = 50.0;  // used when threshold_method == Percentile
  double sigma = 1.0;        // px
  std::size_t window = 256;
  std::size_t stride = 256;
  double edge_mag_thresh = 64.0;  // on the 0-255 scale
  double min_edge_density = 0.01;

  void validate() const {
    require_param(resolution > 0.0, "resolution must be positive");
    require_param(sigma > 0.0, "sigma must be positive");
    require_param(stride >= 1 && window >= stride, "need window >= stride >= 1");
    require_param(window >= 3, "window must be at least 3 px");
    require_param(min_edge_density > 0.0 && min_edge_density < 1.0, "min_edge_density must lie in (0, 1)");
    require_param(percentile >= 0.0 && percentile <= 100.0, "percentile must lie in [0, 100]");
  }
};

// ---------------------------------------------------------------------------
// Thresholding

/// Histogram bin (0..255) of `v` after min-max scaling to 0-255.
inline int intensity_bin(double v, double lo, double hi) {
  if (!(hi > lo)) return 0;
  const double s = (v - lo) / (hi - lo) * 255.0;
  return std::clamp(static_cast<int>(std::floor(s)), 0, 255);
}

/// Otsu threshold bin t in [1, 255]: class 0 = bins < t, class 1 = bins >= t.
/// Ties resolve to the smallest t.
inline int otsu_bin(const std::array<std::uint64_t, 256>& hist) {
  std::uint64_t total = 0;
  double sum_all = 0.0;
  for (int b = 0; b < 256; ++b) {
    total += hist[b];
    sum_all += static_cast<double>(b) * static_cast<double>(hist[b]);
  }
  int best_t = 1;
  double best_var = -1.0;
  std::uint64_t n0 = 0;
  double sum0 = 0.0;
  for (int t = 1; t < 256; ++t) {
    n0 += hist[t - 1];
    sum0 += static_cast<double>(t - 1) * static_cast<double>(hist[t - 1]);
    const std::uint64_t n1 = total - n0;
    if (n0 == 0 || n1 == 0) continue;
    const double w0 = static_cast<double>(n0) / static_cast<double>(total);
    const double w1 = 1.0 - w0;
    const double mu0 = sum0 / static_cast<double>(n0);
    const double mu1 = (sum_all - sum0) / static_cast<double>(n1);
    const double var = w0 * w1 * (mu0 - mu1) * (mu0 - mu1);
    if (var > best_var) {
      best_var = var;
      best_t = t;
    }
  }
  return best_t;
}

struct ThresholdResult {
  std::vector<Point> retained;
  double threshold = 0.0;  // intensity value; points >= threshold kept
};

/// Drops low-intensity returns. Otsu works on a 256-bin histogram of min-max
/// scaled intensities; the percentile rule uses the nearest-rank percentile.
inline ThresholdResult threshold_points(const std::vector<Point>& points, ThresholdMethod method,
                                        double percentile = 50.0) {
  if (points.empty()) fail(ErrorKind::EmptyInput, "thresholding an empty point set");
  ThresholdResult out;
  if (method == ThresholdMethod::Percentile) {
    require_param(percentile >= 0.0 && percentile <= 100.0, "percentile must lie in [0, 100]");
    std::vector<double> v;
    v.reserve(points.size());
    for (const Point& p : points) v.push_back(p.intensity);
    std::sort(v.begin(), v.end());
    const auto rank = static_cast<std::size_t>(std::ceil(percentile / 100.0 * static_cast<double>(v.size())));
    out.threshold = v[rank == 0 ? 0 : rank - 1];
    for (const Point& p : points)
      if (p.intensity >= out.threshold) out.retained.push_back(p);
    return out;
  }
  double lo = points[0].intensity, hi = lo;
  for (const Point& p : points) {
    lo = std::min(lo, p.intensity);
    hi = std::max(hi, p.intensity);
  }
  if (!(hi > lo)) fail(ErrorKind::Degenerate, "constant intensities: Otsu histogram is degenerate");
  std::array<std::uint64_t, 256> hist{};
  for (const Point& p : points) ++hist[static_cast<std::size_t>(intensity_bin(p.intensity, lo, hi))];
  const int t = otsu_bin(hist);
  out.threshold = lo + static_cast<double>(t) / 255.0 * (hi - lo);
  for (const Point& p : points)
    if (intensity_bin(p.intensity, lo, hi) >= t) out.retained.push_back(p);
  return out;
}

// ---------------------------------------------------------------------------
// Rasterization

inline IntensityImage rasterize_intensity(const std::vector<Point>& points, double resolution,
                                          Aggregator aggregator) {
  require_param(resolution > 0.0, "resolution must be positive");
  if (points.empty()) fail(ErrorKind::EmptyInput, "rasterizing an empty point set");
  const Bounds b = bounds(points);
  IntensityImage img(static_cast<std::size_t>(std::floor((b.max_x - b.min_x) / resolution)) + 1,
                     static_cast<std::size_t>(std::floor((b.max_y - b.min_y) / resolution)) + 1);
  img.x0 = b.min_x;
  img.y0 = b.min_y;
  img.resolution = resolution;
  std::vector<std::uint32_t> counts(img.pixels.size(), 0);
  for (const Point& p : points) {
    const auto c = std::min(img.width - 1, static_cast<std::size_t>(std::floor((p.x - img.x0) / resolution)));
    const auto r = std::min(img.height - 1, static_cast<std::size_t>(std::floor((p.y - img.y0) / resolution)));
    const std::size_t k = r * img.width + c;
    if (aggregator == Aggregator::Max) {
      img.pixels[k] = counts[k] == 0 ? p.intensity : std::max(img.pixels[k], p.intensity);
    } else {
      img.pixels[k] += p.intensity;
    }
    ++counts[k];
  }
  if (aggregator == Aggregator::Mean) {
    for (std::size_t k = 0; k < img.pixels.size(); ++k)
      if (counts[k] > 0) img.pixels[k] /= static_cast<double>(counts[k]);
  }
  return img;
}

// ---------------------------------------------------------------------------
// Smoothing

inline std::vector<double> gaussian_kernel(double sigma) {
  require_param(sigma > 0.0 && std::isfinite(sigma), "sigma must be positive");
  const auto radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    const double v = std::exp(-0.5 * (i * i) / (sigma * sigma));
    k[static_cast<std::size_t>(i + radius)] = v;
    sum += v;
  }
  for (double& v : k) v /= sum;
  return k;
}

/// Half-sample symmetric reflection (d c b a | a b c d | d c b a).
inline std::size_t reflect_index(long long i, std::size_t n) {
  const auto period = static_cast<long long>(2 * n);
  long long m = i % period;
  if (m < 0) m += period;
  if (m >= static_cast<long long>(n)) m = period - 1 - m;
  return static_cast<std::size_t>(m);
}

inline IntensityImage gaussian_smooth(const IntensityImage& img, double sigma) {
  const std::vector<double> k = gaussian_kernel(sigma);
  const auto radius = static_cast<long long>(k.size() / 2);
  IntensityImage tmp = img;
  for (std::size_t r = 0; r < img.height; ++r) {
    for (std::size_t c = 0; c < img.width; ++c) {
      double acc = 0.0;
      for (long long j = -radius; j <= radius; ++j)
        acc += k[static_cast<std::size_t>(j + radius)] *
               img.at(r, reflect_index(static_cast<long long>(c) + j, img.width));
      tmp.at(r, c) = acc;
    }
  }
  IntensityImage out = tmp;
  for (std::size_t r = 0; r < img.height; ++r) {
    for (std::size_t c = 0; c < img.width; ++c) {
      double acc = 0.0;
      for (long long j = -radius; j <= radius; ++j)
        acc += k[static_cast<std::size_t>(j + radius)] *
               tmp.at(reflect_index(static_cast<long long>(r) + j, img.height), c);
      out.at(r, c) = acc;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Edges and tiling

/// Min-max scale to 0-255 (constant images map to 0).
inline IntensityImage scale_to_byte_range(const IntensityImage& img) {
  IntensityImage out = img;
  if (img.pixels.empty()) return out;
  const auto [lo_it, hi_it] = std::minmax_element(img.pixels.begin(), img.pixels.end());
  const double lo = *lo_it, hi = *hi_it;
  for (double& v : out.pixels) v = hi > lo ? (v - lo) / (hi - lo) * 255.0 : 0.0;
  return out;
}

/// Rounds values already on the 0-255 scale.
inline Image8 quantize_image8(const IntensityImage& img) {
  Image8 out;
  out.width = img.width;
  out.height = img.height;
  out.pixels.resize(img.pixels.size());
  for (std::size_t k = 0; k < img.pixels.size(); ++k)
    out.pixels[k] = static_cast<std::uint8_t>(std::lround(std::clamp(img.pixels[k], 0.0, 255.0)));
  return out;
}

inline Image8 to_image8(const IntensityImage& img) { return quantize_image8(scale_to_byte_range(img)); }

inline double sobel_magnitude(const IntensityImage& img, std::size_t r, std::size_t c) {
  auto v = [&](std::size_t rr, std::size_t cc) { return img.at(rr, cc); };
  const double gx = (v(r - 1, c + 1) + 2.0 * v(r, c + 1) + v(r + 1, c + 1)) -
                    (v(r - 1, c - 1) + 2.0 * v(r, c - 1) + v(r + 1, c - 1));
  const double gy = (v(r + 1, c - 1) + 2.0 * v(r + 1, c) + v(r + 1, c + 1)) -
                    (v(r - 1, c - 1) + 2.0 * v(r - 1, c) + v(r - 1, c + 1));
  return std::sqrt(gx * gx + gy * gy);
}

/// Fraction of interior pixels with Sobel magnitude >= mag_thresh.
inline double edge_density(const IntensityImage& region, double mag_thresh) {
  if (region.width < 3 || region.height < 3) fail(ErrorKind::Parameter, "edge density needs a region of at least 3x3");
  std::size_t hits = 0;
  for (std::size_t r = 1; r + 1 < region.height; ++r)
    for (std::size_t c = 1; c + 1 < region.width; ++c)
      if (sobel_magnitude(region, r, c) >= mag_thresh) ++hits;
  return static_cast<double>(hits) / static_cast<double>((region.width - 2) * (region.height - 2));
}

struct Tile {
  std::size_t row = 0;  // tile grid index
  std::size_t col = 0;
  double edge_density = 0.0;
  IntensityImage image;  // 0-255 scaled, zero padded
};

struct TileSet {
  std::vector<Tile> kept;
  std::vector<Tile> dropped;  // pixel data cleared; kept for the manifest
  std::size_t tile_rows = 0;
  std::size_t tile_cols = 0;
};

inline std::size_t window_count(std::size_t extent, std::size_t window, std::size_t stride) {
  if (extent <= window) return 1;
  return (extent - window + stride - 1) / stride + 1;
}

/// Sliding windows over the 0-255 scaled image; windows without enough
/// edge pixels are dropped.
inline TileSet split_tiles(const IntensityImage& image, const RasterParams& params) {
  params.validate();
  if (image.pixels.empty()) fail(ErrorKind::EmptyInput, "tiling an empty image");
  const IntensityImage scaled = scale_to_byte_range(image);
  TileSet set;
  set.tile_rows = window_count(image.height, params.window, params.stride);
  set.tile_cols = window_count(image.width, params.window, params.stride);
  for (std::size_t tr = 0; tr < set.tile_rows; ++tr) {
    for (std::size_t tc = 0; tc < set.tile_cols; ++tc) {
      Tile tile{tr, tc, 0.0, IntensityImage(params.window, params.window, 0.0)};
      const std::size_t r0 = tr * params.stride, c0 = tc * params.stride;
      tile.image.resolution = image.resolution;
      tile.image.x0 = image.x0 + static_cast<double>(c0) * image.resolution;
      tile.image.y0 = image.y0 + static_cast<double>(r0) * image.resolution;
      for (std::size_t r = 0; r < params.window && r0 + r < image.height; ++r)
        for (std::size_t c = 0; c < params.window && c0 + c < image.width; ++c)
          tile.image.at(r, c) = scaled.at(r0 + r, c0 + c);
      tile.edge_density = edge_density(tile.image, params.edge_mag_thresh);
      if (tile.edge_density >= params.min_edge_density) {
        set.kept.push_back(std::move(tile));
      } else {
        tile.image.pixels.clear();
        set.dropped.push_back(std::move(tile));
      }
    }
  }
  return set;
}

inline std::string tile_name(std::size_t row, std::size_t col) {
  return "tile_" + std::to_string(row) + "_" + std::to_string(col) + ".pgm";
}

}  // namespace roadforge
