#pragma once

// Degraded-glyph generator for training text recognisers on point-cloud
// intensity images: contour distortion, 3x3 median smoothing, salt-and-pepper
// noise, then area-averaged downsampling.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "roadforge/error.hpp"
#include "roadforge/pgm.hpp"
#include "roadforge/random.hpp"

namespace roadforge {

struct BinaryImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> bits;  // 1 = foreground

  BinaryImage() = default;
  BinaryImage(std::size_t w, std::size_t h, bool fill = false)
      : width(w), height(h), bits(w * h, fill ? 1 : 0) {}

  bool at(std::size_t r, std::size_t c) const { return bits[r * width + c] != 0; }
  void set(std::size_t r, std::size_t c, bool v) { bits[r * width + c] = v ? 1 : 0; }
  std::size_t count() const { return static_cast<std::size_t>(std::count(bits.begin(), bits.end(), 1)); }
  friend bool operator==(const BinaryImage&, const BinaryImage&) = default;
};

enum class DistortMode { Basic, Optimized };

enum class GlyphPreset { Plain, Distort, Standard, Optimized1, Optimized2 };

struct DegradeConfig {
  double p_distort = 0.3;
  DistortMode distort_mode = DistortMode::Basic;
  int median_passes = 1;
  double noise_density = 0.02;
  std::size_t target_size = 32;
  std::uint64_t rng_seed = 0;

  void validate() const {
    require_param(p_distort >= 0.0 && p_distort <= 1.0, "p_distort must lie in [0, 1]");
    require_param(noise_density >= 0.0 && noise_density <= 1.0, "noise_density must lie in [0, 1]");
    require_param(median_passes >= 0 && median_passes <= 2, "median_passes must be 0, 1 or 2");
    require_param(target_size >= 8, "target_size must be at least 8");
  }
};

inline const char* to_string(GlyphPreset p) {
  switch (p) {
    case GlyphPreset::Plain: return "plain";
    case GlyphPreset::Distort: return "distort";
    case GlyphPreset::Standard: return "standard";
    case GlyphPreset::Optimized1: return "optimized1";
    case GlyphPreset::Optimized2: return "optimized2";
  }
  return "plain";
}

inline GlyphPreset parse_preset(const std::string& name) {
  for (GlyphPreset p : {GlyphPreset::Plain, GlyphPreset::Distort, GlyphPreset::Standard,
                        GlyphPreset::Optimized1, GlyphPreset::Optimized2})
    if (name == to_string(p)) return p;
  fail(ErrorKind::Config, "unknown glyph preset '" + name + "'");
}

/// Applies a preset's step selection on top of `base` (probabilities, size
/// and seed come from `base`).
inline DegradeConfig preset_config(GlyphPreset preset, DegradeConfig base) {
  switch (preset) {
    case GlyphPreset::Plain:
      base.p_distort = 0.0;
      base.median_passes = 0;
      base.noise_density = 0.0;
      break;
    case GlyphPreset::Distort:
      base.distort_mode = DistortMode::Basic;
      base.median_passes = 0;
      base.noise_density = 0.0;
      break;
    case GlyphPreset::Standard:
      base.distort_mode = DistortMode::Basic;
      base.median_passes = 1;
      break;
    case GlyphPreset::Optimized1:
      base.distort_mode = DistortMode::Optimized;
      base.median_passes = 1;
      break;
    case GlyphPreset::Optimized2:
      base.distort_mode = DistortMode::Optimized;
      base.median_passes = 2;
      break;
  }
  return base;
}

/// Foreground pixels with at least one background 4-neighbour (outside the
/// image counts as background), as row-major pixel offsets.
inline std::vector<std::size_t> extract_contour(const BinaryImage& img) {
  std::vector<std::size_t> out;
  for (std::size_t r = 0; r < img.height; ++r) {
    for (std::size_t c = 0; c < img.width; ++c) {
      if (!img.at(r, c)) continue;
      const bool edge = r == 0 || c == 0 || r + 1 == img.height || c + 1 == img.width ||
                        !img.at(r - 1, c) || !img.at(r + 1, c) || !img.at(r, c - 1) || !img.at(r, c + 1);
      if (edge) out.push_back(r * img.width + c);
    }
  }
  if (out.empty()) fail(ErrorKind::EmptyInput, "glyph has no foreground pixels");
  return out;
}

/// Basic: each contour pixel is cleared with probability p. Optimized: each
/// contour pixel is, with probability p, either cleared or (50/50) grows into
/// a uniformly chosen in-image background 4-neighbour.
inline BinaryImage distort_contour(const BinaryImage& img, double p, DistortMode mode, Rng& rng) {
  require_param(p >= 0.0 && p <= 1.0, "distortion probability must lie in [0, 1]");
  BinaryImage out = img;
  if (img.count() == 0) return out;
  for (std::size_t k : extract_contour(img)) {
    if (!bernoulli(rng, p)) continue;
    if (mode == DistortMode::Basic) {
      out.bits[k] = 0;
      continue;
    }
    const bool grow = bernoulli(rng, 0.5);
    if (grow) {
      const std::size_t r = k / img.width, c = k % img.width;
      std::array<std::size_t, 4> bg{};
      std::size_t n = 0;
      if (r > 0 && !img.at(r - 1, c)) bg[n++] = k - img.width;
      if (r + 1 < img.height && !img.at(r + 1, c)) bg[n++] = k + img.width;
      if (c > 0 && !img.at(r, c - 1)) bg[n++] = k - 1;
      if (c + 1 < img.width && !img.at(r, c + 1)) bg[n++] = k + 1;
      if (n > 0) {
        out.bits[bg[uniform_index(rng, n)]] = 1;
        continue;
      }
    }
    out.bits[k] = 0;
  }
  return out;
}

/// 3x3 majority filter (outside = background), applied `passes` times.
inline BinaryImage median_filter(const BinaryImage& img, int passes) {
  require_param(passes >= 0, "median passes must be >= 0");
  BinaryImage cur = img;
  for (int pass = 0; pass < passes; ++pass) {
    BinaryImage next(cur.width, cur.height);
    for (std::size_t r = 0; r < cur.height; ++r) {
      for (std::size_t c = 0; c < cur.width; ++c) {
        int on = 0;
        for (int dr = -1; dr <= 1; ++dr) {
          for (int dc = -1; dc <= 1; ++dc) {
            const long long rr = static_cast<long long>(r) + dr, cc = static_cast<long long>(c) + dc;
            if (rr < 0 || cc < 0 || rr >= static_cast<long long>(cur.height) ||
                cc >= static_cast<long long>(cur.width))
              continue;
            on += cur.at(static_cast<std::size_t>(rr), static_cast<std::size_t>(cc)) ? 1 : 0;
          }
        }
        next.set(r, c, on >= 5);
      }
    }
    cur = std::move(next);
  }
  return cur;
}

/// Flips every pixel independently with probability `density`.
inline BinaryImage add_salt_pepper(const BinaryImage& img, double density, Rng& rng) {
  require_param(density >= 0.0 && density <= 1.0, "noise density must lie in [0, 1]");
  BinaryImage out = img;
  for (auto& b : out.bits)
    if (bernoulli(rng, density)) b = b ? 0 : 1;
  return out;
}

/// Scales the longest side to `target` keeping aspect ratio. Each output
/// pixel is foreground iff its area-averaged coverage is >= 0.5.
inline BinaryImage downsample(const BinaryImage& img, std::size_t target) {
  const std::size_t longest = std::max(img.width, img.height);
  if (target < 1 || target > longest)
    fail(ErrorKind::Parameter, "downsample target must lie in [1, " + std::to_string(longest) + "]");
  const double scale = static_cast<double>(target) / static_cast<double>(longest);
  const std::size_t ow = img.width == longest ? target
                                              : std::max<std::size_t>(1, std::lround(img.width * scale));
  const std::size_t oh = img.height == longest ? target
                                               : std::max<std::size_t>(1, std::lround(img.height * scale));
  const double sx = static_cast<double>(img.width) / static_cast<double>(ow);
  const double sy = static_cast<double>(img.height) / static_cast<double>(oh);
  BinaryImage out(ow, oh);
  for (std::size_t r = 0; r < oh; ++r) {
    const double y0 = static_cast<double>(r) * sy, y1 = y0 + sy;
    for (std::size_t c = 0; c < ow; ++c) {
      const double x0 = static_cast<double>(c) * sx, x1 = x0 + sx;
      double covered = 0.0;
      for (auto ir = static_cast<std::size_t>(std::floor(y0)); ir < img.height && static_cast<double>(ir) < y1; ++ir) {
        const double hy = std::min(y1, ir + 1.0) - std::max(y0, static_cast<double>(ir));
        if (hy <= 0.0) continue;
        for (auto ic = static_cast<std::size_t>(std::floor(x0)); ic < img.width && static_cast<double>(ic) < x1; ++ic) {
          if (!img.at(ir, ic)) continue;
          const double hx = std::min(x1, ic + 1.0) - std::max(x0, static_cast<double>(ic));
          if (hx > 0.0) covered += hx * hy;
        }
      }
      out.set(r, c, covered / (sx * sy) >= 0.5 - 1e-12);
    }
  }
  return out;
}

/// distort -> median -> noise -> downsample, from one RNG seeded by rng_seed.
inline BinaryImage degrade(const BinaryImage& img, const DegradeConfig& config) {
  config.validate();
  if (img.width == 0 || img.height == 0) fail(ErrorKind::EmptyInput, "empty glyph image");
  Rng rng(config.rng_seed);
  BinaryImage out = img;
  if (config.p_distort > 0.0) out = distort_contour(out, config.p_distort, config.distort_mode, rng);
  out = median_filter(out, config.median_passes);
  if (config.noise_density > 0.0) out = add_salt_pepper(out, config.noise_density, rng);
  if (std::max(out.width, out.height) > config.target_size) out = downsample(out, config.target_size);
  return out;
}

/// Boundary length (foreground/background 4-edges, image border included)
/// squared over foreground area. Infinity for an empty image.
inline double contour_roughness(const BinaryImage& img) {
  std::size_t perimeter = 0, area = 0;
  for (std::size_t r = 0; r < img.height; ++r) {
    for (std::size_t c = 0; c < img.width; ++c) {
      if (!img.at(r, c)) continue;
      ++area;
      perimeter += (r == 0 || !img.at(r - 1, c)) + (r + 1 == img.height || !img.at(r + 1, c)) +
                   (c == 0 || !img.at(r, c - 1)) + (c + 1 == img.width || !img.at(r, c + 1));
    }
  }
  if (area == 0) return std::numeric_limits<double>::infinity();
  return static_cast<double>(perimeter) * static_cast<double>(perimeter) / static_cast<double>(area);
}

inline BinaryImage from_image8(const Image8& img) {
  BinaryImage out(img.width, img.height);
  for (std::size_t k = 0; k < img.pixels.size(); ++k) out.bits[k] = img.pixels[k] > 127 ? 1 : 0;
  return out;
}

inline Image8 to_image8(const BinaryImage& img) {
  Image8 out;
  out.width = img.width;
  out.height = img.height;
  out.pixels.resize(img.bits.size());
  for (std::size_t k = 0; k < img.bits.size(); ++k) out.pixels[k] = img.bits[k] ? 255 : 0;
  return out;
}

}  // namespace roadforge
