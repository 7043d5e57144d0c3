#pragma once

// Command-line front end. `run` is the whole program minus `main`, so tests
// drive it directly with argument vectors and capture its streams.

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "roadforge/cloud.hpp"
#include "roadforge/dem.hpp"
#include "roadforge/error.hpp"
#include "roadforge/glyph.hpp"
#include "roadforge/groundfilter.hpp"
#include "roadforge/labels.hpp"
#include "roadforge/pgm.hpp"
#include "roadforge/pose_json.hpp"
#include "roadforge/raster.hpp"
#include "roadforge/refine.hpp"
#include "roadforge/spatial_index.hpp"
#include "roadforge/tin.hpp"

namespace roadforge::cli {

using nlohmann::json;

inline constexpr int kSchemaVersion = 1;

enum ExitCode : int { kOk = 0, kUsage = 1, kIo = 2, kNumerical = 3 };

struct CommandResult {
  int exit_code = kOk;
  std::string report_path;
};

// ---------------------------------------------------------------------------
// Configuration

struct OutlierConfig {
  bool enabled = true;
  double radius = 1.0;
  std::size_t min_neighbors = 3;
};

struct DemConfig {
  double cell = 0.5;
};

struct RasterConfig {
  RasterParams params;
  PgmFormat format = PgmFormat::Binary;
};

struct GlyphConfig {
  GlyphPreset preset = GlyphPreset::Standard;
  DegradeConfig degrade;  // distort_mode and median_passes come from the preset
};

struct PoseConfig {
  SceneConfig scene;
  RefineParams refine;
  double initial_rotation_deg = 10.0;
  double initial_offset_m = 5.0;
};

struct Config {
  std::uint64_t seed = 0;
  OutlierConfig outlier;
  FilterParams ground;
  DemConfig dem;
  RasterConfig raster;
  GlyphConfig glyph;
  PoseConfig pose;

  void validate() const {
    require_param(outlier.radius > 0.0, "outlier.radius must be positive");
    require_param(outlier.min_neighbors >= 1, "outlier.min_neighbors must be >= 1");
    require_param(dem.cell > 0.0, "dem.cell must be positive");
    ground.validate();
    raster.params.validate();
    glyph.degrade.validate();
    pose.scene.validate();
    pose.refine.validate();
    require_param(pose.initial_rotation_deg >= 0.0, "pose.initial_rotation_deg must be non-negative");
    require_param(pose.initial_offset_m >= 0.0, "pose.initial_offset_m must be non-negative");
  }
};

namespace detail {

/// Strict reader over one JSON object: unknown keys and wrong types are
/// configuration errors that name the full key path.
class Section {
 public:
  Section(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) fail(ErrorKind::Config, where() + " must be an object");
  }

  template <class T>
  void get(const char* key, T& field) {
    seen_.insert(key);
    const auto it = obj_.find(key);
    if (it == obj_.end()) return;
    try {
      if constexpr (std::is_same_v<T, bool>) {
        if (!it->is_boolean()) throw std::invalid_argument("boolean");
      } else if constexpr (std::is_integral_v<T>) {
        if (!it->is_number_integer()) throw std::invalid_argument("integer");
        if constexpr (std::is_unsigned_v<T>) {
          if (it->is_number_unsigned() == false && it->template get<long long>() < 0)
            throw std::invalid_argument("non-negative integer");
        }
      } else if constexpr (std::is_floating_point_v<T>) {
        if (!it->is_number()) throw std::invalid_argument("number");
      } else {
        if (!it->is_string()) throw std::invalid_argument("string");
      }
      field = it->template get<T>();
    } catch (const std::exception& e) {
      fail(ErrorKind::Config, key_path(key) + " must be a " + e.what());
    }
  }

  std::string string_choice(const char* key, std::string current, std::initializer_list<const char*> choices) {
    get(key, current);
    for (const char* c : choices)
      if (current == c) return current;
    std::string allowed;
    for (const char* c : choices) allowed += std::string(allowed.empty() ? "" : ", ") + c;
    fail(ErrorKind::Config, key_path(key) + " must be one of: " + allowed);
  }

  std::optional<Section> child(const char* key) {
    seen_.insert(key);
    const auto it = obj_.find(key);
    if (it == obj_.end()) return std::nullopt;
    return Section(*it, key_path(key));
  }

  void finish() const {
    for (auto it = obj_.begin(); it != obj_.end(); ++it)
      if (!seen_.count(it.key())) fail(ErrorKind::Config, "unknown config key '" + key_path(it.key()) + "'");
  }

 private:
  std::string where() const { return path_.empty() ? "config" : "'" + path_ + "'"; }
  std::string key_path(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  const json& obj_;
  std::string path_;
  std::set<std::string> seen_;
};

inline const char* format_name(PgmFormat f) { return f == PgmFormat::Binary ? "p5" : "p2"; }

}  // namespace detail

inline json to_json(const Config& c) {
  const auto& g = c.ground;
  const auto& r = c.raster.params;
  const auto& d = c.glyph.degrade;
  const auto& s = c.pose.scene;
  const auto& p = c.pose.refine;
  return {
      {"seed", c.seed},
      {"outlier", {{"enabled", c.outlier.enabled}, {"radius", c.outlier.radius}, {"min_neighbors", c.outlier.min_neighbors}}},
      {"ground",
       {{"initial_cell", g.initial_cell},
        {"min_cell", g.min_cell},
        {"dist_thresh", g.dist_thresh},
        {"angle_thresh", g.angle_thresh},
        {"normal_limit", g.normal_limit},
        {"enable_nonobtuse", g.enable_nonobtuse},
        {"enable_normal", g.enable_normal},
        {"corner_seed_mode", to_string(g.corner_seed_mode)}}},
      {"dem", {{"cell", c.dem.cell}}},
      {"raster",
       {{"resolution", r.resolution},
        {"aggregator", r.aggregator == Aggregator::Max ? "max" : "mean"},
        {"threshold_method", r.threshold_method == ThresholdMethod::Otsu ? "otsu" : "percentile"},
        {"percentile", r.percentile},
        {"sigma", r.sigma},
        {"window", r.window},
        {"stride", r.stride},
        {"edge_mag_thresh", r.edge_mag_thresh},
        {"min_edge_density", r.min_edge_density},
        {"format", detail::format_name(c.raster.format)}}},
      {"glyph",
       {{"preset", to_string(c.glyph.preset)},
        {"p_distort", d.p_distort},
        {"noise_density", d.noise_density},
        {"target_size", d.target_size}}},
      {"pose",
       {{"initial_rotation_deg", c.pose.initial_rotation_deg},
        {"initial_offset_m", c.pose.initial_offset_m},
        {"scene",
         {{"plane_points", s.plane_points},
          {"clutter_points", s.clutter_points},
          {"camera_height", s.camera_height},
          {"pitch_deg", s.pitch_deg},
          {"fx", s.K.fx},
          {"fy", s.K.fy},
          {"cx", s.K.cx},
          {"cy", s.K.cy},
          {"image_width", s.image_width},
          {"image_height", s.image_height},
          {"noise_sigma", s.noise_sigma},
          {"outlier_fraction", s.outlier_fraction}}},
        {"refine",
         {{"max_iters", p.max_iters},
          {"stop_rel_change", p.stop_rel_change},
          {"polish", p.polish},
          {"gn_max_iters", p.gn_max_iters},
          {"gn_step_tol", p.gn_step_tol},
          {"ransac_threshold", p.ransac.threshold},
          {"ransac_confidence", p.ransac.confidence},
          {"ransac_max_trials", p.ransac.max_trials}}}}},
  };
}

/// Overlays `j` onto the defaults in `c`, rejecting unknown keys.
inline void apply_json(Config& c, const json& j) {
  detail::Section root(j, "");
  root.get("seed", c.seed);
  if (auto s = root.child("outlier")) {
    s->get("enabled", c.outlier.enabled);
    s->get("radius", c.outlier.radius);
    s->get("min_neighbors", c.outlier.min_neighbors);
    s->finish();
  }
  if (auto s = root.child("ground")) {
    auto& g = c.ground;
    s->get("initial_cell", g.initial_cell);
    s->get("min_cell", g.min_cell);
    s->get("dist_thresh", g.dist_thresh);
    s->get("angle_thresh", g.angle_thresh);
    s->get("normal_limit", g.normal_limit);
    s->get("enable_nonobtuse", g.enable_nonobtuse);
    s->get("enable_normal", g.enable_normal);
    const std::string mode = s->string_choice("corner_seed_mode", to_string(g.corner_seed_mode),
                                              {to_string(CornerSeedMode::NearestSeedZ), to_string(CornerSeedMode::IdwK3)});
    g.corner_seed_mode = mode == to_string(CornerSeedMode::IdwK3) ? CornerSeedMode::IdwK3 : CornerSeedMode::NearestSeedZ;
    s->finish();
  }
  if (auto s = root.child("dem")) {
    s->get("cell", c.dem.cell);
    s->finish();
  }
  if (auto s = root.child("raster")) {
    auto& r = c.raster.params;
    s->get("resolution", r.resolution);
    r.aggregator = s->string_choice("aggregator", r.aggregator == Aggregator::Max ? "max" : "mean", {"max", "mean"}) == "max"
                       ? Aggregator::Max
                       : Aggregator::Mean;
    r.threshold_method =
        s->string_choice("threshold_method", r.threshold_method == ThresholdMethod::Otsu ? "otsu" : "percentile",
                         {"otsu", "percentile"}) == "otsu"
            ? ThresholdMethod::Otsu
            : ThresholdMethod::Percentile;
    s->get("percentile", r.percentile);
    s->get("sigma", r.sigma);
    s->get("window", r.window);
    s->get("stride", r.stride);
    s->get("edge_mag_thresh", r.edge_mag_thresh);
    s->get("min_edge_density", r.min_edge_density);
    c.raster.format = s->string_choice("format", detail::format_name(c.raster.format), {"p5", "p2"}) == "p5"
                          ? PgmFormat::Binary
                          : PgmFormat::Ascii;
    s->finish();
  }
  if (auto s = root.child("glyph")) {
    c.glyph.preset = parse_preset(s->string_choice("preset", to_string(c.glyph.preset),
                                                   {"plain", "distort", "standard", "optimized1", "optimized2"}));
    s->get("p_distort", c.glyph.degrade.p_distort);
    s->get("noise_density", c.glyph.degrade.noise_density);
    s->get("target_size", c.glyph.degrade.target_size);
    s->finish();
  }
  if (auto s = root.child("pose")) {
    s->get("initial_rotation_deg", c.pose.initial_rotation_deg);
    s->get("initial_offset_m", c.pose.initial_offset_m);
    if (auto sc = s->child("scene")) {
      auto& v = c.pose.scene;
      sc->get("plane_points", v.plane_points);
      sc->get("clutter_points", v.clutter_points);
      sc->get("camera_height", v.camera_height);
      sc->get("pitch_deg", v.pitch_deg);
      sc->get("fx", v.K.fx);
      sc->get("fy", v.K.fy);
      sc->get("cx", v.K.cx);
      sc->get("cy", v.K.cy);
      sc->get("image_width", v.image_width);
      sc->get("image_height", v.image_height);
      sc->get("noise_sigma", v.noise_sigma);
      sc->get("outlier_fraction", v.outlier_fraction);
      sc->finish();
    }
    if (auto rf = s->child("refine")) {
      auto& v = c.pose.refine;
      rf->get("max_iters", v.max_iters);
      rf->get("stop_rel_change", v.stop_rel_change);
      rf->get("polish", v.polish);
      rf->get("gn_max_iters", v.gn_max_iters);
      rf->get("gn_step_tol", v.gn_step_tol);
      rf->get("ransac_threshold", v.ransac.threshold);
      rf->get("ransac_confidence", v.ransac.confidence);
      rf->get("ransac_max_trials", v.ransac.max_trials);
      rf->finish();
    }
    s->finish();
  }
  root.finish();
}

inline Config load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot open config '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    fail(ErrorKind::Config, path + ": invalid JSON: " + e.what());
  }
  Config c;
  apply_json(c, j);
  return c;
}

// ---------------------------------------------------------------------------
// Logging

enum class LogLevel { Error, Info, Debug };

class Logger {
 public:
  Logger(std::ostream& err, LogLevel level) : err_(err), level_(level) {}
  void error(const std::string& m) const { err_ << "error: " << m << '\n'; }
  void info(const std::string& m) const {
    if (level_ >= LogLevel::Info) err_ << "info: " << m << '\n';
  }
  void debug(const std::string& m) const {
    if (level_ >= LogLevel::Debug) err_ << "debug: " << m << '\n';
  }
  LogLevel level() const { return level_; }

 private:
  std::ostream& err_;
  LogLevel level_;
};

inline LogLevel log_level_from_env() {
  const char* v = std::getenv("ROADFORGE_LOG");
  if (!v || !*v) return LogLevel::Info;
  const std::string s(v);
  if (s == "error") return LogLevel::Error;
  if (s == "info") return LogLevel::Info;
  if (s == "debug") return LogLevel::Debug;
  fail(ErrorKind::Config, "ROADFORGE_LOG must be one of: error, info, debug");
}

// ---------------------------------------------------------------------------
// Helpers

namespace detail {

inline void write_json(const json& j, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::Io, "cannot write '" + path + "'");
  out << j.dump(2) << '\n';
  if (!out) fail(ErrorKind::Io, "write failed for '" + path + "'");
}

inline std::string shortest(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

inline std::vector<Point> ground_points(const PointCloud& cloud, const std::vector<Label>& labels) {
  if (labels.size() != cloud.size())
    fail(ErrorKind::Parse, "label count " + std::to_string(labels.size()) + " does not match point count " +
                               std::to_string(cloud.size()));
  std::vector<Point> out;
  for (std::size_t i = 0; i < cloud.size(); ++i)
    if (labels[i] == Label::Ground) out.push_back(cloud[i]);
  if (out.empty()) fail(ErrorKind::EmptyInput, "no ground points in the label file");
  return out;
}

/// Origin and resolution stored as "key=value" header comments.
inline std::vector<std::string> georef_comments(const IntensityImage& img) {
  return {"roadforge intensity image, row 0 = minimum y (south-up)",
          "x0=" + shortest(img.x0) + " y0=" + shortest(img.y0) + " resolution=" + shortest(img.resolution)};
}

inline void parse_georef(const std::vector<std::string>& comments, IntensityImage& img) {
  for (const std::string& line : comments) {
    std::istringstream ss(line);
    std::string tok;
    while (ss >> tok) {
      const auto eq = tok.find('=');
      if (eq == std::string::npos) continue;
      const std::string key = tok.substr(0, eq), val = tok.substr(eq + 1);
      double v = 0.0;
      const auto r = std::from_chars(val.data(), val.data() + val.size(), v);
      if (r.ec != std::errc() || r.ptr != val.data() + val.size()) continue;
      if (key == "x0") img.x0 = v;
      if (key == "y0") img.y0 = v;
      if (key == "resolution" && v > 0.0) img.resolution = v;
    }
  }
}

inline int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Parameter:
    case ErrorKind::Config:
      return kUsage;
    case ErrorKind::Io:
    case ErrorKind::Parse:
      return kIo;
    default:
      return kNumerical;
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Subcommands

struct Options {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string in, out, labels, report;
  std::optional<double> cell;
  std::optional<std::string> format, preset;
  std::optional<double> noise, outliers, rot, offset;
};

inline std::string report_path_for(const Options& o) { return o.report.empty() ? o.out + ".report.json" : o.report; }

inline json report_header(const char* command, const Config& c) {
  return {{"schema_version", kSchemaVersion}, {"command", command}, {"config", to_json(c)}};
}

inline CommandResult cmd_clean(const Options& o, const Config& c, const Logger& log) {
  const PointCloud cloud = load_cloud(o.in);
  const OutlierSplit split = remove_outliers(cloud, c.outlier.radius, c.outlier.min_neighbors);
  log.info("clean: " + std::to_string(split.outliers.size()) + " of " + std::to_string(cloud.size()) +
           " points are outliers");
  save_cloud(split.inliers, o.out);
  json rep = report_header("clean", c);
  rep["input"] = o.in;
  rep["points"] = cloud.size();
  rep["inliers"] = split.inliers.size();
  rep["outliers"] = split.outliers.size();
  const std::string rp = report_path_for(o);
  detail::write_json(rep, rp);
  return {kOk, rp};
}

inline CommandResult cmd_ground(const Options& o, const Config& c, const Logger& log) {
  const PointCloud cloud = load_cloud(o.in);
  std::vector<Label> labels(cloud.size(), Label::Nonground);
  std::vector<std::size_t> kept(cloud.size());
  for (std::size_t i = 0; i < kept.size(); ++i) kept[i] = i;
  std::size_t n_outliers = 0;
  if (c.outlier.enabled) {
    OutlierSplit split = remove_outliers(cloud, c.outlier.radius, c.outlier.min_neighbors);
    for (std::size_t i : split.outlier_indices) labels[i] = Label::Outlier;
    n_outliers = split.outlier_indices.size();
    kept = std::move(split.inlier_indices);
  }
  log.info("ground: " + std::to_string(n_outliers) + " outliers removed");
  if (kept.empty()) fail(ErrorKind::EmptyInput, "every point was classified as an outlier");
  const PointCloud cleaned = subset(cloud, kept);
  const GroundResult res = filter_ground(cleaned, c.ground);
  for (std::size_t i : res.ground) labels[kept[i]] = Label::Ground;
  for (const LevelRecord& l : res.levels)
    log.debug("level cell " + detail::shortest(l.cell) + ": " + std::to_string(l.seeds_added) + " candidates, " +
              std::to_string(l.accepted) + " accepted");
  log.info("ground: " + std::to_string(res.ground.size()) + " ground, " + std::to_string(res.nonground.size()) +
           " nonground");
  save_labels(labels, o.out);

  json rep = report_header("ground", c);
  rep["input"] = o.in;
  rep["points"] = cloud.size();
  rep["outliers"] = n_outliers;
  rep["ground"] = res.ground.size();
  rep["nonground"] = res.nonground.size();
  rep["virtual_seeds"] = res.virtual_seeds;
  rep["final_pass_accepted"] = res.final_pass_accepted;
  json levels = json::array();
  for (const LevelRecord& l : res.levels)
    levels.push_back({{"cell", l.cell}, {"candidates", l.seeds_added}, {"accepted", l.accepted}});
  rep["levels"] = levels;
  const std::string rp = report_path_for(o);
  detail::write_json(rep, rp);
  return {kOk, rp};
}

inline CommandResult cmd_dem(const Options& o, Config c, const Logger& log) {
  if (o.cell) c.dem.cell = *o.cell;
  c.validate();
  const PointCloud cloud = load_cloud(o.in);
  const std::vector<Point> ground = detail::ground_points(cloud, load_labels(o.labels));
  // Several returns can share one XY; the first one wins.
  std::vector<Vertex> verts;
  std::set<std::pair<double, double>> seen;
  for (const Point& p : ground)
    if (seen.emplace(p.x, p.y).second) verts.push_back({p.x, p.y, p.z, verts.size()});
  const Tin tin = delaunay_triangulate(std::move(verts));
  const RasterGrid grid = rasterize_dem(tin, c.dem.cell);
  save_ascii_grid(grid, o.out);
  std::size_t valid = 0;
  for (double v : grid.cells) valid += v != kNoData;
  log.info("dem: " + std::to_string(grid.n_cols) + " x " + std::to_string(grid.n_rows) + " cells, " +
           std::to_string(valid) + " valid");

  json rep = report_header("dem", c);
  rep["input"] = o.in;
  rep["labels"] = o.labels;
  rep["ground_points"] = ground.size();
  rep["tin_vertices"] = tin.num_vertices();
  rep["tin_triangles"] = tin.num_triangles();
  rep["ncols"] = grid.n_cols;
  rep["nrows"] = grid.n_rows;
  rep["valid_cells"] = valid;
  const std::string rp = report_path_for(o);
  detail::write_json(rep, rp);
  return {kOk, rp};
}

inline CommandResult cmd_intensity(const Options& o, Config c, const Logger& log) {
  if (o.format) c.raster.format = *o.format == "p2" ? PgmFormat::Ascii : PgmFormat::Binary;
  const RasterParams& params = c.raster.params;
  const PointCloud cloud = load_cloud(o.in);
  const std::vector<Point> ground = detail::ground_points(cloud, load_labels(o.labels));
  ThresholdResult th;
  bool fallback = false;
  try {
    th = threshold_points(ground, params.threshold_method, params.percentile);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::Degenerate) throw;
    log.info("intensity: Otsu histogram degenerate, using the percentile rule");
    th = threshold_points(ground, ThresholdMethod::Percentile, params.percentile);
    fallback = true;
  }
  const IntensityImage smooth = gaussian_smooth(rasterize_intensity(th.retained, params.resolution, params.aggregator), params.sigma);
  save_pgm(to_image8(smooth), o.out, c.raster.format, detail::georef_comments(smooth));
  log.info("intensity: " + std::to_string(th.retained.size()) + " of " + std::to_string(ground.size()) +
           " ground points kept, image " + std::to_string(smooth.width) + " x " + std::to_string(smooth.height));

  json rep = report_header("intensity", c);
  rep["input"] = o.in;
  rep["labels"] = o.labels;
  rep["ground_points"] = ground.size();
  rep["retained_points"] = th.retained.size();
  rep["threshold"] = th.threshold;
  rep["threshold_fallback"] = fallback;
  rep["width"] = smooth.width;
  rep["height"] = smooth.height;
  rep["x0"] = smooth.x0;
  rep["y0"] = smooth.y0;
  rep["resolution"] = smooth.resolution;
  const std::string rp = report_path_for(o);
  detail::write_json(rep, rp);
  return {kOk, rp};
}

inline CommandResult cmd_tiles(const Options& o, const Config& c, const Logger& log) {
  std::vector<std::string> comments;
  const Image8 src = load_pgm(o.in, &comments);
  IntensityImage img(src.width, src.height);
  for (std::size_t k = 0; k < src.pixels.size(); ++k) img.pixels[k] = src.pixels[k];
  detail::parse_georef(comments, img);
  const TileSet set = split_tiles(img, c.raster.params);

  std::filesystem::create_directories(o.out);
  json kept = json::array(), dropped = json::array();
  for (const Tile& t : set.kept) {
    const std::string name = tile_name(t.row, t.col);
    save_pgm(quantize_image8(t.image), (std::filesystem::path(o.out) / name).string(), PgmFormat::Binary,
             detail::georef_comments(t.image));
    kept.push_back({{"row", t.row}, {"col", t.col}, {"file", name}, {"x0", t.image.x0}, {"y0", t.image.y0},
                    {"edge_density", t.edge_density}});
  }
  for (const Tile& t : set.dropped)
    dropped.push_back({{"row", t.row}, {"col", t.col}, {"x0", t.image.x0}, {"y0", t.image.y0},
                       {"edge_density", t.edge_density}});
  log.info("tiles: " + std::to_string(set.kept.size()) + " kept, " + std::to_string(set.dropped.size()) + " dropped");

  json rep = report_header("tiles", c);
  rep["input"] = o.in;
  rep["tile_rows"] = set.tile_rows;
  rep["tile_cols"] = set.tile_cols;
  rep["resolution"] = img.resolution;
  rep["kept"] = kept;
  rep["dropped"] = dropped;
  const std::string rp = o.report.empty() ? (std::filesystem::path(o.out) / "manifest.json").string() : o.report;
  detail::write_json(rep, rp);
  return {kOk, rp};
}

inline CommandResult cmd_glyph(const Options& o, Config c, const Logger& log) {
  if (o.preset) c.glyph.preset = parse_preset(*o.preset);
  c.validate();
  namespace fs = std::filesystem;
  std::vector<fs::path> inputs;
  if (fs::is_directory(o.in)) {
    for (const auto& e : fs::directory_iterator(o.in))
      if (e.is_regular_file() && e.path().extension() == ".pgm") inputs.push_back(e.path());
    std::sort(inputs.begin(), inputs.end());
  } else if (fs::exists(o.in)) {
    inputs.push_back(o.in);
  } else {
    fail(ErrorKind::Io, "cannot open '" + o.in + "'");
  }
  if (inputs.empty()) fail(ErrorKind::EmptyInput, "no .pgm glyphs in '" + o.in + "'");
  fs::create_directories(o.out);

  json entries = json::array();
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    DegradeConfig dc = preset_config(c.glyph.preset, c.glyph.degrade);
    dc.rng_seed = c.seed ^ static_cast<std::uint64_t>(i);
    const BinaryImage out = degrade(from_image8(load_pgm(inputs[i].string())), dc);
    const fs::path dst = fs::path(o.out) / inputs[i].filename();
    save_pgm(to_image8(out), dst.string(), PgmFormat::Binary);
    entries.push_back({{"input", inputs[i].string()}, {"preset", to_string(c.glyph.preset)}, {"seed", dc.rng_seed},
                       {"output", dst.string()}});
  }
  log.info("glyph: " + std::to_string(inputs.size()) + " glyphs degraded with preset " + to_string(c.glyph.preset));

  json rep = report_header("glyph", c);
  rep["glyphs"] = entries;
  const std::string rp = o.report.empty() ? (fs::path(o.out) / "manifest.json").string() : o.report;
  detail::write_json(rep, rp);
  return {kOk, rp};
}

inline void print_trace(std::ostream& out, const std::vector<IterationRecord>& trace) {
  char line[160];
  std::snprintf(line, sizeof line, "%4s %12s %12s %8s %12s %10s\n", "iter", "rot_err_deg", "pos_err_m", "inliers",
                "rmse_px", "change");
  out << line;
  for (const IterationRecord& r : trace) {
    std::snprintf(line, sizeof line, "%4d %12.6g %12.6g %4zu/%-3zu %12.6g %10.4g\n", r.iteration,
                  r.rotation_error * 180.0 / M_PI, r.translation_error, r.inliers, r.matches, r.rmse, r.rel_change);
    out << line;
  }
}

inline CommandResult cmd_pose_sim(const Options& o, Config c, const Logger& log, std::ostream& out) {
  if (o.noise) c.pose.scene.noise_sigma = *o.noise;
  if (o.outliers) c.pose.scene.outlier_fraction = *o.outliers;
  if (o.rot) c.pose.initial_rotation_deg = *o.rot;
  if (o.offset) c.pose.initial_offset_m = *o.offset;
  c.validate();
  c.pose.scene.seed = derive_seed(c.seed, 2);
  c.pose.refine.ransac.seed = derive_seed(c.seed, 1);
  const SyntheticScene scene = make_scene(c.pose.scene);
  Rng rng(derive_seed(c.seed, 3));
  const Pose initial = perturb_pose(scene.true_pose, c.pose.initial_rotation_deg, c.pose.initial_offset_m, rng);

  json rep = report_header("pose-sim", c);
  rep["scene"] = scene_json(scene);
  rep["initial_pose"] = pose_json(initial);
  const std::string rp = o.out;
  try {
    const RefineResult res = refine_pose(scene, initial, c.pose.refine);
    print_trace(out, res.trace);
    rep["converged"] = res.converged;
    rep["final_pose"] = pose_json(res.pose);
    rep["trace"] = trace_json(res.trace);
    detail::write_json(rep, rp);
    log.info(std::string("pose-sim: ") + (res.converged ? "converged" : "stopped at max_iters") + " after " +
             std::to_string(res.trace.size()) + " iterations");
  } catch (const DivergenceError& e) {
    print_trace(out, e.trace());
    rep["converged"] = false;
    rep["trace"] = trace_json(e.trace());
    rep["error"] = e.what();
    detail::write_json(rep, rp);
    throw;
  }
  return {kOk, rp};
}

// ---------------------------------------------------------------------------
// Entry point

/// Runs one subcommand. `args` excludes the program name.
inline CommandResult run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Road point-cloud toolkit: ground filtering, DEM, intensity tiles, glyph degradation, pose refinement"};
  app.name("roadforge");
  app.require_subcommand(1, 1);
  // Global options may also follow the subcommand.
  app.fallthrough();
  Options o;
  app.add_option("--config", o.config_path, "JSON config file (unknown keys are rejected)");
  app.add_option("--seed", o.seed, "root seed for every random stream");

  auto* clean = app.add_subcommand("clean", "radius outlier removal");
  clean->add_option("--in", o.in, "input XYZI cloud")->required();
  clean->add_option("--out", o.out, "cleaned XYZI cloud")->required();
  clean->add_option("--report", o.report, "report path (default <out>.report.json)");

  auto* ground = app.add_subcommand("ground", "outlier removal and ground filtering");
  ground->add_option("--in", o.in, "input XYZI cloud")->required();
  ground->add_option("--out", o.out, "label file")->required();
  ground->add_option("--report", o.report, "report path (default <out>.report.json)");

  auto* dem = app.add_subcommand("dem", "rasterize the ground TIN to an ASCII grid");
  dem->add_option("--in", o.in, "input XYZI cloud")->required();
  dem->add_option("--labels", o.labels, "label file from 'ground'")->required();
  dem->add_option("--out", o.out, "Esri ASCII grid")->required();
  dem->add_option("--cell", o.cell, "cell size in metres");
  dem->add_option("--report", o.report, "report path (default <out>.report.json)");

  auto* intensity = app.add_subcommand("intensity", "ground intensity image");
  intensity->add_option("--in", o.in, "input XYZI cloud")->required();
  intensity->add_option("--labels", o.labels, "label file from 'ground'")->required();
  intensity->add_option("--out", o.out, "PGM image")->required();
  intensity->add_option("--format", o.format, "p5 or p2")->check(CLI::IsMember({"p5", "p2"}));
  intensity->add_option("--report", o.report, "report path (default <out>.report.json)");

  auto* tiles = app.add_subcommand("tiles", "split an intensity image into edge-bearing tiles");
  tiles->add_option("--in", o.in, "PGM image")->required();
  tiles->add_option("--out", o.out, "output directory")->required();
  tiles->add_option("--report", o.report, "manifest path (default <out>/manifest.json)");

  auto* glyph = app.add_subcommand("glyph", "degrade binary glyph bitmaps");
  glyph->add_option("--in", o.in, "glyph PGM or directory of PGMs")->required();
  glyph->add_option("--out", o.out, "output directory")->required();
  glyph->add_option("--preset", o.preset, "plain, distort, standard, optimized1 or optimized2")
      ->check(CLI::IsMember({"plain", "distort", "standard", "optimized1", "optimized2"}));
  glyph->add_option("--report", o.report, "manifest path (default <out>/manifest.json)");

  auto* pose = app.add_subcommand("pose-sim", "synthetic camera pose refinement");
  pose->add_option("--out", o.out, "trace JSON")->required();
  pose->add_option("--noise", o.noise, "pixel noise sigma");
  pose->add_option("--outliers", o.outliers, "mismatch fraction");
  pose->add_option("--rot", o.rot, "initial rotation offset in degrees");
  pose->add_option("--offset", o.offset, "initial camera-centre offset in metres");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return {kOk, ""};
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n' << "run 'roadforge --help' for usage\n";
    return {kUsage, ""};
  }

  LogLevel level = LogLevel::Info;
  try {
    level = log_level_from_env();
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return {kUsage, ""};
  }
  const Logger log(err, level);

  try {
    Config c = o.config_path.empty() ? Config{} : load_config(o.config_path);
    if (o.seed) c.seed = *o.seed;
    c.validate();
    log.info("effective config: " + to_json(c).dump());
    if (*clean) return cmd_clean(o, c, log);
    if (*ground) return cmd_ground(o, c, log);
    if (*dem) return cmd_dem(o, c, log);
    if (*intensity) return cmd_intensity(o, c, log);
    if (*tiles) return cmd_tiles(o, c, log);
    if (*glyph) return cmd_glyph(o, c, log);
    return cmd_pose_sim(o, c, log, out);
  } catch (const Error& e) {
    log.error(std::string(to_string(e.kind())) + ": " + e.what());
    return {detail::exit_code_for(e.kind()), ""};
  } catch (const std::filesystem::filesystem_error& e) {
    log.error(std::string("io: ") + e.what());
    return {kIo, ""};
  }
}

}  // namespace roadforge::cli
