#include "emreg/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

#include "emreg/errors.hpp"
#include "emreg/spatial_index.hpp"

namespace emreg {
namespace {

constexpr double kRectLength = 4.0;
constexpr double kRectWidth = 1.8;
constexpr double kCircleRadius = 1.5;
constexpr std::size_t kPointsPerTile = 200;
constexpr double kTileSpacing = 6.0;
constexpr double kTileRowSpacing = 4.0;

// Point at arc length u along the polyline through corners.
Point along_polyline(std::span<const Eigen::Vector2d> corners, double u) {
  for (std::size_t i = 0; i + 1 < corners.size(); ++i) {
    const double len = (corners[i + 1] - corners[i]).norm();
    if (u <= len || i + 2 == corners.size()) {
      const double f = std::clamp(u / len, 0.0, 1.0);
      return Point(corners[i] + f * (corners[i + 1] - corners[i]));
    }
    u -= len;
  }
  return Point(corners.back());
}

}  // namespace

std::optional<Shape> parse_shape(std::string_view name) noexcept {
  if (name == "rectangle") return Shape::Rectangle;
  if (name == "circle") return Shape::Circle;
  if (name == "L-shape" || name == "l-shape" || name == "lshape") return Shape::LShape;
  return std::nullopt;
}

std::string_view to_string(Shape shape) noexcept {
  switch (shape) {
    case Shape::Rectangle: return "rectangle";
    case Shape::Circle: return "circle";
    case Shape::LShape: return "L-shape";
  }
  return "unknown";
}

std::vector<Point> make_contour(Shape shape, std::size_t n_points) {
  std::vector<Point> out;
  out.reserve(n_points);
  const double hl = kRectLength / 2.0;
  const double hw = kRectWidth / 2.0;
  switch (shape) {
    case Shape::Rectangle: {
      const Eigen::Vector2d corners[] = {{-hl, -hw}, {hl, -hw}, {hl, hw}, {-hl, hw}, {-hl, -hw}};
      const double perimeter = 2.0 * (kRectLength + kRectWidth);
      for (std::size_t i = 0; i < n_points; ++i) {
        out.push_back(along_polyline(corners, perimeter * static_cast<double>(i) /
                                                  static_cast<double>(n_points)));
      }
      break;
    }
    case Shape::Circle:
      for (std::size_t i = 0; i < n_points; ++i) {
        const double a = 2.0 * std::numbers::pi * static_cast<double>(i) /
                         static_cast<double>(n_points);
        out.emplace_back(kCircleRadius * std::cos(a), kCircleRadius * std::sin(a));
      }
      break;
    case Shape::LShape: {
      const Eigen::Vector2d corners[] = {{hl, -hw}, {-hl, -hw}, {-hl, hw}};
      const double length = kRectLength + kRectWidth;
      const double denom = n_points > 1 ? static_cast<double>(n_points - 1) : 1.0;
      for (std::size_t i = 0; i < n_points; ++i) {
        out.push_back(along_polyline(corners, length * static_cast<double>(i) / denom));
      }
      break;
    }
  }
  return out;
}

Scene make_scene(const SynthConfig& config) {
  if (config.n_points < 3) throw Error(ErrorCode::InvalidArgument, "n_points must be >= 3");
  if (!(config.noise_sigma >= 0.0) || !std::isfinite(config.noise_sigma)) {
    throw Error(ErrorCode::InvalidArgument, "noise sigma must be >= 0");
  }
  if (!(config.outlier_fraction >= 0.0) || !(config.outlier_fraction < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "outlier fraction must be in [0, 1)");
  }
  if (!(config.gate > 0.0) || !std::isfinite(config.gate)) {
    throw Error(ErrorCode::NonPositiveRadius, "gate must be positive");
  }

  std::mt19937_64 rng(config.seed);
  Scene scene;
  scene.truth = config.pose;
  scene.model = make_contour(config.shape, config.n_points);
  scene.n_outliers = static_cast<std::size_t>(
      std::llround(config.outlier_fraction * static_cast<double>(config.n_points)));
  const std::size_t n_inliers = config.n_points - scene.n_outliers;

  std::vector<Point> moved;
  moved.reserve(scene.model.size());
  for (const Point& m : scene.model) moved.push_back(apply_pose(config.pose, m));

  // Observed subset of the contour; all of it when there is no clutter.
  std::vector<std::size_t> visible(moved.size());
  std::iota(visible.begin(), visible.end(), 0);
  if (n_inliers < moved.size()) {
    std::shuffle(visible.begin(), visible.end(), rng);
    visible.resize(n_inliers);
    std::sort(visible.begin(), visible.end());
  }

  std::normal_distribution<double> noise(0.0, 1.0);
  scene.scan.reserve(config.n_points);
  for (const std::size_t i : visible) {
    double nx = 0.0;
    double ny = 0.0;
    if (config.noise_sigma > 0.0) {
      nx = config.noise_sigma * noise(rng);
      ny = config.noise_sigma * noise(rng);
    }
    scene.scan.emplace_back(moved[i].x() + nx, moved[i].y() + ny);
  }

  if (scene.n_outliers > 0) {
    const GridIndex index = build_index(moved, config.gate);
    double x_lo = moved.front().x(), x_hi = x_lo;
    double y_lo = moved.front().y(), y_hi = y_lo;
    for (const Point& p : moved) {
      x_lo = std::min(x_lo, p.x());
      x_hi = std::max(x_hi, p.x());
      y_lo = std::min(y_lo, p.y());
      y_hi = std::max(y_hi, p.y());
    }
    const double margin = 3.0 * config.gate + 1.0;
    std::uniform_real_distribution<double> ux(x_lo - margin, x_hi + margin);
    std::uniform_real_distribution<double> uy(y_lo - margin, y_hi + margin);
    std::size_t attempts = 0;
    while (scene.scan.size() < config.n_points) {
      if (++attempts > 10'000'000) {
        throw Error(ErrorCode::InvalidArgument, "could not place clutter points");
      }
      const Point candidate(ux(rng), uy(rng));
      if (index.query_radius(candidate).empty()) scene.scan.push_back(candidate);
    }
  }
  return scene;
}

Scene make_tiled_scene(std::size_t n_points, const Pose& pose, double noise_sigma,
                       std::uint64_t seed) {
  if (n_points < 3) throw Error(ErrorCode::InvalidArgument, "n_points must be >= 3");
  Scene scene;
  scene.truth = pose;
  const std::size_t tiles = (n_points + kPointsPerTile - 1) / kPointsPerTile;
  const auto columns = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(tiles))));
  const std::size_t rows = (tiles + columns - 1) / columns;
  std::size_t remaining = n_points;
  for (std::size_t tile = 0; tile < tiles; ++tile) {
    // Keep the last tile at >= 3 points by borrowing from its predecessor.
    std::size_t count = std::min(kPointsPerTile, remaining);
    if (remaining > kPointsPerTile && remaining - kPointsPerTile < 3) count = remaining - 3;
    const double ox = kTileSpacing * (static_cast<double>(tile % columns) -
                                      0.5 * static_cast<double>(columns - 1));
    const double oy = kTileRowSpacing * (static_cast<double>(tile / columns) -
                                         0.5 * static_cast<double>(rows - 1));
    for (const Point& p : make_contour(Shape::Rectangle, count)) {
      scene.model.emplace_back(p.x() + ox, p.y() + oy);
    }
    remaining -= count;
  }

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, noise_sigma > 0.0 ? noise_sigma : 1.0);
  scene.scan.reserve(n_points);
  for (const Point& m : scene.model) {
    const Point t = apply_pose(pose, m);
    if (noise_sigma > 0.0) {
      const double nx = noise(rng);
      const double ny = noise(rng);
      scene.scan.emplace_back(t.x() + nx, t.y() + ny);
    } else {
      scene.scan.push_back(t);
    }
  }
  return scene;
}

}  // namespace emreg
