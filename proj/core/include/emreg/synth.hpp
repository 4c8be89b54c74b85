#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "emreg/geometry.hpp"

namespace emreg {

enum class Shape { Rectangle, Circle, LShape };

std::optional<Shape> parse_shape(std::string_view name) noexcept;
std::string_view to_string(Shape shape) noexcept;

// Nominal target outlines: a 4.0 x 1.8 m rectangle, a circle of radius 1.5 m,
// and the two visible sides (4.0 m and 1.8 m) of a rectangle seen from a
// corner. Points are spaced evenly by arc length.
std::vector<Point> make_contour(Shape shape, std::size_t n_points);

struct SynthConfig {
  Shape shape = Shape::Rectangle;
  std::size_t n_points = 200;
  Pose pose;                      // ground truth, model -> scan
  double noise_sigma = 0.02;      // isotropic Gaussian noise, meters
  double outlier_fraction = 0.0;  // share of scan points replaced by clutter
  double gate = 1.0;              // clutter is kept farther than this from the target
  std::uint64_t seed = 1;
};

struct Scene {
  std::vector<Point> model;
  std::vector<Point> scan;
  Pose truth;
  std::size_t n_outliers = 0;
};

// Model is the contour; the scan holds n_points - n_outliers noisy copies of
// the transformed contour followed by n_outliers clutter points, where
// n_outliers = round(outlier_fraction * n_points). Each clutter point lies at
// least `gate` away from every transformed model point. Fully determined
// by the seed. Throws Error{InvalidArgument} for n_points < 3 or
// out-of-range parameters.
Scene make_scene(const SynthConfig& config);

// Fixed-density scene for scaling runs: a near-square grid of rectangles
// centred on the origin, one per 200 points, so the contour length grows
// linearly with n_points while point spacing stays fixed.
Scene make_tiled_scene(std::size_t n_points, const Pose& pose, double noise_sigma,
                       std::uint64_t seed);

}  // namespace emreg
