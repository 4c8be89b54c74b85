#pragma once

#include <Eigen/Core>

namespace emreg {

// A planar position in meters. Construction rejects non-finite coordinates.
class Point {
 public:
  constexpr Point() = default;
  Point(double x, double y);
  explicit Point(const Eigen::Vector2d& v) : Point(v.x(), v.y()) {}

  double x() const noexcept { return x_; }
  double y() const noexcept { return y_; }
  Eigen::Vector2d vec() const noexcept { return {x_, y_}; }

  friend bool operator==(const Point&, const Point&) = default;

 private:
  double x_ = 0.0;
  double y_ = 0.0;
};

// Rigid planar transformation y = (tx, ty, theta). Applying it to a model
// point m yields Rot(theta) * m + (tx, ty), i.e. model frame -> scan frame.
// theta is kept in (-pi, pi].
class Pose {
 public:
  constexpr Pose() = default;
  Pose(double tx, double ty, double theta);

  static Pose identity() { return {}; }

  double tx() const noexcept { return tx_; }
  double ty() const noexcept { return ty_; }
  double theta() const noexcept { return theta_; }
  Eigen::Vector2d translation() const noexcept { return {tx_, ty_}; }
  Eigen::Matrix2d rotation() const noexcept;

  friend bool operator==(const Pose&, const Pose&) = default;

 private:
  double tx_ = 0.0;
  double ty_ = 0.0;
  double theta_ = 0.0;
};

/// Wraps an angle into (-pi, pi].
double normalize_angle(double theta) noexcept;

// Symmetric positive-definite 2x2 precision matrix of the Gaussian noise
// model, stored as its three distinct entries.
class PrecisionMatrix {
 public:
  PrecisionMatrix(double g00, double g01, double g11);

  static PrecisionMatrix identity() { return {1.0, 0.0, 1.0}; }
  /// Gamma = I / sigma^2.
  static PrecisionMatrix isotropic(double sigma);
  static PrecisionMatrix from_matrix(const Eigen::Matrix2d& m);

  double g00() const noexcept { return g00_; }
  double g01() const noexcept { return g01_; }
  double g11() const noexcept { return g11_; }

  bool is_isotropic() const noexcept { return g01_ == 0.0 && g00_ == g11_; }
  double determinant() const noexcept { return g00_ * g11_ - g01_ * g01_; }
  Eigen::Matrix2d matrix() const noexcept;

 private:
  double g00_;
  double g01_;
  double g11_;
};

Point apply_pose(const Pose& pose, const Point& p);
Eigen::Vector2d apply_pose(const Pose& pose, const Eigen::Vector2d& p) noexcept;

/// compose(a, b) applies b first, then a.
Pose compose(const Pose& a, const Pose& b);
Pose invert_pose(const Pose& pose);

/// v^T * Gamma * v.
double mahalanobis_sq(const Eigen::Vector2d& v, const PrecisionMatrix& gamma) noexcept;

// Gaussian density of observing s given model point m under pose, without
// the normalizing constant c = sqrt(det Gamma) / (2 pi). The constant cancels
// in posterior ratios and only shifts log-likelihoods by a pose-independent
// amount, so likelihood values are comparable only for a fixed Gamma.
double edge_density(const Point& s, const Point& m, const Pose& pose,
                    const PrecisionMatrix& gamma) noexcept;

/// Strict gate |a - b| < radius, evaluated on squared distances. Every
/// neighbor search in the library uses this exact predicate.
inline bool within_radius(const Point& a, const Point& b, double radius) noexcept {
  const double dx = a.x() - b.x();
  const double dy = a.y() - b.y();
  return dx * dx + dy * dy < radius * radius;
}

}  // namespace emreg
