#include "emreg/geometry.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "emreg/errors.hpp"

namespace emreg {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::NonPositiveRadius: return "NonPositiveRadius";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::NoCorrespondences: return "NoCorrespondences";
    case ErrorCode::DegenerateGeometry: return "DegenerateGeometry";
    case ErrorCode::DegenerateRow: return "DegenerateRow";
    case ErrorCode::NoInliers: return "NoInliers";
    case ErrorCode::ParseError: return "ParseError";
  }
  return "Unknown";
}

Point::Point(double x, double y) : x_(x), y_(y) {
  if (!std::isfinite(x) || !std::isfinite(y)) {
    throw Error(ErrorCode::InvalidArgument, "point coordinates must be finite");
  }
}

double normalize_angle(double theta) noexcept {
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  double wrapped = std::remainder(theta, kTwoPi);  // [-pi, pi]
  if (wrapped <= -std::numbers::pi) wrapped += kTwoPi;
  return wrapped;
}

Pose::Pose(double tx, double ty, double theta)
    : tx_(tx), ty_(ty), theta_(normalize_angle(theta)) {
  if (!std::isfinite(tx) || !std::isfinite(ty) || !std::isfinite(theta)) {
    throw Error(ErrorCode::InvalidArgument, "pose components must be finite");
  }
}

Eigen::Matrix2d Pose::rotation() const noexcept {
  const double c = std::cos(theta_);
  const double s = std::sin(theta_);
  Eigen::Matrix2d r;
  r << c, -s, s, c;
  return r;
}

PrecisionMatrix::PrecisionMatrix(double g00, double g01, double g11)
    : g00_(g00), g01_(g01), g11_(g11) {
  if (!std::isfinite(g00) || !std::isfinite(g01) || !std::isfinite(g11)) {
    throw Error(ErrorCode::InvalidArgument, "precision matrix entries must be finite");
  }
  // Sylvester's criterion for a symmetric 2x2 matrix.
  if (!(g00 > 0.0) || !(g00 * g11 - g01 * g01 > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "precision matrix must be positive definite");
  }
}

PrecisionMatrix PrecisionMatrix::isotropic(double sigma) {
  if (!std::isfinite(sigma) || !(sigma > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "sigma must be positive");
  }
  const double g = 1.0 / (sigma * sigma);
  return {g, 0.0, g};
}

PrecisionMatrix PrecisionMatrix::from_matrix(const Eigen::Matrix2d& m) {
  return {m(0, 0), 0.5 * (m(0, 1) + m(1, 0)), m(1, 1)};
}

Eigen::Matrix2d PrecisionMatrix::matrix() const noexcept {
  Eigen::Matrix2d m;
  m << g00_, g01_, g01_, g11_;
  return m;
}

Eigen::Vector2d apply_pose(const Pose& pose, const Eigen::Vector2d& p) noexcept {
  const double c = std::cos(pose.theta());
  const double s = std::sin(pose.theta());
  return {c * p.x() - s * p.y() + pose.tx(), s * p.x() + c * p.y() + pose.ty()};
}

Point apply_pose(const Pose& pose, const Point& p) {
  return Point(apply_pose(pose, p.vec()));
}

Pose compose(const Pose& a, const Pose& b) {
  const Eigen::Vector2d t = apply_pose(a, b.translation());
  return {t.x(), t.y(), a.theta() + b.theta()};
}

Pose invert_pose(const Pose& pose) {
  const Pose unrotate(0.0, 0.0, -pose.theta());
  const Eigen::Vector2d t = -apply_pose(unrotate, pose.translation());
  return {t.x(), t.y(), -pose.theta()};
}

double mahalanobis_sq(const Eigen::Vector2d& v, const PrecisionMatrix& gamma) noexcept {
  return gamma.g00() * v.x() * v.x() + 2.0 * gamma.g01() * v.x() * v.y() +
         gamma.g11() * v.y() * v.y();
}

double edge_density(const Point& s, const Point& m, const Pose& pose,
                    const PrecisionMatrix& gamma) noexcept {
  const Eigen::Vector2d r = s.vec() - apply_pose(pose, m.vec());
  return std::exp(-0.5 * mahalanobis_sq(r, gamma));
}

}  // namespace emreg
