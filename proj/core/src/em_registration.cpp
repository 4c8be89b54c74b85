#include "emreg/em_registration.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <Eigen/Dense>

#include "emreg/errors.hpp"

namespace emreg {
namespace {

constexpr double kMinTotalWeight = 1e-12;
constexpr double kGradientTolerance = 1e-9;
constexpr int kMaxGaussNewtonSteps = 100;

Eigen::Vector2d residual(const MatchGraph& graph, const Edge& e, const Pose& pose) {
  return graph.scan()[e.scan_index].vec() -
         apply_pose(pose, graph.model()[e.model_index].vec());
}

struct WeightedProcrustes {
  Pose pose;
  double total_weight = 0.0;
};

WeightedProcrustes closed_form_pose(const MatchGraph& graph) {
  if (graph.edge_count() == 0) {
    throw Error(ErrorCode::NoCorrespondences, "match graph has no edges");
  }
  double total = 0.0;
  Eigen::Vector2d model_centroid = Eigen::Vector2d::Zero();
  Eigen::Vector2d scan_centroid = Eigen::Vector2d::Zero();
  for (const Edge& e : graph.edges()) {
    total += e.posterior;
    model_centroid += e.posterior * graph.model()[e.model_index].vec();
    scan_centroid += e.posterior * graph.scan()[e.scan_index].vec();
  }
  if (!(total > kMinTotalWeight)) {
    throw Error(ErrorCode::DegenerateGeometry, "total correspondence weight is zero");
  }
  model_centroid /= total;
  scan_centroid /= total;

  // H = sum w (m - cm)(s - cs)^T
  Eigen::Matrix2d h = Eigen::Matrix2d::Zero();
  for (const Edge& e : graph.edges()) {
    h += e.posterior * (graph.model()[e.model_index].vec() - model_centroid) *
         (graph.scan()[e.scan_index].vec() - scan_centroid).transpose();
  }
  const double theta = std::atan2(h(0, 1) - h(1, 0), h(0, 0) + h(1, 1));
  const Pose rotation_only(0.0, 0.0, theta);
  const Eigen::Vector2d t = scan_centroid - apply_pose(rotation_only, model_centroid);
  return {Pose(t.x(), t.y(), theta), total};
}

// Gradient and Gauss-Newton normal matrix of the weighted Mahalanobis
// objective with respect to (tx, ty, theta).
void objective_derivatives(const MatchGraph& graph, const Pose& pose,
                           const Eigen::Matrix2d& gamma, Eigen::Vector3d& gradient,
                           Eigen::Matrix3d& normal) {
  gradient.setZero();
  normal.setZero();
  const double c = std::cos(pose.theta());
  const double s = std::sin(pose.theta());
  for (const Edge& e : graph.edges()) {
    if (e.posterior == 0.0) continue;
    const Eigen::Vector2d m = graph.model()[e.model_index].vec();
    const Eigen::Vector2d r = residual(graph, e, pose);
    Eigen::Matrix<double, 2, 3> jac;
    // r = s - R m - t
    jac << -1.0, 0.0, s * m.x() + c * m.y(),
            0.0, -1.0, -c * m.x() + s * m.y();
    const Eigen::Matrix<double, 3, 2> jt_gamma = jac.transpose() * gamma;
    gradient += 2.0 * e.posterior * jt_gamma * r;
    normal += 2.0 * e.posterior * jt_gamma * jac;
  }
}

Pose gauss_newton_refine(const MatchGraph& graph, const PrecisionMatrix& gamma, Pose pose) {
  const Eigen::Matrix2d g = gamma.matrix();
  double current = m_step_objective(graph, pose, gamma);
  for (int iter = 0; iter < kMaxGaussNewtonSteps; ++iter) {
    Eigen::Vector3d gradient;
    Eigen::Matrix3d normal;
    objective_derivatives(graph, pose, g, gradient, normal);
    if (gradient.norm() < kGradientTolerance) break;

    const Eigen::Vector3d step = normal.ldlt().solve(-gradient);
    if (!step.allFinite()) break;

    // Near the minimum the remaining decrease drops below the rounding error
    // of the objective; there a flat value with a smaller gradient counts.
    const double flat = current + 1e-13 * std::abs(current);
    bool improved = false;
    for (double alpha = 1.0; alpha > 1e-12; alpha *= 0.5) {
      const Pose candidate(pose.tx() + alpha * step(0), pose.ty() + alpha * step(1),
                           pose.theta() + alpha * step(2));
      const double value = m_step_objective(graph, candidate, gamma);
      bool accept = value < current;
      if (!accept && value <= flat) {
        Eigen::Vector3d next_gradient;
        Eigen::Matrix3d unused;
        objective_derivatives(graph, candidate, g, next_gradient, unused);
        accept = next_gradient.norm() < gradient.norm();
      }
      if (accept) {
        improved = true;
        pose = candidate;
        current = value;
        break;
      }
    }
    if (!improved) break;
  }
  return pose;
}

double log_weight(const MatchGraph& graph, const Edge& e, const Pose& pose,
                  const PrecisionMatrix& gamma) {
  return std::log(e.prior) - 0.5 * mahalanobis_sq(residual(graph, e, pose), gamma);
}

// Adds the density normalizer back so that likelihoods under different
// Gamma are comparable.
double normalizer_term(std::size_t n_inliers, const PrecisionMatrix& gamma) {
  return static_cast<double>(n_inliers) *
         (0.5 * std::log(gamma.determinant()) - std::log(2.0 * std::numbers::pi));
}

}  // namespace

EmConfig EmConfig::for_sigma(double sigma) {
  EmConfig config;
  config.gamma = PrecisionMatrix::isotropic(sigma);
  config.window = 3.0 * sigma;
  return config;
}

void EmConfig::validate() const {
  if (!std::isfinite(window) || !(window > 0.0)) {
    throw Error(ErrorCode::NonPositiveRadius, "gate window must be positive");
  }
  if (max_iterations < 1) {
    throw Error(ErrorCode::InvalidArgument, "max_iterations must be at least 1");
  }
  if (!std::isfinite(convergence_epsilon) || !(convergence_epsilon > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "convergence_epsilon must be positive");
  }
}

EStepStats e_step(MatchGraph& graph, const Pose& pose, const PrecisionMatrix& gamma) {
  EStepStats stats;
  for (std::size_t j = 0; j < graph.scan_size(); ++j) {
    const std::span<Edge> row = graph.row(j);
    if (row.empty()) continue;

    double best = -std::numeric_limits<double>::infinity();
    double best_exponent = -std::numeric_limits<double>::infinity();
    for (Edge& e : row) {
      const double exponent =
          -0.5 * mahalanobis_sq(residual(graph, e, pose), gamma);
      e.posterior = std::log(e.prior) + exponent;
      best = std::max(best, e.posterior);
      best_exponent = std::max(best_exponent, exponent);
    }
    if (best_exponent < kUnderflowExponent) {
      for (Edge& e : row) e.posterior = e.prior;
      ++stats.degenerate_rows;
      continue;
    }
    double sum = 0.0;
    for (Edge& e : row) {
      e.posterior = std::exp(e.posterior - best);
      sum += e.posterior;
    }
    if (!(sum > 0.0) || !std::isfinite(sum)) {
      throw Error(ErrorCode::DegenerateRow, "posterior normalization failed");
    }
    for (Edge& e : row) e.posterior /= sum;
  }
  return stats;
}

double m_step_objective(const MatchGraph& graph, const Pose& pose,
                        const PrecisionMatrix& gamma) {
  double total = 0.0;
  for (const Edge& e : graph.edges()) {
    total += e.posterior * mahalanobis_sq(residual(graph, e, pose), gamma);
  }
  return total;
}

Pose m_step(const MatchGraph& graph, const PrecisionMatrix& gamma) {
  const Pose seed = closed_form_pose(graph).pose;
  if (gamma.is_isotropic()) return seed;
  return gauss_newton_refine(graph, gamma, seed);
}

double log_marginal_likelihood(const MatchGraph& graph, const Pose& pose,
                               const PrecisionMatrix& gamma) {
  double total = 0.0;
  for (std::size_t j = 0; j < graph.scan_size(); ++j) {
    const std::span<const Edge> row = graph.row(j);
    if (row.empty()) continue;
    double best = -std::numeric_limits<double>::infinity();
    for (const Edge& e : row) best = std::max(best, log_weight(graph, e, pose, gamma));
    double sum = 0.0;
    for (const Edge& e : row) sum += std::exp(log_weight(graph, e, pose, gamma) - best);
    total += best + std::log(sum);
  }
  return total;
}

ResidualCovariance covariance(const MatchGraph& graph, const Pose& pose) {
  ResidualCovariance out;
  out.n_inliers = inlier_count(graph);
  if (out.n_inliers == 0) {
    throw Error(ErrorCode::NoInliers, "no scan point has a correspondence");
  }
  for (const Edge& e : graph.edges()) {
    const Eigen::Vector2d r = residual(graph, e, pose);
    out.matrix += e.posterior * (r * r.transpose());
  }
  out.matrix /= static_cast<double>(out.n_inliers);
  // Exact symmetry regardless of summation rounding.
  out.matrix(1, 0) = out.matrix(0, 1);
  return out;
}

RegistrationResult register_scan(std::span<const Point> scan,
                                 std::span<const Point> model, const Pose& pose0,
                                 const EmConfig& config) {
  config.validate();

  MatchGraph graph = build_graph(scan, model, pose0, config.window);
  if (graph.edge_count() == 0) {
    throw Error(ErrorCode::NoCorrespondences, "no scan point lies within the gate");
  }

  RegistrationResult result;
  result.gamma = config.gamma;
  result.pose = pose0;

  const auto likelihood = [&] {
    double ll = log_marginal_likelihood(graph, result.pose, result.gamma);
    if (config.reestimate_gamma) ll += normalizer_term(inlier_count(graph), result.gamma);
    return ll;
  };

  result.loglik_trace.push_back(likelihood());
  for (int iter = 1; iter <= config.max_iterations; ++iter) {
    // Likelihoods are only comparable on one graph, so a regated iteration
    // measures its gain from the current pose evaluated on the new graph.
    double previous = result.loglik_trace.back();
    if (config.regate_each_iteration && iter > 1) {
      graph = build_graph(scan, model, result.pose, config.window);
      if (graph.edge_count() == 0) {
        throw Error(ErrorCode::NoCorrespondences, "no scan point lies within the gate");
      }
      previous = likelihood();
    }
    result.degenerate_rows += e_step(graph, result.pose, result.gamma).degenerate_rows;
    result.pose = m_step(graph, result.gamma);
    if (config.reestimate_gamma) {
      const Eigen::Matrix2d r = covariance(graph, result.pose).matrix;
      if (r(0, 0) > 0.0 && r.determinant() > 1e-24) {
        result.gamma = PrecisionMatrix::from_matrix(r.inverse());
      }
    }

    const double current = likelihood();
    result.loglik_trace.push_back(current);
    result.iterations = iter;
    if (current - previous < config.convergence_epsilon) {
      result.converged = true;
      break;
    }
  }

  result.degenerate_rows += e_step(graph, result.pose, result.gamma).degenerate_rows;
  const ResidualCovariance r = covariance(graph, result.pose);
  result.residual_covariance = r.matrix;
  result.n_inliers = r.n_inliers;
  return result;
}

}  // namespace emreg
