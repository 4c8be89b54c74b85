#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "emreg/correspondence.hpp"
#include "emreg/geometry.hpp"

namespace emreg {

struct EmConfig {
  PrecisionMatrix gamma = PrecisionMatrix::identity();
  double window = 3.0;  // gate radius W, meters
  int max_iterations = 50;
  // Absolute log-likelihood increase below which the loop stops.
  double convergence_epsilon = 1e-6;
  // Rebuild the match graph at the current pose before every E-step.
  bool regate_each_iteration = false;
  // Replace Gamma by the inverse residual covariance after every M-step.
  bool reestimate_gamma = false;

  /// Gamma = I / sigma^2 and W = 3 sigma.
  static EmConfig for_sigma(double sigma);

  /// Throws Error{InvalidArgument} / Error{NonPositiveRadius}.
  void validate() const;
};

struct RegistrationResult {
  Pose pose;
  Eigen::Matrix2d residual_covariance = Eigen::Matrix2d::Zero();
  int iterations = 0;
  // Entry 0 is the initial pose, entry i the pose after EM iteration i.
  // With regating, consecutive entries may come from different graphs.
  std::vector<double> loglik_trace;
  std::size_t n_inliers = 0;
  bool converged = false;
  // Gamma in effect at the end; differs from the config only when
  // reestimate_gamma is set.
  PrecisionMatrix gamma = PrecisionMatrix::identity();
  // Rows whose best exponent underflowed and kept their prior.
  std::size_t degenerate_rows = 0;
};

// Rows whose largest log-weight falls below this keep their prior instead
// of being normalized.
inline constexpr double kUnderflowExponent = -700.0;

struct EStepStats {
  std::size_t degenerate_rows = 0;
};

// Responsibilities: posterior_jk = prior_jk p(s_j|m_k,y) / sum_k' (...),
// normalized per row with a max-exponent shift. Outlier rows stay empty.
EStepStats e_step(MatchGraph& graph, const Pose& pose, const PrecisionMatrix& gamma);

/// sum over edges of posterior * |s_j - T(m_k, pose)|^2_Gamma.
double m_step_objective(const MatchGraph& graph, const Pose& pose,
                        const PrecisionMatrix& gamma);

// Pose minimizing m_step_objective for the current posteriors. Closed form
// for isotropic Gamma (weighted Procrustes); for anisotropic Gamma the closed
// form seeds a Gauss-Newton refinement run to gradient norm < 1e-9.
//
// Throws Error{NoCorrespondences} when the graph has no edges and
// Error{DegenerateGeometry} when the total posterior weight is ~0.
Pose m_step(const MatchGraph& graph, const PrecisionMatrix& gamma);

// sum over inlier rows of log sum_k prior_jk p(s_j|m_k,y), evaluated with
// log-sum-exp. Outlier rows contribute 0. Uses the unnormalized density
// (see edge_density).
double log_marginal_likelihood(const MatchGraph& graph, const Pose& pose,
                               const PrecisionMatrix& gamma);

struct ResidualCovariance {
  Eigen::Matrix2d matrix = Eigen::Matrix2d::Zero();
  std::size_t n_inliers = 0;
};

// R = (1/n_P) sum_edges posterior * r r^T with r = s_j - T(m_k, pose), using
// the posteriors currently stored in the graph. n_P counts nonempty rows.
// Throws Error{NoInliers} if n_P = 0.
ResidualCovariance covariance(const MatchGraph& graph, const Pose& pose);

// Full EM registration of scan against model starting from pose0. The graph
// is gated once at pose0 (unless regating is enabled), then E- and M-steps
// alternate until the log-likelihood gain drops below the configured epsilon
// or max_iterations is reached. Non-convergence is reported through
// RegistrationResult::converged, not as an error.
RegistrationResult register_scan(std::span<const Point> scan,
                                 std::span<const Point> model, const Pose& pose0,
                                 const EmConfig& config);

}  // namespace emreg
