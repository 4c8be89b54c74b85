#include "emreg/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>

#include <Eigen/Dense>

#include "emreg/errors.hpp"

namespace emreg::oracle {
namespace {

using Complex = std::complex<double>;

struct WeightedPair {
  Eigen::Vector2d scan;
  Eigen::Vector2d model;
  double weight;
};

double pair_objective(std::span<const WeightedPair> pairs, const Eigen::Vector3d& y,
                      const Eigen::Matrix2d& gamma) {
  const double c = std::cos(y(2));
  const double s = std::sin(y(2));
  double total = 0.0;
  for (const WeightedPair& p : pairs) {
    const Eigen::Vector2d r(p.scan.x() - (c * p.model.x() - s * p.model.y() + y(0)),
                            p.scan.y() - (s * p.model.x() + c * p.model.y() + y(1)));
    total += p.weight * r.dot(gamma * r);
  }
  return total;
}

Eigen::Vector3d fd_gradient(std::span<const WeightedPair> pairs, const Eigen::Vector3d& y,
                            const Eigen::Matrix2d& gamma, double h) {
  Eigen::Vector3d g;
  for (int i = 0; i < 3; ++i) {
    Eigen::Vector3d hi = y;
    Eigen::Vector3d lo = y;
    hi(i) += h;
    lo(i) -= h;
    g(i) = (pair_objective(pairs, hi, gamma) - pair_objective(pairs, lo, gamma)) / (2.0 * h);
  }
  return g;
}

Eigen::Matrix3d fd_hessian(std::span<const WeightedPair> pairs, const Eigen::Vector3d& y,
                           const Eigen::Matrix2d& gamma, double h_grad, double h) {
  Eigen::Matrix3d hess;
  for (int j = 0; j < 3; ++j) {
    Eigen::Vector3d hi = y;
    Eigen::Vector3d lo = y;
    hi(j) += h;
    lo(j) -= h;
    hess.col(j) = (fd_gradient(pairs, hi, gamma, h_grad) - fd_gradient(pairs, lo, gamma, h_grad)) /
                  (2.0 * h);
  }
  return 0.5 * (hess + hess.transpose());
}

// Translation minimizing the objective at a fixed rotation; valid for any
// Gamma because it is shared by every pair.
Eigen::Vector2d best_translation(std::span<const WeightedPair> pairs, double theta) {
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  Eigen::Vector2d sum = Eigen::Vector2d::Zero();
  double total = 0.0;
  for (const WeightedPair& p : pairs) {
    sum += p.weight * Eigen::Vector2d(p.scan.x() - (c * p.model.x() - s * p.model.y()),
                                      p.scan.y() - (s * p.model.x() + c * p.model.y()));
    total += p.weight;
  }
  return sum / total;
}

Pose numerical_minimize(std::span<const WeightedPair> pairs, const PrecisionMatrix& gamma) {
  if (pairs.empty()) throw Error(ErrorCode::NoCorrespondences, "no weighted pairs");
  double total = 0.0;
  for (const WeightedPair& p : pairs) total += p.weight;
  if (!(total > 1e-12)) {
    throw Error(ErrorCode::DegenerateGeometry, "total correspondence weight is zero");
  }
  const Eigen::Matrix2d g = gamma.matrix();

  constexpr int kGridSteps = 720;
  Eigen::Vector3d best(0.0, 0.0, 0.0);
  double best_value = std::numeric_limits<double>::infinity();
  for (int i = 0; i < kGridSteps; ++i) {
    const double theta = -std::numbers::pi + 2.0 * std::numbers::pi * i / kGridSteps;
    const Eigen::Vector2d t = best_translation(pairs, theta);
    const Eigen::Vector3d y(t.x(), t.y(), theta);
    const double value = pair_objective(pairs, y, g);
    if (value < best_value) {
      best_value = value;
      best = y;
    }
  }

  constexpr double kGradStep = 1e-5;
  constexpr double kHessStep = 1e-4;
  for (int iter = 0; iter < 100; ++iter) {
    const Eigen::Vector3d grad = fd_gradient(pairs, best, g, kGradStep);
    const Eigen::Matrix3d hess = fd_hessian(pairs, best, g, kGradStep, kHessStep);
    Eigen::Vector3d step = hess.ldlt().solve(-grad);
    if (!step.allFinite() || grad.dot(step) >= 0.0) step = -grad / (1.0 + grad.norm());
    bool improved = false;
    for (double alpha = 1.0; alpha > 1e-10; alpha *= 0.5) {
      const Eigen::Vector3d candidate = best + alpha * step;
      const double value = pair_objective(pairs, candidate, g);
      if (value < best_value) {
        best = candidate;
        best_value = value;
        improved = true;
        break;
      }
    }
    if (!improved || step.norm() < 1e-14) break;
  }
  return {best(0), best(1), best(2)};
}

// All-pairs gate: rows of (model index, prior) per scan point.
struct DenseGraph {
  std::vector<std::vector<std::uint32_t>> neighbors;
  std::vector<std::vector<double>> posterior;
  std::size_t inliers = 0;
  std::size_t edges = 0;
};

Eigen::Vector2d transform(const Pose& pose, const Point& p) {
  const Complex rotated = std::polar(1.0, pose.theta()) * Complex(p.x(), p.y());
  return {rotated.real() + pose.tx(), rotated.imag() + pose.ty()};
}

DenseGraph dense_gate(std::span<const Point> scan, std::span<const Point> model,
                      const Pose& pose, double w) {
  std::vector<Point> moved;
  moved.reserve(model.size());
  for (const Point& m : model) moved.push_back(apply_pose(pose, m));

  DenseGraph graph;
  graph.neighbors.resize(scan.size());
  graph.posterior.resize(scan.size());
  for (std::size_t j = 0; j < scan.size(); ++j) {
    for (std::size_t k = 0; k < moved.size(); ++k) {
      if (within_radius(scan[j], moved[k], w)) {
        graph.neighbors[j].push_back(static_cast<std::uint32_t>(k));
      }
    }
    const std::size_t n = graph.neighbors[j].size();
    graph.posterior[j].assign(n, n == 0 ? 0.0 : 1.0 / static_cast<double>(n));
    graph.edges += n;
    if (n > 0) ++graph.inliers;
  }
  return graph;
}

double row_exponent(const Point& s, const Point& m, const Pose& pose,
                    const Eigen::Matrix2d& gamma) {
  const Eigen::Vector2d r = s.vec() - transform(pose, m);
  return -0.5 * r.dot(gamma * r);
}

// Returns the number of rows that underflowed and kept their prior.
std::size_t dense_e_step(DenseGraph& graph, std::span<const Point> scan,
                         std::span<const Point> model, const Pose& pose,
                         const Eigen::Matrix2d& gamma) {
  std::size_t degenerate = 0;
  for (std::size_t j = 0; j < scan.size(); ++j) {
    const auto& nbrs = graph.neighbors[j];
    if (nbrs.empty()) continue;
    auto& post = graph.posterior[j];
    const double prior = 1.0 / static_cast<double>(nbrs.size());
    std::vector<double> exponents(nbrs.size());
    for (std::size_t i = 0; i < nbrs.size(); ++i) {
      exponents[i] = row_exponent(scan[j], model[nbrs[i]], pose, gamma);
    }
    const double top = *std::max_element(exponents.begin(), exponents.end());
    if (top < kUnderflowExponent) {
      std::fill(post.begin(), post.end(), prior);
      ++degenerate;
      continue;
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < nbrs.size(); ++i) {
      post[i] = prior * std::exp(exponents[i] - top);
      sum += post[i];
    }
    for (double& p : post) p /= sum;
  }
  return degenerate;
}

double dense_loglik(const DenseGraph& graph, std::span<const Point> scan,
                    std::span<const Point> model, const Pose& pose,
                    const Eigen::Matrix2d& gamma) {
  double total = 0.0;
  for (std::size_t j = 0; j < scan.size(); ++j) {
    const auto& nbrs = graph.neighbors[j];
    if (nbrs.empty()) continue;
    std::vector<double> exponents(nbrs.size());
    for (std::size_t i = 0; i < nbrs.size(); ++i) {
      exponents[i] = row_exponent(scan[j], model[nbrs[i]], pose, gamma);
    }
    const double top = *std::max_element(exponents.begin(), exponents.end());
    double sum = 0.0;
    for (double e : exponents) sum += std::exp(e - top);
    total += top + std::log(sum / static_cast<double>(nbrs.size()));
  }
  return total;
}

std::vector<WeightedPair> weighted_pairs(const DenseGraph& graph, std::span<const Point> scan,
                                         std::span<const Point> model) {
  std::vector<WeightedPair> pairs;
  pairs.reserve(graph.edges);
  for (std::size_t j = 0; j < scan.size(); ++j) {
    for (std::size_t i = 0; i < graph.neighbors[j].size(); ++i) {
      pairs.push_back({scan[j].vec(), model[graph.neighbors[j][i]].vec(), graph.posterior[j][i]});
    }
  }
  return pairs;
}

// Weighted Procrustes in complex form: the optimal rotation is the argument
// of sum w (s - cs) conj(m - cm).
Pose complex_procrustes(std::span<const WeightedPair> pairs) {
  if (pairs.empty()) throw Error(ErrorCode::NoCorrespondences, "no weighted pairs");
  double total = 0.0;
  Complex cs(0.0, 0.0);
  Complex cm(0.0, 0.0);
  for (const WeightedPair& p : pairs) {
    total += p.weight;
    cs += p.weight * Complex(p.scan.x(), p.scan.y());
    cm += p.weight * Complex(p.model.x(), p.model.y());
  }
  if (!(total > 1e-12)) {
    throw Error(ErrorCode::DegenerateGeometry, "total correspondence weight is zero");
  }
  cs /= total;
  cm /= total;
  Complex cross(0.0, 0.0);
  for (const WeightedPair& p : pairs) {
    cross += p.weight * (Complex(p.scan.x(), p.scan.y()) - cs) *
             std::conj(Complex(p.model.x(), p.model.y()) - cm);
  }
  const double theta = std::arg(cross);
  const Complex t = cs - std::polar(1.0, theta) * cm;
  return {t.real(), t.imag(), theta};
}

Eigen::Matrix2d dense_residual_covariance(const DenseGraph& graph, std::span<const Point> scan,
                                          std::span<const Point> model, const Pose& pose) {
  if (graph.inliers == 0) throw Error(ErrorCode::NoInliers, "no scan point has a correspondence");
  double xx = 0.0;
  double xy = 0.0;
  double yy = 0.0;
  for (std::size_t j = 0; j < scan.size(); ++j) {
    for (std::size_t i = 0; i < graph.neighbors[j].size(); ++i) {
      const Eigen::Vector2d r = scan[j].vec() - transform(pose, model[graph.neighbors[j][i]]);
      const double w = graph.posterior[j][i];
      xx += w * r.x() * r.x();
      xy += w * r.x() * r.y();
      yy += w * r.y() * r.y();
    }
  }
  const double n = static_cast<double>(graph.inliers);
  Eigen::Matrix2d out;
  out << xx / n, xy / n, xy / n, yy / n;
  return out;
}

}  // namespace

std::vector<std::uint32_t> brute_force_neighbors(std::span<const Point> points,
                                                 const Point& q, double w) {
  std::vector<std::uint32_t> out;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (within_radius(points[i], q, w)) out.push_back(static_cast<std::uint32_t>(i));
  }
  return out;
}

std::vector<std::pair<std::uint32_t, std::uint32_t>> dense_edge_set(
    std::span<const Point> scan, std::span<const Point> model, const Pose& pose, double w) {
  const DenseGraph graph = dense_gate(scan, model, pose, w);
  std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;
  edges.reserve(graph.edges);
  for (std::size_t j = 0; j < scan.size(); ++j) {
    for (const std::uint32_t k : graph.neighbors[j]) {
      edges.emplace_back(static_cast<std::uint32_t>(j), k);
    }
  }
  return edges;
}

Eigen::Matrix2d dense_covariance(std::span<const Point> scan, std::span<const Point> model,
                                 const Pose& gate_pose, const Pose& pose,
                                 const PrecisionMatrix& gamma, double w) {
  DenseGraph graph = dense_gate(scan, model, gate_pose, w);
  dense_e_step(graph, scan, model, pose, gamma.matrix());
  return dense_residual_covariance(graph, scan, model, pose);
}

RegistrationResult dense_em_register(std::span<const Point> scan,
                                     std::span<const Point> model, const Pose& pose0,
                                     const EmConfig& config) {
  config.validate();
  if (scan.empty()) throw Error(ErrorCode::EmptyInput, "empty scan");
  if (model.empty()) throw Error(ErrorCode::EmptyInput, "empty model");

  DenseGraph graph = dense_gate(scan, model, pose0, config.window);
  if (graph.edges == 0) {
    throw Error(ErrorCode::NoCorrespondences, "no scan point lies within the gate");
  }

  RegistrationResult result;
  result.pose = pose0;
  result.gamma = config.gamma;

  const auto likelihood = [&] {
    double ll = dense_loglik(graph, scan, model, result.pose, result.gamma.matrix());
    if (config.reestimate_gamma) {
      ll += static_cast<double>(graph.inliers) *
            (0.5 * std::log(result.gamma.determinant()) - std::log(2.0 * std::numbers::pi));
    }
    return ll;
  };

  result.loglik_trace.push_back(likelihood());
  for (int iter = 1; iter <= config.max_iterations; ++iter) {
    double previous = result.loglik_trace.back();
    if (config.regate_each_iteration && iter > 1) {
      graph = dense_gate(scan, model, result.pose, config.window);
      if (graph.edges == 0) {
        throw Error(ErrorCode::NoCorrespondences, "no scan point lies within the gate");
      }
      previous = likelihood();
    }
    result.degenerate_rows +=
        dense_e_step(graph, scan, model, result.pose, result.gamma.matrix());
    const std::vector<WeightedPair> pairs = weighted_pairs(graph, scan, model);
    result.pose = result.gamma.is_isotropic() ? complex_procrustes(pairs)
                                              : numerical_minimize(pairs, result.gamma);
    if (config.reestimate_gamma) {
      const Eigen::Matrix2d r = dense_residual_covariance(graph, scan, model, result.pose);
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

  result.degenerate_rows += dense_e_step(graph, scan, model, result.pose, result.gamma.matrix());
  result.residual_covariance = dense_residual_covariance(graph, scan, model, result.pose);
  result.n_inliers = graph.inliers;
  return result;
}

Pose numerical_m_step(const MatchGraph& graph, const PrecisionMatrix& gamma) {
  std::vector<WeightedPair> pairs;
  pairs.reserve(graph.edge_count());
  for (const Edge& e : graph.edges()) {
    pairs.push_back({graph.scan()[e.scan_index].vec(), graph.model()[e.model_index].vec(),
                     e.posterior});
  }
  return numerical_minimize(pairs, gamma);
}

}  // namespace emreg::oracle
