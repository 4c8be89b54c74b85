#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "emreg/correspondence.hpp"
#include "emreg/em_registration.hpp"
#include "emreg/geometry.hpp"

// Slow reference implementations. Nothing here touches the hash grid or
// reuses the fast-path E/M-step code; they exist to cross-check it.
namespace emreg::oracle {

/// Exhaustive scan: every i with |points[i] - q| < w, ascending.
std::vector<std::uint32_t> brute_force_neighbors(std::span<const Point> points,
                                                 const Point& q, double w);

/// All (scan j, model k) pairs with |s_j - T(m_k, pose)| < w, sorted by (j, k).
std::vector<std::pair<std::uint32_t, std::uint32_t>> dense_edge_set(
    std::span<const Point> scan, std::span<const Point> model, const Pose& pose,
    double w);

// Direct evaluation of the residual covariance from scratch: gate all pairs
// at gate_pose, compute responsibilities at pose, then average the weighted
// residual outer products over nonempty rows.
Eigen::Matrix2d dense_covariance(std::span<const Point> scan,
                                 std::span<const Point> model, const Pose& gate_pose,
                                 const Pose& pose, const PrecisionMatrix& gamma,
                                 double w);

// EM registration with all-pairs gating and its own E/M/likelihood code.
// Same contract and errors as register_scan.
RegistrationResult dense_em_register(std::span<const Point> scan,
                                     std::span<const Point> model, const Pose& pose0,
                                     const EmConfig& config);

// Minimizes the weighted Mahalanobis objective of the graph's current
// posteriors by a coarse rotation grid followed by finite-difference Newton
// refinement. Errors as m_step.
Pose numerical_m_step(const MatchGraph& graph, const PrecisionMatrix& gamma);

}  // namespace emreg::oracle
