#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "emreg/geometry.hpp"

namespace emreg {

// Candidate correspondence between scan point j and model point k.
struct Edge {
  std::uint32_t scan_index = 0;
  std::uint32_t model_index = 0;
  double prior = 0.0;      // 1 / |N(s_j)|
  double posterior = 0.0;  // responsibility, starts equal to prior
};

// Bipartite graph between scan and model. Edges are stored grouped by scan
// index (row), ascending model index within a row, so per-row normalization
// is a contiguous pass. Scan points with an empty neighborhood have an
// empty row and are treated as outliers.
class MatchGraph {
 public:
  std::span<const Point> scan() const noexcept { return scan_; }
  std::span<const Point> model() const noexcept { return model_; }
  /// Model points mapped through the gating pose.
  std::span<const Point> transformed_model() const noexcept { return transformed_model_; }

  const Pose& gate_pose() const noexcept { return gate_pose_; }
  double window() const noexcept { return window_; }

  std::size_t scan_size() const noexcept { return scan_.size(); }
  std::size_t edge_count() const noexcept { return edges_.size(); }

  std::span<const Edge> edges() const noexcept { return edges_; }
  std::span<Edge> edges() noexcept { return edges_; }

  std::span<const Edge> row(std::size_t j) const noexcept;
  std::span<Edge> row(std::size_t j) noexcept;
  std::size_t neighborhood_size(std::size_t j) const noexcept {
    return row_begin_[j + 1] - row_begin_[j];
  }

  /// Restores every posterior to its prior.
  void reset_posteriors() noexcept;

 private:
  friend MatchGraph build_graph(std::span<const Point>, std::span<const Point>,
                                const Pose&, double);

  std::vector<Point> scan_;
  std::vector<Point> model_;
  std::vector<Point> transformed_model_;
  Pose gate_pose_;
  double window_ = 0.0;
  std::vector<Edge> edges_;
  std::vector<std::size_t> row_begin_;  // size = scan + 1
};

// Gates every scan point against the model mapped through pose0 with a
// strict radius w, using a hash grid over the transformed model. Priors are
// uniform over each nonempty neighborhood.
//
// Throws Error{NonPositiveRadius} for w <= 0 and Error{EmptyInput} when
// either point set is empty.
MatchGraph build_graph(std::span<const Point> scan, std::span<const Point> model,
                       const Pose& pose0, double w);

/// Scan points with no candidate edge.
std::size_t outlier_count(const MatchGraph& graph) noexcept;
/// Scan points with at least one edge (n_P).
std::size_t inlier_count(const MatchGraph& graph) noexcept;

/// Debug dump, one `j k prior posterior` line per edge.
void write_graph(std::ostream& os, const MatchGraph& graph);

}  // namespace emreg
