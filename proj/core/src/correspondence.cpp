#include "emreg/correspondence.hpp"

#include <cstdio>
#include <ostream>

#include "emreg/errors.hpp"
#include "emreg/spatial_index.hpp"

namespace emreg {

std::span<const Edge> MatchGraph::row(std::size_t j) const noexcept {
  return std::span<const Edge>(edges_).subspan(row_begin_[j],
                                               row_begin_[j + 1] - row_begin_[j]);
}

std::span<Edge> MatchGraph::row(std::size_t j) noexcept {
  return std::span<Edge>(edges_).subspan(row_begin_[j], row_begin_[j + 1] - row_begin_[j]);
}

void MatchGraph::reset_posteriors() noexcept {
  for (Edge& e : edges_) e.posterior = e.prior;
}

MatchGraph build_graph(std::span<const Point> scan, std::span<const Point> model,
                       const Pose& pose0, double w) {
  if (scan.empty()) throw Error(ErrorCode::EmptyInput, "empty scan");
  if (model.empty()) throw Error(ErrorCode::EmptyInput, "empty model");

  MatchGraph graph;
  graph.scan_.assign(scan.begin(), scan.end());
  graph.model_.assign(model.begin(), model.end());
  graph.gate_pose_ = pose0;
  graph.window_ = w;
  graph.transformed_model_.reserve(model.size());
  for (const Point& m : model) graph.transformed_model_.push_back(apply_pose(pose0, m));

  const GridIndex index = build_index(graph.transformed_model_, w);

  graph.row_begin_.reserve(scan.size() + 1);
  graph.row_begin_.push_back(0);
  std::vector<std::uint32_t> neighbors;
  for (std::size_t j = 0; j < scan.size(); ++j) {
    index.query_radius(scan[j], neighbors);
    const double prior = neighbors.empty() ? 0.0 : 1.0 / static_cast<double>(neighbors.size());
    for (const std::uint32_t k : neighbors) {
      graph.edges_.push_back({static_cast<std::uint32_t>(j), k, prior, prior});
    }
    graph.row_begin_.push_back(graph.edges_.size());
  }
  return graph;
}

std::size_t outlier_count(const MatchGraph& graph) noexcept {
  std::size_t n = 0;
  for (std::size_t j = 0; j < graph.scan_size(); ++j) {
    if (graph.neighborhood_size(j) == 0) ++n;
  }
  return n;
}

std::size_t inlier_count(const MatchGraph& graph) noexcept {
  return graph.scan_size() - outlier_count(graph);
}

void write_graph(std::ostream& os, const MatchGraph& graph) {
  char line[128];
  for (const Edge& e : graph.edges()) {
    std::snprintf(line, sizeof(line), "%u %u %.17g %.17g\n", e.scan_index, e.model_index,
                  e.prior, e.posterior);
    os << line;
  }
}

}  // namespace emreg
