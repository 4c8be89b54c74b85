#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

#include "emreg/geometry.hpp"

namespace emreg {

struct CellCoord {
  std::int64_t i = 0;
  std::int64_t j = 0;
  friend bool operator==(const CellCoord&, const CellCoord&) = default;
};

struct CellCoordHash {
  std::size_t operator()(const CellCoord& c) const noexcept;
};

// Uniform hash grid for fixed-radius neighbor queries. Cells are W wide, so
// a disk of radius W around any query is covered by the 3x3 block of cells
// around the query's own cell. Points are stored cell-contiguously
// (counting sort), the hash map only resolves a cell to its slice.
//
// Immutable after construction; concurrent queries are safe.
class GridIndex {
 public:
  GridIndex(std::span<const Point> points, double radius);

  double radius() const noexcept { return radius_; }
  double cell_size() const noexcept { return cell_size_; }
  std::size_t size() const noexcept { return points_.size(); }
  std::size_t occupied_cells() const noexcept { return cells_.size(); }

  CellCoord cell_of(const Point& p) const noexcept;

  /// Indices of the points stored in cell c, in insertion order.
  std::span<const std::uint32_t> cell_members(const CellCoord& c) const noexcept;

  /// All indices i with |p_i - q| < radius, ascending.
  std::vector<std::uint32_t> query_radius(const Point& q) const;

  /// Same as query_radius but appends into out (cleared first) to avoid
  /// reallocating in hot loops.
  void query_radius(const Point& q, std::vector<std::uint32_t>& out) const;

 private:
  double radius_;
  double cell_size_;
  std::vector<Point> points_;
  std::unordered_map<CellCoord, std::uint32_t, CellCoordHash> cells_;
  std::vector<std::uint32_t> cell_begin_;  // size = cells + 1
  std::vector<std::uint32_t> members_;
};

/// Throws Error{NonPositiveRadius} if w <= 0 or is not finite.
GridIndex build_index(std::span<const Point> points, double w);

}  // namespace emreg
