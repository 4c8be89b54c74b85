#include "emreg/spatial_index.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "emreg/errors.hpp"

namespace emreg {
namespace {

// Slack, in cell units, added to the query's cell range so that rounding in
// the coordinate division can never drop a cell the disk touches. It only
// widens the scan for queries within 1e-9 cells of a cell boundary.
constexpr double kCellSlack = 1e-9;

std::int64_t cell_floor(double v) noexcept {
  return static_cast<std::int64_t>(std::floor(v));
}

}  // namespace

std::size_t CellCoordHash::operator()(const CellCoord& c) const noexcept {
  // splitmix64 finalizer over the packed pair.
  auto x = static_cast<std::uint64_t>(c.i) * 0x9E3779B97F4A7C15ull ^
           static_cast<std::uint64_t>(c.j);
  x ^= x >> 30;
  x *= 0xBF58476D1CE4E5B9ull;
  x ^= x >> 27;
  x *= 0x94D049BB133111EBull;
  x ^= x >> 31;
  return static_cast<std::size_t>(x);
}

GridIndex::GridIndex(std::span<const Point> points, double radius)
    : radius_(radius), cell_size_(radius),
      points_(points.begin(), points.end()) {
  if (!std::isfinite(radius) || !(radius > 0.0)) {
    throw Error(ErrorCode::NonPositiveRadius, "query radius must be positive");
  }
  if (points_.size() > std::numeric_limits<std::uint32_t>::max()) {
    throw Error(ErrorCode::InvalidArgument, "too many points for the grid index");
  }

  // Counting sort of point indices by cell.
  std::vector<std::uint32_t> slot_of(points_.size());
  std::vector<std::uint32_t> counts;
  cells_.reserve(points_.size());
  for (std::size_t i = 0; i < points_.size(); ++i) {
    const auto [it, inserted] = cells_.try_emplace(
        cell_of(points_[i]), static_cast<std::uint32_t>(counts.size()));
    if (inserted) counts.push_back(0);
    slot_of[i] = it->second;
    ++counts[it->second];
  }

  cell_begin_.assign(counts.size() + 1, 0);
  for (std::size_t c = 0; c < counts.size(); ++c) {
    cell_begin_[c + 1] = cell_begin_[c] + counts[c];
  }
  members_.resize(points_.size());
  std::vector<std::uint32_t> cursor(cell_begin_.begin(), cell_begin_.end() - 1);
  for (std::size_t i = 0; i < points_.size(); ++i) {
    members_[cursor[slot_of[i]]++] = static_cast<std::uint32_t>(i);
  }
}

CellCoord GridIndex::cell_of(const Point& p) const noexcept {
  return {cell_floor(p.x() / cell_size_), cell_floor(p.y() / cell_size_)};
}

std::span<const std::uint32_t> GridIndex::cell_members(const CellCoord& c) const noexcept {
  const auto it = cells_.find(c);
  if (it == cells_.end()) return {};
  const auto slot = it->second;
  return std::span<const std::uint32_t>(members_).subspan(
      cell_begin_[slot], cell_begin_[slot + 1] - cell_begin_[slot]);
}

std::vector<std::uint32_t> GridIndex::query_radius(const Point& q) const {
  std::vector<std::uint32_t> out;
  query_radius(q, out);
  return out;
}

void GridIndex::query_radius(const Point& q, std::vector<std::uint32_t>& out) const {
  out.clear();
  if (points_.empty()) return;

  // With cell_size == radius this is the 3x3 block around q's cell (4 wide
  // only when q sits on a boundary within the slack).
  const std::int64_t i_lo = cell_floor((q.x() - radius_) / cell_size_ - kCellSlack);
  const std::int64_t i_hi = cell_floor((q.x() + radius_) / cell_size_ + kCellSlack);
  const std::int64_t j_lo = cell_floor((q.y() - radius_) / cell_size_ - kCellSlack);
  const std::int64_t j_hi = cell_floor((q.y() + radius_) / cell_size_ + kCellSlack);

  for (std::int64_t i = i_lo; i <= i_hi; ++i) {
    for (std::int64_t j = j_lo; j <= j_hi; ++j) {
      for (const std::uint32_t idx : cell_members({i, j})) {
        if (within_radius(points_[idx], q, radius_)) out.push_back(idx);
      }
    }
  }
  std::sort(out.begin(), out.end());
}

GridIndex build_index(std::span<const Point> points, double w) {
  return GridIndex(points, w);
}

}  // namespace emreg
