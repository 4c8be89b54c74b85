#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "emreg/geometry.hpp"

namespace emreg {

// Scan files are line oriented: `x y` per line in meters, whitespace
// separated. Blank lines and lines whose first non-blank character is '#'
// are skipped. Anything else that does not parse as exactly two finite
// numbers is an Error{ParseError} naming the line.
std::vector<Point> read_scan(std::istream& is);
std::vector<Point> read_scan_file(const std::filesystem::path& path);

/// Writes with 17 significant digits so values round-trip exactly.
void write_scan(std::ostream& os, std::span<const Point> points);
void write_scan_file(const std::filesystem::path& path, std::span<const Point> points);

}  // namespace emreg
