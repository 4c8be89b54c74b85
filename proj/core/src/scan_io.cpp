#include "emreg/scan_io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include "emreg/errors.hpp"

namespace emreg {
namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\v' || c == '\f'; }

std::string_view next_token(std::string_view& rest) {
  std::size_t b = 0;
  while (b < rest.size() && is_space(rest[b])) ++b;
  std::size_t e = b;
  while (e < rest.size() && !is_space(rest[e])) ++e;
  const std::string_view tok = rest.substr(b, e - b);
  rest.remove_prefix(e);
  return tok;
}

bool parse_double(std::string_view tok, double& out) {
  if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), out);
  return ec == std::errc() && ptr == tok.data() + tok.size();
}

[[noreturn]] void parse_failure(std::size_t line_no, const std::string& why) {
  throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": " + why);
}

}  // namespace

std::vector<Point> read_scan(std::istream& is) {
  std::vector<Point> points;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    std::string_view rest(line);
    const std::string_view first = next_token(rest);
    if (first.empty() || first.front() == '#') continue;
    const std::string_view second = next_token(rest);
    if (second.empty()) parse_failure(line_no, "expected two coordinates");
    if (!next_token(rest).empty()) parse_failure(line_no, "trailing data after coordinates");
    double x = 0.0;
    double y = 0.0;
    if (!parse_double(first, x) || !parse_double(second, y)) {
      parse_failure(line_no, "malformed number");
    }
    try {
      points.emplace_back(x, y);
    } catch (const Error&) {
      parse_failure(line_no, "non-finite coordinate");
    }
  }
  if (is.bad()) throw Error(ErrorCode::ParseError, "read error");
  return points;
}

std::vector<Point> read_scan_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ParseError, "cannot open " + path.string());
  try {
    return read_scan(in);
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

void write_scan(std::ostream& os, std::span<const Point> points) {
  char line[96];
  for (const Point& p : points) {
    std::snprintf(line, sizeof(line), "%.17g %.17g\n", p.x(), p.y());
    os << line;
  }
}

void write_scan_file(const std::filesystem::path& path, std::span<const Point> points) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::InvalidArgument, "cannot write " + path.string());
  write_scan(out, points);
}

}  // namespace emreg
