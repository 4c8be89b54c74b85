#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace emreg {

enum class ErrorCode {
  InvalidArgument,
  NonPositiveRadius,
  EmptyInput,
  NoCorrespondences,
  DegenerateGeometry,
  DegenerateRow,
  NoInliers,
  ParseError,
};

std::string_view to_string(ErrorCode code) noexcept;

// All library failures are reported through this exception; callers that
// need to branch on the failure kind inspect code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace emreg
