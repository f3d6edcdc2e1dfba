#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace vpp {

/// Raised when an input (config, profile, CSV, initial state) breaks one or
/// more documented invariants. Every violation is kept so callers can report
/// all of them at once.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(std::vector<std::string> violations);
  explicit ValidationError(std::string violation)
      : ValidationError(std::vector<std::string>{std::move(violation)}) {}

  const std::vector<std::string>& violations() const noexcept { return violations_; }

 private:
  std::vector<std::string> violations_;
};

/// A time series does not span the interval an operation needs.
class CoverageError : public std::runtime_error {
 public:
  CoverageError(int missing_begin, int missing_end);

  int missing_begin() const noexcept { return begin_; }
  int missing_end() const noexcept { return end_; }

 private:
  int begin_;
  int end_;
};

}  // namespace vpp
