#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace cosamp {

/// Vector/operator/support dimensions disagree.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed input: non-finite entries, bad parameters, bad configs.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A least-squares solve could not proceed (rank deficiency, |T| > m).
class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, double smallest_eigenvalue = 0.0)
      : std::runtime_error(what), smallest_eigenvalue_(smallest_eigenvalue) {}

  double smallest_eigenvalue() const noexcept { return smallest_eigenvalue_; }

  /// Iteration of the recovery loop the failure surfaced in (0 = outside the loop).
  std::size_t iteration() const noexcept { return iteration_; }
  void set_iteration(std::size_t k) noexcept { iteration_ = k; }

 private:
  double smallest_eigenvalue_;
  std::size_t iteration_ = 0;
};

/// Exhaustive restricted-isometry computation would exceed the support budget.
class BudgetExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Binary/JSON input that does not follow the expected layout.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace cosamp
