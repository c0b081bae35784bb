#pragma once

#include <stdexcept>
#include <string>

namespace btvc {

/// Invalid argument values: bad hyperparameters, dimension mismatches,
/// out-of-range requests.
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Violation of a model admissibility constraint (e.g. beta at or beyond the
/// tau^2-positivity bound, sigma^2 >= target variance).
class ConstraintError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Numerical failure: factorization breakdown, NaN propagation.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The Markov chain could not find an admissible proposal for too long.
class DivergenceError : public NumericError {
 public:
  using NumericError::NumericError;
};

/// Malformed input file or configuration document. Carries the offending
/// line when known (1-based, -1 if not applicable).
class SchemaError : public std::invalid_argument {
 public:
  explicit SchemaError(const std::string& what, long line = -1)
      : std::invalid_argument(what), line_(line) {}
  long line() const noexcept { return line_; }

 private:
  long line_;
};

/// Filesystem-level failure.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace btvc
