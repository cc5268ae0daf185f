#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace mnar {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input violates a documented precondition (bad index, bad dimension, bad range).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Estimator has no defined value for the given sample (e.g. 0/0 in SNIPS).
class UndefinedEstimate : public Error {
 public:
  using Error::Error;
};

/// Requested configuration cannot be realised (e.g. observation scale k > 1).
class Infeasible : public Error {
 public:
  using Error::Error;
};

/// Malformed or truncated file contents.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Optimizer produced a non-finite objective. Carries the last finite iterate.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, std::vector<double> last_finite)
      : Error(what), last_finite_(std::move(last_finite)) {}

  const std::vector<double>& last_finite_iterate() const noexcept { return last_finite_; }

 private:
  std::vector<double> last_finite_;
};

}  // namespace mnar
