#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace mnar {

/// Objective callback: returns f(x) and writes grad f(x) into `grad`.
using Objective = std::function<double(std::span<const double> x, std::span<double> grad)>;

enum class DescentMethod { LBFGS, GradientDescent };

struct DescentOptions {
  DescentMethod method = DescentMethod::LBFGS;
  std::size_t memory = 10;
  std::size_t max_iterations = 500;
  /// Stop when max |grad_j| < gradient_tolerance.
  double gradient_tolerance = 1e-6;
  /// Armijo sufficient-decrease constant.
  double armijo = 1e-4;
  std::size_t max_backtracks = 60;
};

enum class StopReason { GradientTolerance, MaxIterations, LineSearchFailed };

struct DescentResult {
  std::vector<double> x;
  double value;
  double gradient_max_norm;
  std::size_t iterations;
  std::size_t evaluations;
  StopReason reason;
  /// Objective after every accepted step, starting with f(x0).
  std::vector<double> trace;
};

/// Full-batch descent with backtracking Armijo line search. Accepted steps never increase f.
/// The iteration is invariant (bit-for-bit) under scaling f by a power of two, except for the
/// gradient-tolerance test. Throws DivergenceError if f(x0) is not finite.
DescentResult minimize(const Objective& objective, std::vector<double> x0, const DescentOptions& options = {});

}  // namespace mnar
