#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "mnar/errors.hpp"
#include "mnar/lbfgs.hpp"

using namespace mnar;

namespace {

double rosenbrock(std::span<const double> x, std::span<double> g) {
  double f = 0.0;
  std::fill(g.begin(), g.end(), 0.0);
  for (std::size_t k = 0; k + 1 < x.size(); ++k) {
    const double a = x[k + 1] - x[k] * x[k];
    const double b = 1.0 - x[k];
    f += 100.0 * a * a + b * b;
    g[k] += -400.0 * a * x[k] - 2.0 * b;
    g[k + 1] += 200.0 * a;
  }
  return f;
}

// f(x) = sum_k c_k (x_k - k)^2
double quadratic(std::span<const double> x, std::span<double> g) {
  double f = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double c = 1.0 + static_cast<double>(k);
    const double r = x[k] - static_cast<double>(k);
    f += c * r * r;
    g[k] = 2.0 * c * r;
  }
  return f;
}

}  // namespace

TEST(Lbfgs, SolvesQuadratic) {
  const auto r = minimize(quadratic, std::vector<double>(8, 0.0));
  EXPECT_EQ(r.reason, StopReason::GradientTolerance);
  for (std::size_t k = 0; k < 8; ++k) EXPECT_NEAR(r.x[k], static_cast<double>(k), 1e-6);
  EXPECT_LT(r.gradient_max_norm, 1e-6);
}

TEST(Lbfgs, SolvesRosenbrock) {
  DescentOptions options;
  options.max_iterations = 2000;
  const auto r = minimize(rosenbrock, {-1.2, 1.0, -0.5, 0.8}, options);
  EXPECT_EQ(r.reason, StopReason::GradientTolerance);
  for (double v : r.x) EXPECT_NEAR(v, 1.0, 1e-5);
}

TEST(Lbfgs, TraceIsNonincreasing) {
  const auto r = minimize(rosenbrock, {-1.2, 1.0});
  ASSERT_EQ(r.trace.size(), r.iterations + 1);
  for (std::size_t k = 1; k < r.trace.size(); ++k) EXPECT_LE(r.trace[k], r.trace[k - 1]);
  EXPECT_EQ(r.trace.back(), r.value);
}

TEST(Lbfgs, GradientDescentFallback) {
  DescentOptions options;
  options.method = DescentMethod::GradientDescent;
  options.max_iterations = 5000;
  options.gradient_tolerance = 1e-5;
  const auto r = minimize(quadratic, std::vector<double>(3, 0.0), options);
  EXPECT_EQ(r.reason, StopReason::GradientTolerance);
  for (std::size_t k = 0; k < 3; ++k) EXPECT_NEAR(r.x[k], static_cast<double>(k), 1e-5);
  for (std::size_t k = 1; k < r.trace.size(); ++k) EXPECT_LE(r.trace[k], r.trace[k - 1]);
}

TEST(Lbfgs, IterationCap) {
  DescentOptions options;
  options.max_iterations = 3;
  const auto r = minimize(rosenbrock, {-1.2, 1.0}, options);
  EXPECT_EQ(r.reason, StopReason::MaxIterations);
  EXPECT_EQ(r.iterations, 3u);
}

TEST(Lbfgs, BitwiseInvariantUnderPowerOfTwoScaling) {
  DescentOptions options;
  options.max_iterations = 40;
  options.gradient_tolerance = 0.0;
  const auto base = minimize(rosenbrock, {-1.2, 1.0, 0.3}, options);
  const auto scaled = minimize(
      [](std::span<const double> x, std::span<double> g) {
        const double f = rosenbrock(x, g);
        for (double& v : g) v *= 0.125;
        return f * 0.125;
      },
      {-1.2, 1.0, 0.3}, options);
  EXPECT_EQ(base.x, scaled.x);
  EXPECT_EQ(base.iterations, scaled.iterations);
}

TEST(Lbfgs, NonFiniteStartThrows) {
  auto bad = [](std::span<const double>, std::span<double> g) {
    std::fill(g.begin(), g.end(), 0.0);
    return std::numeric_limits<double>::quiet_NaN();
  };
  EXPECT_THROW(minimize(bad, {1.0}), DivergenceError);
}

TEST(Lbfgs, DivergenceCarriesLastFiniteIterate) {
  // Finite only at the start; every trial step is non-finite.
  int calls = 0;
  auto cliff = [&calls](std::span<const double>, std::span<double> g) {
    g[0] = 1.0;
    return calls++ == 0 ? 0.0 : std::numeric_limits<double>::infinity();
  };
  try {
    minimize(cliff, {2.0});
    FAIL() << "expected DivergenceError";
  } catch (const DivergenceError& e) {
    EXPECT_EQ(e.last_finite_iterate(), std::vector<double>{2.0});
  }
}

TEST(Lbfgs, BacktracksAwayFromNonFiniteRegion) {
  // log barrier at x = -1; the first unit step from x = 0 along -g lands beyond it.
  auto barrier = [](std::span<const double> x, std::span<double> g) {
    if (x[0] <= -1.0) {
      g[0] = 0.0;
      return std::numeric_limits<double>::infinity();
    }
    g[0] = 2.0 * (x[0] + 0.9) - 1.0 / (x[0] + 1.0);
    return (x[0] + 0.9) * (x[0] + 0.9) - std::log(x[0] + 1.0);
  };
  const auto r = minimize(barrier, {0.0});
  EXPECT_EQ(r.reason, StopReason::GradientTolerance);
  EXPECT_GT(r.x[0], -1.0);
}
