#include "mnar/lbfgs.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

#include "mnar/errors.hpp"

namespace mnar {
namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

double max_abs(std::span<const double> a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::abs(v));
  return m;
}

bool all_finite(std::span<const double> a) {
  return std::all_of(a.begin(), a.end(), [](double v) { return std::isfinite(v); });
}

struct CurvaturePair {
  std::vector<double> s;
  std::vector<double> y;
  double rho;  // 1 / (y . s)
};

// Two-loop recursion: direction = -H g with H0 = gamma I.
void lbfgs_direction(const std::deque<CurvaturePair>& history, std::span<const double> g, std::vector<double>& d) {
  d.assign(g.begin(), g.end());
  std::vector<double> alpha(history.size());
  for (std::size_t k = history.size(); k-- > 0;) {
    const auto& h = history[k];
    alpha[k] = h.rho * dot(h.s, d);
    for (std::size_t j = 0; j < d.size(); ++j) d[j] -= alpha[k] * h.y[j];
  }
  const auto& last = history.back();
  const double gamma = dot(last.s, last.y) / dot(last.y, last.y);
  for (double& v : d) v *= gamma;
  for (std::size_t k = 0; k < history.size(); ++k) {
    const auto& h = history[k];
    const double beta = h.rho * dot(h.y, d);
    for (std::size_t j = 0; j < d.size(); ++j) d[j] += (alpha[k] - beta) * h.s[j];
  }
  for (double& v : d) v = -v;
}

void normalized_steepest(std::span<const double> g, std::vector<double>& d) {
  const double norm = std::sqrt(dot(g, g));
  d.resize(g.size());
  for (std::size_t j = 0; j < g.size(); ++j) d[j] = -g[j] / norm;
}

}  // namespace

DescentResult minimize(const Objective& objective, std::vector<double> x0, const DescentOptions& options) {
  const std::size_t n = x0.size();
  DescentResult result{std::move(x0), 0.0, 0.0, 0, 0, StopReason::MaxIterations, {}};
  std::vector<double>& x = result.x;

  std::vector<double> g(n);
  double f = objective(x, g);
  ++result.evaluations;
  if (!std::isfinite(f) || !all_finite(g)) throw DivergenceError("objective is not finite at the starting point", x);
  result.trace.push_back(f);

  std::deque<CurvaturePair> history;
  std::vector<double> d;
  std::vector<double> x_new(n);
  std::vector<double> g_new(n);
  double gd_step = 1.0;  // step length carried between gradient-descent iterations

  for (;;) {
    result.gradient_max_norm = max_abs(g);
    if (result.gradient_max_norm < options.gradient_tolerance) {
      result.reason = StopReason::GradientTolerance;
      break;
    }
    if (result.iterations >= options.max_iterations) {
      result.reason = StopReason::MaxIterations;
      break;
    }

    const bool quasi_newton = options.method == DescentMethod::LBFGS && !history.empty();
    if (quasi_newton) {
      lbfgs_direction(history, g, d);
    } else {
      normalized_steepest(g, d);
    }
    double slope = dot(g, d);
    if (!(slope < 0.0)) {
      history.clear();
      normalized_steepest(g, d);
      slope = dot(g, d);
    }

    double t = options.method == DescentMethod::GradientDescent ? gd_step : 1.0;
    bool accepted = false;
    bool saw_finite = false;
    double f_new = f;
    for (std::size_t bt = 0; bt <= options.max_backtracks; ++bt, t *= 0.5) {
      for (std::size_t j = 0; j < n; ++j) x_new[j] = x[j] + t * d[j];
      f_new = objective(x_new, g_new);
      ++result.evaluations;
      if (!std::isfinite(f_new) || !all_finite(g_new)) continue;
      saw_finite = true;
      if (f_new <= f + options.armijo * t * slope) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      if (!saw_finite) throw DivergenceError("objective became non-finite along the search direction", x);
      result.reason = StopReason::LineSearchFailed;
      break;
    }

    if (options.method == DescentMethod::LBFGS) {
      CurvaturePair pair{std::vector<double>(n), std::vector<double>(n), 0.0};
      for (std::size_t j = 0; j < n; ++j) {
        pair.s[j] = x_new[j] - x[j];
        pair.y[j] = g_new[j] - g[j];
      }
      const double sy = dot(pair.s, pair.y);
      if (sy > 0.0) {
        pair.rho = 1.0 / sy;
        history.push_back(std::move(pair));
        if (history.size() > options.memory) history.pop_front();
      }
    } else {
      gd_step = 2.0 * t;
    }

    x.swap(x_new);
    g.swap(g_new);
    f = f_new;
    ++result.iterations;
    result.trace.push_back(f);
  }

  result.value = f;
  return result;
}

}  // namespace mnar
