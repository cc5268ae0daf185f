#pragma once

#include <cstddef>

#include "mnar/loss.hpp"
#include "mnar/types.hpp"

namespace mnar {

/// Inputs shared by the finite-hypothesis ERM bounds.
struct BoundInputs {
  double delta_max;              ///< loss range: 0 <= delta <= delta_max
  double eta;                    ///< confidence parameter, in (0, 1)
  std::size_t hypothesis_count;  ///< |H| >= 1

  /// delta_max may be 0 (degenerate range); must not be negative.
  void validate() const;
};

// All logarithms below are natural logarithms.

/// With probability 1 - eta, |IPS - R| is at most
/// (1/(U*I)) * sqrt(log(2/eta)/2 * sum rho^2), rho = delta/P where P < 1 and 0 where P = 1.
double ips_tail_bound(const RatingMatrix& truth, const RatingMatrix& pred, const PropensityMatrix& props,
                      LossKind kind, double eta);

/// ips_value + (Delta/(U*I)) * sqrt(log(2|H|/eta)/2) * sqrt(sum 1/P^2).
double erm_bound(double ips_value, const BoundInputs& inputs, const PropensityMatrix& props);

/// sum (delta/(U*I)) * (1 - P/Phat). Equals R - E[IPS(Phat)] (truth minus expectation).
double ips_bias(const RatingMatrix& truth, const RatingMatrix& pred, const PropensityMatrix& true_props,
                const PropensityMatrix& est_props, LossKind kind);

/// ERM bound with estimated propensities: adds (Delta/(U*I)) * sum |1 - P/Phat| and uses Phat in
/// the variance term. Delta stands in for the unknown per-entry loss in the bias term.
double erm_bound_inaccurate(double ips_value, const BoundInputs& inputs, const PropensityMatrix& true_props,
                            const PropensityMatrix& est_props);

}  // namespace mnar
