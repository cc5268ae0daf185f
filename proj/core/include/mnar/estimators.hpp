#pragma once

#include <cstddef>
#include <string>

#include "mnar/loss.hpp"
#include "mnar/types.hpp"

namespace mnar {

enum class EstimatorKind { Naive, IPS, SNIPS };

std::string to_string(EstimatorKind kind);

struct EstimateReport {
  EstimatorKind estimator;
  double value;
  std::size_t observed_count;
  /// Denominator actually used: |O| for Naive, U*I for IPS, sum of 1/P for SNIPS.
  double normalizer;
};

// True ratings are always read from the sample entries, never from a full Y.

/// Mean loss over the revealed entries. Throws UndefinedEstimate on an empty sample.
EstimateReport naive_estimate(const ObservationSample& obs, const LossEvaluator& loss);
EstimateReport naive_estimate(const ObservationSample& obs, const RatingMatrix& pred, LossKind kind);

/// (1/(U*I)) * sum_O delta/P. The empty sample gives 0.
EstimateReport ips_estimate(const ObservationSample& obs, const LossEvaluator& loss, const PropensityMatrix& props);
EstimateReport ips_estimate(const ObservationSample& obs, const RatingMatrix& pred, const PropensityMatrix& props,
                            LossKind kind);

/// (sum_O delta/P) / (sum_O 1/P). Throws UndefinedEstimate on an empty sample.
EstimateReport snips_estimate(const ObservationSample& obs, const LossEvaluator& loss,
                              const PropensityMatrix& props);
EstimateReport snips_estimate(const ObservationSample& obs, const RatingMatrix& pred,
                              const PropensityMatrix& props, LossKind kind);

EstimateReport estimate(EstimatorKind estimator, const ObservationSample& obs, const LossEvaluator& loss,
                        const PropensityMatrix& props);

/// Exact moments of an estimator under independent Bernoulli reveals.
struct ExpectationResult {
  double mean;
  double variance;
  /// Probability of the empty pattern. Naive/SNIPS moments are conditional on O != {}.
  double empty_probability;
};

/// Largest U*I accepted by exact_expectation.
inline constexpr std::size_t kMaxEnumerationCells = 20;

/// Enumerates all 2^(U*I) observation patterns. Reveals follow `true_props`; the estimator is
/// evaluated with `eval_props`. Throws InvalidArgument if U*I > kMaxEnumerationCells.
ExpectationResult exact_expectation(const RatingMatrix& truth, const RatingMatrix& pred,
                                    const PropensityMatrix& true_props, const PropensityMatrix& eval_props,
                                    LossKind kind, EstimatorKind estimator);

}  // namespace mnar
