#include "mnar/estimators.hpp"

#include <cmath>
#include <vector>

#include "mnar/errors.hpp"

namespace mnar {

std::string to_string(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::Naive: return "Naive";
    case EstimatorKind::IPS: return "IPS";
    case EstimatorKind::SNIPS: return "SNIPS";
  }
  return "?";
}

namespace {

void require_loss_dims(const ObservationSample& obs, const LossEvaluator& loss) {
  if (obs.rows() != loss.rows() || obs.cols() != loss.cols())
    throw InvalidArgument("observation sample and prediction matrix dimensions differ");
}

}  // namespace

EstimateReport naive_estimate(const ObservationSample& obs, const LossEvaluator& loss) {
  require_loss_dims(obs, loss);
  if (obs.empty()) throw UndefinedEstimate("naive estimate is undefined for an empty observation sample");
  double sum = 0.0;
  for (const Rating& r : obs.entries()) sum += loss(r.user, r.item, r.value);
  const auto n = static_cast<double>(obs.size());
  return {EstimatorKind::Naive, sum / n, obs.size(), n};
}

EstimateReport naive_estimate(const ObservationSample& obs, const RatingMatrix& pred, LossKind kind) {
  return naive_estimate(obs, LossEvaluator(pred, kind));
}

EstimateReport ips_estimate(const ObservationSample& obs, const LossEvaluator& loss, const PropensityMatrix& props) {
  require_loss_dims(obs, loss);
  require_same_dims(obs, props);
  double sum = 0.0;
  for (const Rating& r : obs.entries()) {
    const double p = props(r.user, r.item);
    if (!(p > 0.0)) throw InvalidArgument("nonpositive propensity at an observed entry");
    sum += loss(r.user, r.item, r.value) / p;
  }
  const auto cells = static_cast<double>(obs.cells());
  return {EstimatorKind::IPS, sum / cells, obs.size(), cells};
}

EstimateReport ips_estimate(const ObservationSample& obs, const RatingMatrix& pred, const PropensityMatrix& props,
                            LossKind kind) {
  return ips_estimate(obs, LossEvaluator(pred, kind), props);
}

EstimateReport snips_estimate(const ObservationSample& obs, const LossEvaluator& loss,
                              const PropensityMatrix& props) {
  require_loss_dims(obs, loss);
  require_same_dims(obs, props);
  if (obs.empty()) throw UndefinedEstimate("SNIPS estimate is undefined (0/0) for an empty observation sample");

  // Weights are taken relative to the first entry's weight. The ratio is unchanged, and with
  // equal propensities every relative weight is exactly 1, so the result equals Naive bit for bit.
  const double p_ref = props(obs[0].user, obs[0].item);
  double weighted = 0.0;
  double weights = 0.0;
  double inverse_sum = 0.0;
  for (const Rating& r : obs.entries()) {
    const double p = props(r.user, r.item);
    if (!(p > 0.0)) throw InvalidArgument("nonpositive propensity at an observed entry");
    const double w = p_ref / p;
    weighted += loss(r.user, r.item, r.value) * w;
    weights += w;
    inverse_sum += 1.0 / p;
  }
  return {EstimatorKind::SNIPS, weighted / weights, obs.size(), inverse_sum};
}

EstimateReport snips_estimate(const ObservationSample& obs, const RatingMatrix& pred,
                              const PropensityMatrix& props, LossKind kind) {
  return snips_estimate(obs, LossEvaluator(pred, kind), props);
}

EstimateReport estimate(EstimatorKind estimator, const ObservationSample& obs, const LossEvaluator& loss,
                        const PropensityMatrix& props) {
  switch (estimator) {
    case EstimatorKind::Naive: return naive_estimate(obs, loss);
    case EstimatorKind::IPS: return ips_estimate(obs, loss, props);
    case EstimatorKind::SNIPS: return snips_estimate(obs, loss, props);
  }
  throw InvalidArgument("unknown estimator");
}

ExpectationResult exact_expectation(const RatingMatrix& truth, const RatingMatrix& pred,
                                    const PropensityMatrix& true_props, const PropensityMatrix& eval_props,
                                    LossKind kind, EstimatorKind estimator) {
  require_same_dims(truth, pred);
  require_same_dims(truth, true_props);
  require_same_dims(truth, eval_props);
  const std::size_t n = truth.size();
  if (n > kMaxEnumerationCells) {
    throw InvalidArgument("exact_expectation enumerates 2^(U*I) patterns; U*I = " + std::to_string(n) +
                          " exceeds " + std::to_string(kMaxEnumerationCells));
  }

  const std::vector<double> delta = loss_matrix(truth, pred, kind);
  const auto p = true_props.values();
  const auto q = eval_props.values();
  const auto cells = static_cast<double>(n);

  auto value_of = [&](std::uint32_t mask) {
    double weighted = 0.0;
    double inverse = 0.0;
    double plain = 0.0;
    std::size_t count = 0;
    for (std::size_t c = 0; c < n; ++c) {
      if (mask >> c & 1U) {
        weighted += delta[c] / q[c];
        inverse += 1.0 / q[c];
        plain += delta[c];
        ++count;
      }
    }
    switch (estimator) {
      case EstimatorKind::IPS: return weighted / cells;
      case EstimatorKind::SNIPS: return weighted / inverse;
      case EstimatorKind::Naive: return plain / static_cast<double>(count);
    }
    return 0.0;
  };
  auto probability_of = [&](std::uint32_t mask) {
    double prob = 1.0;
    for (std::size_t c = 0; c < n; ++c) prob *= (mask >> c & 1U) ? p[c] : 1.0 - p[c];
    return prob;
  };

  const std::uint32_t patterns = 1U << n;
  const bool conditional = estimator != EstimatorKind::IPS;
  const double empty_probability = probability_of(0);
  const std::uint32_t first = conditional ? 1U : 0U;

  double mass = 0.0;
  double mean = 0.0;
  for (std::uint32_t mask = first; mask < patterns; ++mask) {
    const double prob = probability_of(mask);
    if (prob == 0.0) continue;
    mass += prob;
    mean += prob * value_of(mask);
  }
  if (conditional) {
    if (!(mass > 0.0)) throw UndefinedEstimate("every non-empty pattern has probability zero");
    mean /= mass;
  }

  double variance = 0.0;
  for (std::uint32_t mask = first; mask < patterns; ++mask) {
    const double prob = probability_of(mask);
    if (prob == 0.0) continue;
    const double d = value_of(mask) - mean;
    variance += prob * d * d;
  }
  if (conditional) variance /= mass;

  return {mean, variance, empty_probability};
}

}  // namespace mnar
