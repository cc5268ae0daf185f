#include "mnar/bounds.hpp"

#include <cmath>
#include <string>

#include "mnar/errors.hpp"

namespace mnar {

void BoundInputs::validate() const {
  if (!(delta_max >= 0.0) || !std::isfinite(delta_max)) throw InvalidArgument("loss range must be finite and >= 0");
  if (!(eta > 0.0 && eta < 1.0)) throw InvalidArgument("eta must lie in (0, 1)");
  if (hypothesis_count < 1) throw InvalidArgument("hypothesis count must be >= 1");
}

double ips_tail_bound(const RatingMatrix& truth, const RatingMatrix& pred, const PropensityMatrix& props,
                      LossKind kind, double eta) {
  require_same_dims(truth, props);
  if (!(eta > 0.0 && eta < 1.0)) throw InvalidArgument("eta must lie in (0, 1)");
  const auto delta = loss_matrix(truth, pred, kind);
  const auto p = props.values();
  double rho_sq = 0.0;
  for (std::size_t c = 0; c < delta.size(); ++c) {
    if (p[c] < 1.0) {
      const double rho = delta[c] / p[c];
      rho_sq += rho * rho;
    }
  }
  const auto cells = static_cast<double>(delta.size());
  return std::sqrt(std::log(2.0 / eta) / 2.0 * rho_sq) / cells;
}

namespace {

double inverse_square_sum(const PropensityMatrix& props) {
  double sum = 0.0;
  for (double p : props.values()) sum += 1.0 / (p * p);
  return sum;
}

double variance_term(const BoundInputs& inputs, const PropensityMatrix& props) {
  const auto cells = static_cast<double>(props.size());
  const double log_term = std::log(2.0 * static_cast<double>(inputs.hypothesis_count) / inputs.eta) / 2.0;
  return inputs.delta_max / cells * std::sqrt(log_term) * std::sqrt(inverse_square_sum(props));
}

}  // namespace

double erm_bound(double ips_value, const BoundInputs& inputs, const PropensityMatrix& props) {
  inputs.validate();
  return ips_value + variance_term(inputs, props);
}

double ips_bias(const RatingMatrix& truth, const RatingMatrix& pred, const PropensityMatrix& true_props,
                const PropensityMatrix& est_props, LossKind kind) {
  require_same_dims(truth, true_props);
  require_same_dims(truth, est_props);
  const auto delta = loss_matrix(truth, pred, kind);
  const auto p = true_props.values();
  const auto q = est_props.values();
  const auto cells = static_cast<double>(delta.size());
  double bias = 0.0;
  for (std::size_t c = 0; c < delta.size(); ++c) bias += delta[c] / cells * (1.0 - p[c] / q[c]);
  return bias;
}

double erm_bound_inaccurate(double ips_value, const BoundInputs& inputs, const PropensityMatrix& true_props,
                            const PropensityMatrix& est_props) {
  inputs.validate();
  if (true_props.rows() != est_props.rows() || true_props.cols() != est_props.cols())
    throw InvalidArgument("propensity matrices differ in dimensions");
  const auto p = true_props.values();
  const auto q = est_props.values();
  double mismatch = 0.0;
  for (std::size_t c = 0; c < p.size(); ++c) mismatch += std::abs(1.0 - p[c] / q[c]);
  const auto cells = static_cast<double>(p.size());
  return ips_value + inputs.delta_max / cells * mismatch + variance_term(inputs, est_props);
}

}  // namespace mnar
