#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "mnar/types.hpp"

namespace mnar {

/// Constant propensity |O|/(U*I), floored.
PropensityMatrix uniform_propensities(const ObservationSample& obs, double floor = kPropensityFloor);

/// Multiplies every entry by `factor` in (0, 1] and clamps to [floor, 1].
PropensityMatrix scale_for_cv(const PropensityMatrix& props, double factor, double floor = kPropensityFloor);

// ---------------------------------------------------------------------------
// Naive Bayes: P(O=1 | Y=r) = P(Y=r | O=1) P(O=1) / P(Y=r)

struct ClampedPropensity {
  double value;
  bool clamped;  ///< raw plug-in value exceeded 1 (or fell below the floor)
};

class NaiveBayesPropensityModel {
 public:
  /// Builds a model from explicit distributions indexed by scale level (r - scale.min).
  NaiveBayesPropensityModel(RatingScale scale, std::vector<double> cond_rating_dist, double reveal_rate,
                            std::vector<double> marginal_rating_dist, double laplace_alpha = 0.0,
                            double floor = kPropensityFloor);

  const RatingScale& scale() const noexcept { return scale_; }
  std::span<const double> cond_rating_dist() const noexcept { return cond_; }
  std::span<const double> marginal_rating_dist() const noexcept { return marginal_; }
  double reveal_rate() const noexcept { return reveal_rate_; }
  double laplace_alpha() const noexcept { return laplace_alpha_; }
  double floor() const noexcept { return floor_; }

 private:
  RatingScale scale_;
  std::vector<double> cond_;
  double reveal_rate_;
  std::vector<double> marginal_;
  double laplace_alpha_;
  double floor_;
};

inline constexpr double kDefaultLaplaceAlpha = 1.0;

/// Counts revealed MNAR ratings for P(Y=r|O=1) and an MCAR sample for P(Y=r), each with
/// `laplace_alpha` pseudo-counts per level. P(O=1) = |O|/(U*I).
NaiveBayesPropensityModel fit_naive_bayes(const ObservationSample& mnar_obs, std::span<const double> mcar_ratings,
                                          double laplace_alpha = kDefaultLaplaceAlpha, RatingScale scale = {},
                                          double floor = kPropensityFloor);

ClampedPropensity nb_propensity_checked(const NaiveBayesPropensityModel& model, int rating);
double nb_propensity(const NaiveBayesPropensityModel& model, int rating);

struct ImputedPropensities {
  PropensityMatrix matrix;
  /// Row-major; true where the cell was not observed and holds P(O=1) instead of a model value.
  std::vector<bool> imputed;
  std::size_t clamped_count = 0;
};

/// Model propensity at each observed entry; unobserved cells are filled with P(O=1).
ImputedPropensities nb_propensity_matrix(const NaiveBayesPropensityModel& model, const ObservationSample& obs);

// ---------------------------------------------------------------------------
// Logistic regression: P(O=1) = sigmoid(w . x_{u,i} + beta_i + gamma_u)

/// One feature vector per cell, row-major by (user, item).
class PairFeatures {
 public:
  PairFeatures(std::size_t rows, std::size_t cols, std::size_t dim, std::vector<double> values);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t dim() const noexcept { return dim_; }
  std::span<const double> at(std::size_t u, std::size_t i) const noexcept {
    return {values_.data() + (u * cols_ + i) * dim_, dim_};
  }

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::size_t dim_;
  std::vector<double> values_;
};

struct LogisticConfig {
  double regularization = 1.0;
  /// Penalize user/item offsets as well as w.
  bool penalize_offsets = false;
  std::size_t max_iterations = 500;
  double gradient_tolerance = 1e-6;
  double floor = kPropensityFloor;
};

class LogisticPropensityModel {
 public:
  LogisticPropensityModel(std::vector<double> weights, std::vector<double> item_offsets,
                          std::vector<double> user_offsets, double regularization, double floor = kPropensityFloor);

  std::span<const double> weights() const noexcept { return weights_; }
  std::span<const double> item_offsets() const noexcept { return item_offsets_; }
  std::span<const double> user_offsets() const noexcept { return user_offsets_; }
  double regularization() const noexcept { return regularization_; }
  double floor() const noexcept { return floor_; }

 private:
  std::vector<double> weights_;
  std::vector<double> item_offsets_;
  std::vector<double> user_offsets_;
  double regularization_;
  double floor_;
};

/// Parameter layout used by the logistic objective: [w (dim) | beta (I) | gamma (U)].
struct LogisticProblem {
  const ObservationSample& reveals;
  const PairFeatures& features;
  LogisticConfig config;

  std::size_t parameter_count() const noexcept {
    return features.dim() + features.cols() + features.rows();
  }
  /// Negative penalized log-likelihood over all U*I cells (unobserved cells are label 0).
  /// Writes the gradient into `grad` when it is non-empty.
  double negative_objective(std::span<const double> params, std::span<double> grad) const;
};

struct LogisticFit {
  LogisticPropensityModel model;
  /// Penalized log-likelihood at the fitted parameters.
  double log_likelihood;
  std::size_t iterations;
  bool converged;
};

/// Maximizes the L2-penalized Bernoulli log-likelihood from all-zero initialization.
LogisticFit fit_logistic(const ObservationSample& reveals, const PairFeatures& features,
                                     const LogisticConfig& config = {});

/// sigmoid(w . x + beta_i + gamma_u), floored.
double lr_propensity(const LogisticPropensityModel& model, std::span<const double> pair_feature, std::size_t u,
                     std::size_t i);

PropensityMatrix lr_propensity_matrix(const LogisticPropensityModel& model, const PairFeatures& features);

}  // namespace mnar
