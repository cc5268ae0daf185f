#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "mnar/lbfgs.hpp"
#include "mnar/types.hpp"

namespace mnar {

/// Yhat_{u,i} = v_u . w_i + a_u + b_i + c with rank-d factors.
///
/// Parameters live in one flat vector laid out as
/// [V (U x d, user-major) | W (I x d, item-major) | a (U) | b (I) | c].
class FactorModel {
 public:
  FactorModel(std::size_t users, std::size_t items, std::size_t rank);
  FactorModel(std::size_t users, std::size_t items, std::size_t rank, std::vector<double> params);

  std::size_t users() const noexcept { return users_; }
  std::size_t items() const noexcept { return items_; }
  std::size_t rank() const noexcept { return rank_; }

  std::span<const double> user_factor(std::size_t u) const noexcept { return {params_.data() + u * rank_, rank_}; }
  std::span<double> user_factor(std::size_t u) noexcept { return {params_.data() + u * rank_, rank_}; }
  std::span<const double> item_factor(std::size_t i) const noexcept {
    return {params_.data() + (users_ + i) * rank_, rank_};
  }
  std::span<double> item_factor(std::size_t i) noexcept { return {params_.data() + (users_ + i) * rank_, rank_}; }

  double& user_offset(std::size_t u) noexcept { return params_[offsets_begin() + u]; }
  double user_offset(std::size_t u) const noexcept { return params_[offsets_begin() + u]; }
  double& item_offset(std::size_t i) noexcept { return params_[offsets_begin() + users_ + i]; }
  double item_offset(std::size_t i) const noexcept { return params_[offsets_begin() + users_ + i]; }
  double& global_offset() noexcept { return params_.back(); }
  double global_offset() const noexcept { return params_.back(); }

  /// Number of entries belonging to V and W (the regularized block at the front).
  std::size_t factor_count() const noexcept { return (users_ + items_) * rank_; }
  std::span<const double> params() const noexcept { return params_; }
  std::span<double> params() noexcept { return params_; }

  double predict(std::size_t u, std::size_t i) const noexcept;

  bool operator==(const FactorModel&) const = default;

 private:
  std::size_t offsets_begin() const noexcept { return factor_count(); }

  std::size_t users_;
  std::size_t items_;
  std::size_t rank_;
  std::vector<double> params_;
};

enum class TrainLoss { MSE, MAE };

struct TrainConfig {
  double lambda = 1.0;
  std::size_t rank = 10;
  TrainLoss loss = TrainLoss::MSE;
  std::size_t max_iterations = 500;
  double tolerance = 1e-6;
  std::uint64_t seed = 0;
  /// Standard deviation of the initial factors; defaults to 0.1 / sqrt(rank).
  std::optional<double> init_scale;
  DescentMethod method = DescentMethod::LBFGS;
  std::size_t memory = 10;

  double effective_init_scale() const;
  void validate() const;
};

/// Dense prediction matrix.
RatingMatrix predict(const FactorModel& model);

/// sum_O delta(Y, Yhat)/P + lambda (||V||_F^2 + ||W||_F^2). Offsets are not penalized.
double objective(const FactorModel& model, const ObservationSample& obs, const PropensityMatrix& props,
                 const TrainConfig& config);

/// Exact gradient of objective(); MAE uses sign(r) with sign(0) = 0.
FactorModel gradient(const FactorModel& model, const ObservationSample& obs, const PropensityMatrix& props,
                     const TrainConfig& config);

/// Seeded factors ~ N(0, init_scale^2); c = propensity-weighted mean rating; a = b = 0.
FactorModel initial_model(const ObservationSample& obs, const PropensityMatrix& props, const TrainConfig& config);

struct TrainResult {
  FactorModel model;
  DescentResult descent;
};

/// Minimizes objective() from initial_model(). Throws DivergenceError (carrying the last finite
/// parameter vector) if the objective becomes non-finite.
TrainResult train_detailed(const ObservationSample& obs, const PropensityMatrix& props, const TrainConfig& config);
FactorModel train(const ObservationSample& obs, const PropensityMatrix& props, const TrainConfig& config);

// ---------------------------------------------------------------------------
// Cross-validation over (lambda, rank)

std::vector<double> default_lambda_grid();      ///< 1e-6, 1e-5, ..., 1
std::vector<std::size_t> default_rank_grid();   ///< 5, 10, 20, 40

struct CvCell {
  double lambda;
  std::size_t rank;
  double mean_score;
  std::vector<double> fold_scores;
};

struct CvResult {
  double best_lambda;
  std::size_t best_rank;
  std::vector<CvCell> cells;
  /// Propensity multipliers applied to training folds ((k-1)/k) and the held-out fold (1/k).
  double train_scale;
  double validation_scale;
  /// Model retrained on all observations with unscaled propensities.
  FactorModel model;
};

/// Entry-level seeded k-fold split. Each grid cell trains on k-1 folds and is scored by IPS of the
/// training loss on the held-out fold. Ties go to the smallest lambda, then the smallest rank.
CvResult cross_validate(const ObservationSample& obs, const PropensityMatrix& props,
                        std::span<const double> lambda_grid, std::span<const std::size_t> rank_grid,
                        std::size_t folds, const TrainConfig& base_config);

/// Seeded fold label in [0, k) for each entry; folds differ in size by at most one.
std::vector<std::size_t> assign_folds(std::size_t entries, std::size_t folds, std::uint64_t seed);

}  // namespace mnar
