#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "mnar/types.hpp"

namespace mnar {

/// Per-entry loss delta_{u,i}(Y, Yhat). Ranking kinds carry a cutoff kappa.
class LossKind {
 public:
  enum class Kind { MAE, MSE, Accuracy, CG, DCG, DCGAtK, PrecAtK };

  static LossKind mae() { return LossKind(Kind::MAE, 0); }
  static LossKind mse() { return LossKind(Kind::MSE, 0); }
  static LossKind accuracy() { return LossKind(Kind::Accuracy, 0); }
  static LossKind cg(std::size_t budget) { return LossKind(Kind::CG, budget); }
  static LossKind dcg() { return LossKind(Kind::DCG, 0); }
  static LossKind dcg_at(std::size_t cutoff) { return LossKind(Kind::DCGAtK, cutoff); }
  static LossKind prec_at(std::size_t cutoff) { return LossKind(Kind::PrecAtK, cutoff); }

  /// Parses "MAE", "MSE", "ACC", "CG@5", "DCG", "DCG@50", "PREC@5" (case-insensitive).
  static LossKind parse(const std::string& text);

  Kind kind() const noexcept { return kind_; }
  std::size_t cutoff() const noexcept { return cutoff_; }
  bool is_pointwise() const noexcept;
  std::string name() const;

  /// Throws InvalidArgument if the cutoff is outside [1, items].
  void validate(std::size_t items) const;

  bool operator==(const LossKind&) const = default;

 private:
  LossKind(Kind kind, std::size_t cutoff) : kind_(kind), cutoff_(cutoff) {}

  Kind kind_;
  std::size_t cutoff_;
};

/// Per-user ranks (1-based) of a prediction matrix: descending value, ties by ascending item.
std::vector<std::size_t> rank_rows(const RatingMatrix& pred);

/// Evaluates delta for a fixed prediction matrix against arbitrary true values.
/// Ranks are computed once, so evaluating many entries is O(1) each.
class LossEvaluator {
 public:
  LossEvaluator(const RatingMatrix& pred, LossKind kind, RatingScale scale = {});

  /// delta_{u,i} when the true rating at (u, i) is `truth`. Indices are not checked.
  double operator()(std::size_t u, std::size_t i, double truth) const noexcept;

  const LossKind& kind() const noexcept { return kind_; }
  std::size_t rows() const noexcept { return pred_.rows(); }
  std::size_t cols() const noexcept { return pred_.cols(); }
  /// 1-based rank of item i for user u (only for ranking kinds).
  std::size_t rank(std::size_t u, std::size_t i) const noexcept { return ranks_[u * pred_.cols() + i]; }

 private:
  RatingMatrix pred_;
  LossKind kind_;
  RatingScale scale_;
  std::vector<std::size_t> ranks_;
};

double pointwise_loss(std::size_t u, std::size_t i, const RatingMatrix& truth, const RatingMatrix& pred,
                      LossKind kind, RatingScale scale = {});

double ranking_loss(std::size_t u, std::size_t i, const RatingMatrix& truth, const RatingMatrix& pred,
                    LossKind kind);

/// All U*I losses, row-major.
std::vector<double> loss_matrix(const RatingMatrix& truth, const RatingMatrix& pred, LossKind kind,
                                RatingScale scale = {});

/// R(Yhat) = (1/(U*I)) * sum over all cells of delta.
double true_risk(const RatingMatrix& truth, const RatingMatrix& pred, LossKind kind, RatingScale scale = {});

}  // namespace mnar
