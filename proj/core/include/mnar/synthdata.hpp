#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mnar/factorization.hpp"
#include "mnar/types.hpp"

namespace mnar {

/// Probabilities of ratings 1..5.
class MarginalDistribution {
 public:
  explicit MarginalDistribution(std::array<double, 5> p);

  double operator[](int rating) const noexcept { return p_[static_cast<std::size_t>(rating - 1)]; }
  const std::array<double, 5>& probabilities() const noexcept { return p_; }

 private:
  std::array<double, 5> p_;
};

/// (0.5263, 0.2425, 0.1458, 0.0572, 0.0282): reproduces the reference true-MAE values of the
/// deterministic predictors through closed_form_true_mae().
MarginalDistribution default_marginal();

struct CompletionConfig {
  TrainConfig mf = [] {
    TrainConfig c;
    c.rank = 20;
    c.lambda = 1.0;
    return c;
  }();
};

/// Completes `partial` with unweighted MF, then assigns ratings by value quantile: the lowest
/// floor(p1*U*I) cells get 1, the next floor(p2*U*I) get 2, and so on; 5 takes the remainder.
/// Ties are broken by (u, i).
RatingMatrix complete_and_adjust(const ObservationSample& partial, const MarginalDistribution& marginal,
                                 const CompletionConfig& config = {});

/// Quantile assignment step of complete_and_adjust on an arbitrary score matrix.
RatingMatrix adjust_to_marginal(const RatingMatrix& scores, const MarginalDistribution& marginal);

/// Picks the completion lambda on a seeded 90/10 split of `partial`, maximizing the 0/1 accuracy
/// of rounded predictions on the 10% part. Ties go to the smaller lambda.
double select_completion_lambda(const ObservationSample& partial, std::span<const double> lambda_grid,
                                const CompletionConfig& config, std::uint64_t seed);

struct ObservationModelConfig {
  double alpha = 0.25;
  double target_fraction = 0.05;
};

struct ObservationModel {
  PropensityMatrix propensities;
  /// Solved scale k: propensity k for ratings >= 4, k * alpha^(4-r) below.
  double scale;
};

/// Throws Infeasible if the solved k exceeds 1.
ObservationModel observation_propensities(const RatingMatrix& truth, const ObservationModelConfig& config);

/// Independent Bernoulli reveal per cell. Cell (u, i) consumes counter u*I + i of the stream
/// `seed`, so the output does not depend on traversal order.
ObservationSample sample_observations(const RatingMatrix& truth, const PropensityMatrix& props, std::uint64_t seed);

enum class PredictorKind { RecOnes, RecFours, Rotate, Skewed, Coarsened };

inline constexpr std::array<PredictorKind, 5> kAllPredictors = {
    PredictorKind::RecOnes, PredictorKind::RecFours, PredictorKind::Rotate, PredictorKind::Skewed,
    PredictorKind::Coarsened};

std::string to_string(PredictorKind kind);
PredictorKind parse_predictor(const std::string& text);

/// The five reference prediction matrices. REC_ONES / REC_FOURS flip |{Y=5}| seeded-uniform
/// cells rated 1 (resp. 4) to 5; SKEWED draws N(Y, ((6-Y)/2)^2) clipped to [0, 6].
RatingMatrix make_predictor(PredictorKind kind, const RatingMatrix& truth, std::uint64_t seed);

/// 4p5, p5, 1+3p1, 2p1+p2+p5 for REC_ONES, REC_FOURS, ROTATE, COARSENED. SKEWED is rejected.
double closed_form_true_mae(PredictorKind kind, const MarginalDistribution& marginal);

/// Stand-in for a real MNAR ratings log at desk scale: a noisy low-rank score matrix quantized
/// to the default marginal and revealed through the alpha observation model at `density`.
struct SourceConfig {
  std::size_t users = 200;
  std::size_t items = 300;
  std::size_t rank = 5;
  double density = 0.06;
  double noise = 0.3;
  double alpha = 0.25;
};

ObservationSample make_source_ratings(const SourceConfig& config, std::uint64_t seed);

}  // namespace mnar
