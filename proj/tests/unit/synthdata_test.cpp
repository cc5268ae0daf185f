#include <gtest/gtest.h>

#include <array>
#include <cmath>
#include <random>

#include "mnar/errors.hpp"
#include "mnar/estimators.hpp"
#include "mnar/loss.hpp"
#include "mnar/synthdata.hpp"

using namespace mnar;

namespace {

RatingMatrix random_truth(std::uint64_t seed, std::size_t rows, std::size_t cols) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> scores(rows * cols);
  for (double& s : scores) s = unit(gen);
  return adjust_to_marginal(RatingMatrix(rows, cols, scores), default_marginal());
}

std::array<std::size_t, 5> rating_counts(const RatingMatrix& m) {
  std::array<std::size_t, 5> counts{};
  for (double v : m.values()) ++counts[static_cast<std::size_t>(v) - 1];
  return counts;
}

}  // namespace

TEST(Marginal, Validation) {
  EXPECT_THROW(MarginalDistribution({0.5, 0.5, 0.5, 0.0, 0.0}), InvalidArgument);
  EXPECT_THROW(MarginalDistribution({-0.1, 0.5, 0.6, 0.0, 0.0}), InvalidArgument);
  EXPECT_EQ(default_marginal()[1], 0.5263);
  EXPECT_EQ(default_marginal()[5], 0.0282);
}

TEST(AdjustToMarginal, CountsFollowFloorRule) {
  const RatingMatrix m = random_truth(1, 10, 10);
  EXPECT_EQ(rating_counts(m), (std::array<std::size_t, 5>{52, 24, 14, 5, 5}));
  const RatingMatrix big = random_truth(2, 200, 300);
  EXPECT_EQ(rating_counts(big), (std::array<std::size_t, 5>{31578, 14550, 8748, 3432, 1692}));
}

TEST(AdjustToMarginal, MonotoneInScore) {
  std::mt19937_64 gen(3);
  std::normal_distribution<double> z;
  std::vector<double> scores(40 * 30);
  for (double& s : scores) s = z(gen);
  const RatingMatrix m = adjust_to_marginal(RatingMatrix(40, 30, scores), default_marginal());
  for (std::size_t a = 0; a < scores.size(); ++a)
    for (std::size_t b = 0; b < scores.size(); b += 7)
      if (scores[a] < scores[b]) EXPECT_LE(m.values()[a], m.values()[b]);
}

TEST(AdjustToMarginal, TiesBrokenByPosition) {
  const MarginalDistribution half({0.5, 0.0, 0.0, 0.0, 0.5});
  const RatingMatrix m = adjust_to_marginal(RatingMatrix(2, 2, 7.0), half);
  EXPECT_EQ(std::vector<double>(m.values().begin(), m.values().end()), (std::vector<double>{1, 1, 5, 5}));
}

TEST(ObservationModel, SolvesForTargetFraction) {
  const RatingMatrix truth = random_truth(4, 50, 60);
  const auto model = observation_propensities(truth, {0.25, 0.05});
  double mean = 0.0;
  for (double p : model.propensities.values()) mean += p;
  mean /= static_cast<double>(truth.size());
  EXPECT_NEAR(mean, 0.05, 1e-12);
  for (std::size_t u = 0; u < 50; ++u)
    for (std::size_t i = 0; i < 60; ++i) {
      const double y = truth(u, i);
      const double expected = y >= 4 ? model.scale : model.scale * std::pow(0.25, 4 - y);
      EXPECT_NEAR(model.propensities(u, i), expected, 1e-15);
    }
}

TEST(ObservationModel, AlphaOneIsMcar) {
  const RatingMatrix truth = random_truth(5, 10, 10);
  const auto model = observation_propensities(truth, {1.0, 0.05});
  for (double p : model.propensities.values()) EXPECT_NEAR(p, 0.05, 1e-15);
}

TEST(ObservationModel, InfeasibleAndInvalid) {
  const RatingMatrix truth = random_truth(6, 10, 10);
  EXPECT_THROW(observation_propensities(truth, {0.01, 0.5}), Infeasible);
  EXPECT_THROW(observation_propensities(truth, {0.0, 0.05}), InvalidArgument);
  EXPECT_THROW(observation_propensities(truth, {1.5, 0.05}), InvalidArgument);
  EXPECT_THROW(observation_propensities(truth, {0.5, 0.0}), InvalidArgument);
  EXPECT_THROW(observation_propensities(RatingMatrix(2, 2, 0.5), {0.5, 0.05}), InvalidArgument);
}

TEST(SampleObservations, DeterministicAndRespectsPropensities) {
  const RatingMatrix truth = random_truth(7, 100, 100);
  const PropensityMatrix props(100, 100, 0.3);
  const auto a = sample_observations(truth, props, 11);
  EXPECT_EQ(a, sample_observations(truth, props, 11));
  EXPECT_NE(a, sample_observations(truth, props, 12));
  EXPECT_NEAR(static_cast<double>(a.size()), 3000.0, 4.0 * std::sqrt(10000 * 0.3 * 0.7));
  a.require_consistent_with(truth);
  EXPECT_EQ(sample_observations(truth, PropensityMatrix(100, 100, 1.0), 3).size(), 10000u);
}

TEST(SampleObservations, CellDrawDependsOnlyOnPosition) {
  // Raising one cell's propensity never changes any other cell's reveal.
  const RatingMatrix truth = random_truth(8, 20, 20);
  std::vector<double> p(400, 0.4);
  const auto base = sample_observations(truth, PropensityMatrix(20, 20, p), 5);
  p[123] = 1.0;
  const auto raised = sample_observations(truth, PropensityMatrix(20, 20, p), 5);
  std::size_t differing = 0;
  std::vector<bool> in_base(400, false), in_raised(400, false);
  for (const Rating& r : base.entries()) in_base[r.user * 20 + r.item] = true;
  for (const Rating& r : raised.entries()) in_raised[r.user * 20 + r.item] = true;
  for (std::size_t c = 0; c < 400; ++c)
    if (in_base[c] != in_raised[c]) ++differing;
  EXPECT_LE(differing, 1u);
  EXPECT_TRUE(in_raised[123]);
}

TEST(Predictors, ClosedFormTrueMae) {
  // Every p_r * U * I is an integer here, so the floor rule reproduces the marginal exactly.
  const RatingMatrix truth = random_truth(9, 100, 100);
  const double tolerance = 5.0 / static_cast<double>(truth.size()) + 1e-9;
  for (const PredictorKind kind :
       {PredictorKind::RecOnes, PredictorKind::RecFours, PredictorKind::Rotate, PredictorKind::Coarsened}) {
    const RatingMatrix pred = make_predictor(kind, truth, 3);
    EXPECT_NEAR(true_risk(truth, pred, LossKind::mae()), closed_form_true_mae(kind, default_marginal()), tolerance)
        << to_string(kind);
  }
  EXPECT_THROW(closed_form_true_mae(PredictorKind::Skewed, default_marginal()), InvalidArgument);
}

TEST(Predictors, FloorRuleExcessGoesToRatingFive) {
  // 60 x 50: the four floors drop 0.9 + 0.5 + 0.4 + 0.6 cells, all of which land on rating 5.
  const RatingMatrix truth = random_truth(9, 60, 50);
  const auto counts = rating_counts(truth);
  EXPECT_EQ(counts[4], 87u);
  const double n = static_cast<double>(truth.size());
  const RatingMatrix ones = make_predictor(PredictorKind::RecOnes, truth, 3);
  EXPECT_NEAR(true_risk(truth, ones, LossKind::mae()), 4.0 * 87.0 / n, 1e-12);
  EXPECT_NEAR(true_risk(truth, ones, LossKind::mae()) - closed_form_true_mae(PredictorKind::RecOnes, default_marginal()),
              4.0 * (87.0 - 0.0282 * n) / n, 1e-12);
}

TEST(Predictors, ClosedFormValues) {
  const auto& p = default_marginal();
  EXPECT_NEAR(closed_form_true_mae(PredictorKind::RecOnes, p), 0.1128, 1e-12);
  EXPECT_NEAR(closed_form_true_mae(PredictorKind::RecFours, p), 0.0282, 1e-12);
  EXPECT_NEAR(closed_form_true_mae(PredictorKind::Rotate, p), 2.5789, 1e-12);
  EXPECT_NEAR(closed_form_true_mae(PredictorKind::Coarsened, p), 1.3233, 1e-12);
}

TEST(Predictors, RecOnesFlipsExactlyTheFiveCount) {
  const RatingMatrix truth = random_truth(10, 30, 40);
  const auto before = rating_counts(truth);
  const RatingMatrix ones = make_predictor(PredictorKind::RecOnes, truth, 4);
  const auto after = rating_counts(ones);
  EXPECT_EQ(after[0], before[0] - before[4]);
  EXPECT_EQ(after[4], 2 * before[4]);
  for (std::size_t c = 0; c < truth.size(); ++c)
    if (truth.values()[c] != ones.values()[c]) {
      EXPECT_EQ(truth.values()[c], 1.0);
      EXPECT_EQ(ones.values()[c], 5.0);
    }
  EXPECT_EQ(ones, make_predictor(PredictorKind::RecOnes, truth, 4));
  EXPECT_NE(ones, make_predictor(PredictorKind::RecOnes, truth, 5));
}

TEST(Predictors, RecFoursNeedsEnoughFours) {
  const RatingMatrix truth(1, 3, std::vector<double>{5, 5, 4});
  EXPECT_THROW(make_predictor(PredictorKind::RecFours, truth, 1), InvalidArgument);
}

TEST(Predictors, RotateAndCoarsenedMaps) {
  const RatingMatrix truth(1, 5, std::vector<double>{1, 2, 3, 4, 5});
  const RatingMatrix rotate = make_predictor(PredictorKind::Rotate, truth, 0);
  const RatingMatrix coarse = make_predictor(PredictorKind::Coarsened, truth, 0);
  EXPECT_EQ(std::vector<double>(rotate.values().begin(), rotate.values().end()), (std::vector<double>{5, 1, 2, 3, 4}));
  EXPECT_EQ(std::vector<double>(coarse.values().begin(), coarse.values().end()), (std::vector<double>{3, 3, 3, 4, 4}));
}

TEST(Predictors, SkewedIsClippedAndCenteredOnTruth) {
  const RatingMatrix truth = random_truth(11, 100, 100);
  const RatingMatrix skewed = make_predictor(PredictorKind::Skewed, truth, 6);
  std::array<double, 5> sum{}, sum_sq{}, count{};
  for (std::size_t c = 0; c < truth.size(); ++c) {
    const double s = skewed.values()[c];
    EXPECT_GE(s, 0.0);
    EXPECT_LE(s, 6.0);
    const auto r = static_cast<std::size_t>(truth.values()[c]) - 1;
    sum[r] += s - truth.values()[c];
    sum_sq[r] += (s - truth.values()[c]) * (s - truth.values()[c]);
    count[r] += 1.0;
  }
  // Ratings of 3 have sigma 1.5 and clipping at 0 and 6 is symmetric, so the shift stays near zero.
  EXPECT_NEAR(sum[2] / count[2], 0.0, 4.0 * 1.5 / std::sqrt(count[2]));
  EXPECT_NEAR(std::sqrt(sum_sq[4] / count[4]), 0.5, 0.05);
  EXPECT_EQ(skewed, make_predictor(PredictorKind::Skewed, truth, 6));
}

TEST(Predictors, NamesRoundTrip) {
  for (const PredictorKind kind : kAllPredictors) EXPECT_EQ(parse_predictor(to_string(kind)), kind);
  EXPECT_EQ(parse_predictor("rec_ones"), PredictorKind::RecOnes);
  EXPECT_THROW(parse_predictor("best"), InvalidArgument);
}

TEST(SourceRatings, ShapeAndDeterminism) {
  SourceConfig config;
  config.users = 40;
  config.items = 50;
  config.alpha = 0.5;
  config.density = 0.1;
  const auto a = make_source_ratings(config, 3);
  EXPECT_EQ(a, make_source_ratings(config, 3));
  EXPECT_NE(a, make_source_ratings(config, 4));
  EXPECT_EQ(a.rows(), 40u);
  EXPECT_NEAR(static_cast<double>(a.size()), 200.0, 4.0 * std::sqrt(200.0));
  config.users = 0;
  EXPECT_THROW(make_source_ratings(config, 3), InvalidArgument);
}

TEST(Completion, PreservesMarginalAndFitsSource) {
  SourceConfig source;
  source.users = 40;
  source.items = 50;
  source.alpha = 0.5;
  source.density = 0.2;
  const auto partial = make_source_ratings(source, 7);
  CompletionConfig config;
  config.mf.rank = 5;
  config.mf.max_iterations = 200;
  const RatingMatrix truth = complete_and_adjust(partial, default_marginal(), config);
  EXPECT_EQ(rating_counts(truth), rating_counts(random_truth(1, 40, 50)));
  EXPECT_THROW(complete_and_adjust(ObservationSample(2, 2), default_marginal(), config), InvalidArgument);

  const std::vector<double> grid = {100.0, 0.1, 10.0};
  const double lambda = select_completion_lambda(partial, grid, config, 5);
  EXPECT_TRUE(lambda == 0.1 || lambda == 10.0 || lambda == 100.0);
  EXPECT_EQ(lambda, select_completion_lambda(partial, grid, config, 5));
  EXPECT_THROW(select_completion_lambda(partial, {}, config, 5), InvalidArgument);
}

TEST(ObservationModel, InducedObservedMarginal) {
  const RatingMatrix truth = random_truth(12, 200, 300);
  const auto model = observation_propensities(truth, {0.25, 0.05});
  const auto obs = sample_observations(truth, model.propensities, 13);
  std::array<double, 5> hist{};
  for (const Rating& r : obs.entries()) hist[static_cast<std::size_t>(r.value) - 1] += 1.0;
  std::array<double, 5> analytic{};
  double mass = 0.0;
  for (int r = 1; r <= 5; ++r) {
    analytic[static_cast<std::size_t>(r - 1)] = default_marginal()[r] * (r >= 4 ? 1.0 : std::pow(0.25, 4 - r));
    mass += analytic[static_cast<std::size_t>(r - 1)];
  }
  const std::array<double, 5> reported = {0.06, 0.10, 0.25, 0.42, 0.17};
  for (std::size_t r = 0; r < 5; ++r) {
    const double empirical = hist[r] / static_cast<double>(obs.size());
    EXPECT_NEAR(empirical, analytic[r] / mass, 0.01) << "rating " << r + 1;
    EXPECT_NEAR(empirical, reported[r], 0.03) << "rating " << r + 1;
  }
}
