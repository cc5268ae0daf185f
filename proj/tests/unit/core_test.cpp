#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "mnar/errors.hpp"
#include "mnar/loss.hpp"
#include "mnar/types.hpp"
#include "oracle.hpp"

using namespace mnar;

TEST(RatingMatrix, RejectsEmptyAndMismatchedShapes) {
  EXPECT_THROW(RatingMatrix(0, 3), InvalidArgument);
  EXPECT_THROW(RatingMatrix(2, 2, std::vector<double>{1, 2, 3}), InvalidArgument);
  const RatingMatrix m(2, 3, std::vector<double>{1, 2, 3, 4, 5, 1});
  EXPECT_EQ(m(1, 0), 4.0);
  EXPECT_THROW((void)m.at(2, 0), InvalidArgument);
  EXPECT_THROW((void)m.at(0, 3), InvalidArgument);
}

TEST(RatingMatrix, ScaleCheck) {
  RatingMatrix m(1, 3, std::vector<double>{1, 5, 3});
  EXPECT_NO_THROW(m.require_on_scale({}));
  m(0, 2) = 3.5;
  EXPECT_THROW(m.require_on_scale({}), InvalidArgument);
  m(0, 2) = 6;
  EXPECT_THROW(m.require_on_scale({}), InvalidArgument);
}

TEST(RatingScale, SnapRoundsAndClamps) {
  const RatingScale s;
  EXPECT_EQ(s.snap(2.4), 2);
  EXPECT_EQ(s.snap(2.6), 3);
  EXPECT_EQ(s.snap(-3.0), 1);
  EXPECT_EQ(s.snap(9.0), 5);
  EXPECT_EQ(s.snap(std::nan("")), 1);
}

TEST(ObservationSample, ValidatesIndicesAndDuplicates) {
  EXPECT_THROW(ObservationSample(2, 2, {{2, 0, 1}}), InvalidArgument);
  EXPECT_THROW(ObservationSample(2, 2, {{0, 1, 1}, {0, 1, 3}}), InvalidArgument);
  const ObservationSample obs(2, 2, {{0, 1, 4}, {1, 0, 2}});
  EXPECT_EQ(obs.size(), 2u);
  EXPECT_EQ(obs.cells(), 4u);
  const std::vector<std::size_t> pick = {1};
  EXPECT_EQ(obs.subset(pick)[0], (Rating{1, 0, 2}));
}

TEST(ObservationSample, ConsistencyWithTruth) {
  const RatingMatrix truth(2, 2, std::vector<double>{1, 4, 2, 5});
  EXPECT_NO_THROW(ObservationSample(2, 2, {{0, 1, 4}}).require_consistent_with(truth));
  EXPECT_THROW(ObservationSample(2, 2, {{0, 1, 3}}).require_consistent_with(truth), InvalidArgument);
}

TEST(PropensityMatrix, EntriesMustBeInUnitInterval) {
  EXPECT_THROW(PropensityMatrix(1, 2, std::vector<double>{0.5, 0.0}), InvalidArgument);
  EXPECT_THROW(PropensityMatrix(1, 2, std::vector<double>{0.5, 1.5}), InvalidArgument);
  EXPECT_THROW(PropensityMatrix(1, 1, std::nan("")), InvalidArgument);
  EXPECT_NO_THROW(PropensityMatrix(1, 2, std::vector<double>{1e-6, 1.0}));
}

TEST(PointwiseLoss, Examples) {
  const RatingMatrix y(1, 1, 3.0);
  const RatingMatrix one(1, 1, 1.0);
  EXPECT_EQ(pointwise_loss(0, 0, y, one, LossKind::mae()), 2.0);
  EXPECT_EQ(pointwise_loss(0, 0, y, one, LossKind::mse()), 4.0);
  EXPECT_EQ(pointwise_loss(0, 0, y, y, LossKind::accuracy()), 1.0);
}

TEST(PointwiseLoss, AccuracyRoundsPrediction) {
  const RatingMatrix y(1, 3, std::vector<double>{3, 5, 1});
  const RatingMatrix p(1, 3, std::vector<double>{3.4, 5.7, 1.6});
  EXPECT_EQ(pointwise_loss(0, 0, y, p, LossKind::accuracy()), 1.0);
  EXPECT_EQ(pointwise_loss(0, 1, y, p, LossKind::accuracy()), 1.0);
  EXPECT_EQ(pointwise_loss(0, 2, y, p, LossKind::accuracy()), 0.0);
}

TEST(PointwiseLoss, Errors) {
  const RatingMatrix y(1, 2, 3.0);
  EXPECT_THROW(pointwise_loss(0, 2, y, y, LossKind::mae()), InvalidArgument);
  EXPECT_THROW(pointwise_loss(0, 0, y, y, LossKind::dcg()), InvalidArgument);
  EXPECT_THROW(pointwise_loss(0, 0, y, RatingMatrix(1, 3), LossKind::mae()), InvalidArgument);
}

TEST(RankingLoss, PrecisionExamples) {
  // Ranking of user 0: item 2, item 0, item 3, item 1.
  const RatingMatrix pred(1, 4, std::vector<double>{3.0, 1.0, 4.0, 2.0});
  const RatingMatrix y(1, 4, std::vector<double>{2, 1, 5, 4});
  EXPECT_EQ(ranking_loss(0, 2, y, pred, LossKind::prec_at(2)), 10.0);
  EXPECT_EQ(ranking_loss(0, 3, y, pred, LossKind::prec_at(2)), 0.0);
  EXPECT_EQ(ranking_loss(0, 0, y, pred, LossKind::prec_at(2)), 4.0);
}

TEST(RankingLoss, DcgExamples) {
  const RatingMatrix pred(1, 4, std::vector<double>{3.0, 1.0, 4.0, 2.0});
  const RatingMatrix y(1, 4, std::vector<double>{2, 1, 5, 4});
  EXPECT_EQ(ranking_loss(0, 2, y, pred, LossKind::dcg()), 20.0);
  EXPECT_DOUBLE_EQ(ranking_loss(0, 3, y, pred, LossKind::dcg()), 4.0 / std::log2(4.0) * 4.0);
  EXPECT_DOUBLE_EQ(ranking_loss(0, 0, y, pred, LossKind::dcg_at(2)), 4.0 / std::log2(3.0) * 2.0);
  EXPECT_EQ(ranking_loss(0, 3, y, pred, LossKind::dcg_at(2)), 0.0);
}

TEST(RankingLoss, CumulativeGain) {
  const RatingMatrix rec(2, 4, std::vector<double>{1, 0, 1, 0, 0, 1, 0, 1});
  const RatingMatrix y(2, 4, std::vector<double>{5, 3, 2, 1, 4, 4, 4, 2});
  EXPECT_EQ(ranking_loss(0, 0, y, rec, LossKind::cg(2)), 10.0);
  EXPECT_EQ(ranking_loss(0, 1, y, rec, LossKind::cg(2)), 0.0);
  EXPECT_EQ(ranking_loss(1, 3, y, rec, LossKind::cg(2)), 4.0);
}

TEST(RankingLoss, CumulativeGainRejectsWrongBudget) {
  const RatingMatrix rec(1, 4, std::vector<double>{1, 1, 1, 0});
  const RatingMatrix y(1, 4, 3.0);
  EXPECT_THROW(ranking_loss(0, 0, y, rec, LossKind::cg(2)), InvalidArgument);
  const RatingMatrix fractional(1, 4, std::vector<double>{1, 0.5, 0, 0});
  EXPECT_THROW(ranking_loss(0, 0, y, fractional, LossKind::cg(1)), InvalidArgument);
}

TEST(RankingLoss, CutoffOutOfRange) {
  const RatingMatrix y(1, 4, 3.0);
  EXPECT_THROW(ranking_loss(0, 0, y, y, LossKind::prec_at(5)), InvalidArgument);
  EXPECT_THROW(ranking_loss(0, 0, y, y, LossKind::dcg_at(0)), InvalidArgument);
}

TEST(Ranks, TiesBrokenByItemIndex) {
  const RatingMatrix pred(1, 5, std::vector<double>{2, 3, 2, 3, 1});
  EXPECT_EQ(rank_rows(pred), (std::vector<std::size_t>{3, 1, 4, 2, 5}));
}

TEST(Ranks, EachRowIsAPermutation) {
  std::mt19937_64 gen(7);
  std::uniform_int_distribution<int> coarse(0, 3);
  std::vector<double> v(6 * 17);
  for (double& x : v) x = coarse(gen);
  const RatingMatrix pred(6, 17, v);
  const auto ranks = rank_rows(pred);
  for (std::size_t u = 0; u < 6; ++u) {
    std::vector<std::size_t> row(ranks.begin() + static_cast<long>(u * 17), ranks.begin() + static_cast<long>(u * 17 + 17));
    for (std::size_t i = 0; i < 17; ++i) EXPECT_EQ(row[i], oracle::rank_of(pred, u, i));
    std::sort(row.begin(), row.end());
    std::vector<std::size_t> expected(17);
    std::iota(expected.begin(), expected.end(), std::size_t{1});
    EXPECT_EQ(row, expected);
  }
}

TEST(TrueRisk, Examples) {
  const RatingMatrix y(2, 2, std::vector<double>{1, 5, 3, 3});
  const RatingMatrix p(2, 2, std::vector<double>{2, 5, 3, 1});
  EXPECT_EQ(true_risk(y, p, LossKind::mae()), 0.75);
  EXPECT_EQ(true_risk(y, y, LossKind::mse()), 0.0);
  EXPECT_THROW(true_risk(y, RatingMatrix(2, 3), LossKind::mae()), InvalidArgument);
}

TEST(TrueRisk, MatchesOracle) {
  std::mt19937_64 gen(11);
  for (int t = 0; t < 10; ++t) {
    const auto inst = oracle::random_instance(gen, 4, 6);
    EXPECT_NEAR(true_risk(inst.truth, inst.pred, LossKind::mae()),
                oracle::risk(oracle::Loss::MAE, inst.truth, inst.pred), 1e-12);
    EXPECT_NEAR(true_risk(inst.truth, inst.pred, LossKind::mse()),
                oracle::risk(oracle::Loss::MSE, inst.truth, inst.pred), 1e-12);
    EXPECT_NEAR(true_risk(inst.truth, inst.pred, LossKind::prec_at(1)),
                oracle::risk(oracle::Loss::PrecAt1, inst.truth, inst.pred), 1e-12);
  }
}

TEST(TrueRisk, InvariantUnderJointPermutation) {
  std::mt19937_64 gen(3);
  const auto inst = oracle::random_instance(gen, 5, 7);
  std::vector<std::size_t> rows(5), cols(7);
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  std::iota(cols.begin(), cols.end(), std::size_t{0});
  std::shuffle(rows.begin(), rows.end(), gen);
  std::shuffle(cols.begin(), cols.end(), gen);
  RatingMatrix y(5, 7), p(5, 7);
  for (std::size_t u = 0; u < 5; ++u)
    for (std::size_t i = 0; i < 7; ++i) {
      y(u, i) = inst.truth(rows[u], cols[i]);
      p(u, i) = inst.pred(rows[u], cols[i]);
    }
  for (const LossKind k : {LossKind::mae(), LossKind::mse(), LossKind::accuracy()}) {
    EXPECT_NEAR(true_risk(y, p, k), true_risk(inst.truth, inst.pred, k), 1e-12);
  }
}

TEST(TrueRisk, RankingLossesBounded) {
  std::mt19937_64 gen(5);
  const auto inst = oracle::random_instance(gen, 3, 8);
  for (const auto& d : loss_matrix(inst.truth, inst.pred, LossKind::prec_at(3))) {
    EXPECT_GE(d, 0.0);
    EXPECT_LE(d, 8.0 / 3.0 * 5.0);
  }
  for (const auto& d : loss_matrix(inst.truth, inst.pred, LossKind::accuracy())) EXPECT_TRUE(d == 0.0 || d == 1.0);
}

TEST(LossKind, ParseAndName) {
  EXPECT_EQ(LossKind::parse("mae"), LossKind::mae());
  EXPECT_EQ(LossKind::parse("MSE"), LossKind::mse());
  EXPECT_EQ(LossKind::parse("acc"), LossKind::accuracy());
  EXPECT_EQ(LossKind::parse("DCG@50"), LossKind::dcg_at(50));
  EXPECT_EQ(LossKind::parse("prec@5"), LossKind::prec_at(5));
  EXPECT_EQ(LossKind::parse("CG@3"), LossKind::cg(3));
  EXPECT_EQ(LossKind::parse("DCG"), LossKind::dcg());
  EXPECT_EQ(LossKind::dcg_at(50).name(), "DCG@50");
  EXPECT_THROW(LossKind::parse("RMSE"), InvalidArgument);
  EXPECT_THROW(LossKind::parse("DCG@x"), InvalidArgument);
  EXPECT_THROW(LossKind::parse("PREC@"), InvalidArgument);
}
