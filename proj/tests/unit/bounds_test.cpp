#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "mnar/bounds.hpp"
#include "mnar/errors.hpp"
#include "mnar/estimators.hpp"
#include "oracle.hpp"

using namespace mnar;

TEST(TailBound, UnitPropensitiesGiveZero) {
  std::mt19937_64 gen(1);
  const auto inst = oracle::random_instance(gen, 3, 3);
  EXPECT_EQ(ips_tail_bound(inst.truth, inst.pred, PropensityMatrix(3, 3, 1.0), LossKind::mae(), 0.05), 0.0);
}

TEST(TailBound, HandValue) {
  const RatingMatrix y(2, 2, 2.0);
  const RatingMatrix p(2, 2, 1.0);
  const double expected = 0.25 * std::sqrt(std::log(40.0) / 2.0 * 16.0);
  EXPECT_NEAR(ips_tail_bound(y, p, PropensityMatrix(2, 2, 0.5), LossKind::mae(), 0.05), expected, 1e-12);
  EXPECT_NEAR(expected, 1.3581, 1e-4);
}

TEST(TailBound, UniformPropensityScaling) {
  std::mt19937_64 gen(2);
  const auto inst = oracle::random_instance(gen, 5, 6);
  const double p = 0.2;
  const double delta_max = 36.0;  // MSE on ratings in 1..5 against predictions in [0, 6]
  const double bound = ips_tail_bound(inst.truth, inst.pred, PropensityMatrix(5, 6, p), LossKind::mse(), 0.05);
  EXPECT_LE(bound, delta_max * std::sqrt(std::log(2.0 / 0.05) / 2.0) / (p * std::sqrt(30.0)) + 1e-12);
}

TEST(TailBound, MonotoneInPropensityAndLoss) {
  std::mt19937_64 gen(3);
  const auto inst = oracle::random_instance(gen, 3, 4);
  const double base = ips_tail_bound(inst.truth, inst.pred, inst.props, LossKind::mae(), 0.1);
  std::vector<double> raised(inst.props.values().begin(), inst.props.values().end());
  raised[5] = std::min(0.99, raised[5] * 1.1);
  EXPECT_LE(ips_tail_bound(inst.truth, inst.pred, PropensityMatrix(3, 4, raised), LossKind::mae(), 0.1), base);
  RatingMatrix farther = inst.pred;
  farther(1, 1) = inst.truth(1, 1) + std::abs(inst.truth(1, 1) - inst.pred(1, 1)) + 1.0;
  EXPECT_GE(ips_tail_bound(inst.truth, farther, inst.props, LossKind::mae(), 0.1), base);
}

TEST(TailBound, InvalidEta) {
  const RatingMatrix y(1, 1, 1.0);
  EXPECT_THROW(ips_tail_bound(y, y, PropensityMatrix(1, 1, 0.5), LossKind::mae(), 1.0), InvalidArgument);
  EXPECT_THROW(ips_tail_bound(y, y, PropensityMatrix(1, 1, 0.5), LossKind::mae(), 0.0), InvalidArgument);
}

TEST(ErmBound, ZeroRangeReturnsEstimate) {
  const PropensityMatrix p(3, 3, 0.3);
  EXPECT_EQ(erm_bound(0.42, {0.0, 0.05, 10}, p), 0.42);
}

TEST(ErmBound, UniformSimplification) {
  const double p = 0.25, delta = 4.0, eta = 0.05;
  const std::size_t h = 7, cells = 6 * 5;
  const double expected = delta * std::sqrt(std::log(2.0 * h / eta) / (2.0 * cells)) / p;
  EXPECT_NEAR(erm_bound(1.0, {delta, eta, h}, PropensityMatrix(6, 5, p)) - 1.0, expected, 1e-12);
}

TEST(ErmBound, EtaNearOneLeavesLogTwo) {
  const PropensityMatrix p(1, 1, 1.0);
  EXPECT_NEAR(erm_bound(0.0, {1.0, 1.0 - 1e-12, 1}, p), std::sqrt(std::log(2.0) / 2.0), 1e-9);
}

TEST(ErmBound, ValidatesInputs) {
  const PropensityMatrix p(1, 1, 1.0);
  EXPECT_THROW(erm_bound(0.0, {-1.0, 0.05, 1}, p), InvalidArgument);
  EXPECT_THROW(erm_bound(0.0, {1.0, 0.0, 1}, p), InvalidArgument);
  EXPECT_THROW(erm_bound(0.0, {1.0, 0.05, 0}, p), InvalidArgument);
}

TEST(IpsBias, ZeroForCorrectPropensities) {
  std::mt19937_64 gen(4);
  const auto inst = oracle::random_instance(gen, 3, 3);
  for (const LossKind k : {LossKind::mae(), LossKind::mse(), LossKind::dcg(), LossKind::accuracy()}) {
    EXPECT_EQ(ips_bias(inst.truth, inst.pred, inst.props, inst.props, k), 0.0);
  }
}

TEST(IpsBias, HandCase) {
  const RatingMatrix truth(1, 2, std::vector<double>{3, 5});
  const RatingMatrix pred(1, 2, 1.0);
  const PropensityMatrix p(1, 2, 0.5);
  const PropensityMatrix phat(1, 2, std::vector<double>{1.0, 0.25});
  EXPECT_NEAR(ips_bias(truth, pred, p, phat, LossKind::mae()), -1.5, 1e-15);
  EXPECT_NEAR(true_risk(truth, pred, LossKind::mae()) -
                  exact_expectation(truth, pred, p, phat, LossKind::mae(), EstimatorKind::IPS).mean,
              -1.5, 1e-15);
}

TEST(IpsBias, EqualsTruthMinusExpectation) {
  std::mt19937_64 gen(5);
  for (int t = 0; t < 5; ++t) {
    const auto inst = oracle::random_instance(gen, 2, 3);
    const auto phat = oracle::random_props(gen, 2, 3, 0.1, 0.9);
    const double oracle_bias = oracle::risk(oracle::Loss::MSE, inst.truth, inst.pred) -
                               oracle::expected_ips(oracle::Loss::MSE, inst.truth, inst.pred, inst.props, phat);
    EXPECT_NEAR(ips_bias(inst.truth, inst.pred, inst.props, phat, LossKind::mse()), oracle_bias, 1e-10);
  }
}

TEST(ErmBoundInaccurate, ReducesToErmBound) {
  std::mt19937_64 gen(6);
  const auto p = oracle::random_props(gen, 4, 4, 0.05, 0.9);
  const BoundInputs in{3.0, 0.05, 100};
  EXPECT_EQ(erm_bound_inaccurate(0.7, in, p, p), erm_bound(0.7, in, p));
}

TEST(ErmBoundInaccurate, ZeroRange) {
  std::mt19937_64 gen(7);
  const auto p = oracle::random_props(gen, 2, 2, 0.05, 0.9);
  const auto q = oracle::random_props(gen, 2, 2, 0.05, 0.9);
  EXPECT_EQ(erm_bound_inaccurate(0.3, {0.0, 0.05, 1}, p, q), 0.3);
}

TEST(ErmBoundInaccurate, OverestimatingSmallPropensityTradesVarianceForBias) {
  const PropensityMatrix p(1, 3, std::vector<double>{0.01, 0.5, 0.5});
  const PropensityMatrix q(1, 3, std::vector<double>{0.05, 0.5, 0.5});
  const BoundInputs in{1.0, 0.05, 1};
  const double log_term = std::sqrt(std::log(2.0 / 0.05) / 2.0);
  auto variance = [&](const PropensityMatrix& m) {
    double s = 0.0;
    for (double v : m.values()) s += 1.0 / (v * v);
    return log_term * std::sqrt(s) / 3.0;
  };
  const double bias_q = std::abs(1.0 - 0.01 / 0.05) / 3.0;
  EXPECT_LT(variance(q), variance(p));
  EXPECT_GT(bias_q, 0.0);
  EXPECT_NEAR(erm_bound_inaccurate(0.0, in, p, q), bias_q + variance(q), 1e-12);
  EXPECT_LT(erm_bound_inaccurate(0.0, in, p, q), erm_bound(0.0, in, p));
}

TEST(TailBound, CoverageOnFixedInstance) {
  std::mt19937_64 gen(8);
  const auto inst = oracle::random_instance(gen, 6, 6, 0.2, 0.8);
  const double truth = true_risk(inst.truth, inst.pred, LossKind::mae());
  const double bound = ips_tail_bound(inst.truth, inst.pred, inst.props, LossKind::mae(), 0.1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  int exceed = 0;
  for (int s = 0; s < 500; ++s) {
    std::vector<Rating> entries;
    for (std::size_t u = 0; u < 6; ++u)
      for (std::size_t i = 0; i < 6; ++i)
        if (unit(gen) < inst.props(u, i)) entries.push_back({u, i, inst.truth(u, i)});
    const double est = ips_estimate(ObservationSample(6, 6, entries), inst.pred, inst.props, LossKind::mae()).value;
    if (std::abs(est - truth) > bound) ++exceed;
  }
  EXPECT_LE(exceed, 60);
}
