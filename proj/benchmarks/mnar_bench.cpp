#include <benchmark/benchmark.h>

#include <random>

#include "mnar/estimators.hpp"
#include "mnar/factorization.hpp"
#include "mnar/loss.hpp"
#include "mnar/propensity.hpp"
#include "mnar/synthdata.hpp"

using namespace mnar;

namespace {

RatingMatrix bench_truth(std::size_t users, std::size_t items) {
  std::mt19937_64 gen(1);
  std::normal_distribution<double> z;
  std::vector<double> scores(users * items);
  for (double& s : scores) s = z(gen);
  return adjust_to_marginal(RatingMatrix(users, items, scores), default_marginal());
}

struct Setting {
  RatingMatrix truth;
  ObservationModel model;
  ObservationSample obs;
};

Setting make_setting(std::size_t users, std::size_t items) {
  RatingMatrix truth = bench_truth(users, items);
  ObservationModel model = observation_propensities(truth, {0.25, 0.05});
  ObservationSample obs = sample_observations(truth, model.propensities, 7);
  return {std::move(truth), std::move(model), std::move(obs)};
}

void BM_IpsEstimate(benchmark::State& state) {
  const Setting s = make_setting(200, 300);
  const RatingMatrix pred = make_predictor(PredictorKind::Rotate, s.truth, 1);
  const LossEvaluator loss(pred, LossKind::mae());
  for (auto _ : state) benchmark::DoNotOptimize(ips_estimate(s.obs, loss, s.model.propensities).value);
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(s.obs.size()));
}
BENCHMARK(BM_IpsEstimate);

void BM_DcgEvaluator(benchmark::State& state) {
  const RatingMatrix truth = bench_truth(200, 300);
  const RatingMatrix pred = make_predictor(PredictorKind::Skewed, truth, 1);
  for (auto _ : state) benchmark::DoNotOptimize(LossEvaluator(pred, LossKind::dcg_at(50)));
}
BENCHMARK(BM_DcgEvaluator);

void BM_SampleObservations(benchmark::State& state) {
  const Setting s = make_setting(200, 300);
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(sample_observations(s.truth, s.model.propensities, ++seed).size());
}
BENCHMARK(BM_SampleObservations);

void BM_MfGradient(benchmark::State& state) {
  const Setting s = make_setting(200, 300);
  TrainConfig config;
  config.rank = static_cast<std::size_t>(state.range(0));
  const FactorModel model = initial_model(s.obs, s.model.propensities, config);
  for (auto _ : state) benchmark::DoNotOptimize(gradient(model, s.obs, s.model.propensities, config));
}
BENCHMARK(BM_MfGradient)->Arg(5)->Arg(20);

void BM_MfTrain(benchmark::State& state) {
  const Setting s = make_setting(200, 300);
  TrainConfig config;
  config.rank = 20;
  config.max_iterations = static_cast<std::size_t>(state.range(0));
  config.tolerance = 1e-300;
  for (auto _ : state) benchmark::DoNotOptimize(train(s.obs, s.model.propensities, config));
}
BENCHMARK(BM_MfTrain)->Arg(50)->Unit(benchmark::kMillisecond);

void BM_NaiveBayesFit(benchmark::State& state) {
  const Setting s = make_setting(200, 300);
  std::mt19937_64 gen(3);
  std::uniform_int_distribution<std::size_t> cell(0, s.truth.size() - 1);
  std::vector<double> mcar(static_cast<std::size_t>(state.range(0)));
  for (double& r : mcar) r = s.truth.values()[cell(gen)];
  for (auto _ : state) benchmark::DoNotOptimize(nb_propensity_matrix(fit_naive_bayes(s.obs, mcar), s.obs));
}
BENCHMARK(BM_NaiveBayesFit)->Arg(1000)->Arg(10000);

}  // namespace

BENCHMARK_MAIN();
