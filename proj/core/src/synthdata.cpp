#include "mnar/synthdata.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>

#include "mnar/errors.hpp"
#include "mnar/rng.hpp"

namespace mnar {

MarginalDistribution::MarginalDistribution(std::array<double, 5> p) : p_(p) {
  double sum = 0.0;
  for (double v : p_) {
    if (!(v >= 0.0)) throw InvalidArgument("marginal probabilities must be >= 0");
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw InvalidArgument("marginal probabilities must sum to 1");
}

MarginalDistribution default_marginal() { return MarginalDistribution({0.5263, 0.2425, 0.1458, 0.0572, 0.0282}); }

RatingMatrix adjust_to_marginal(const RatingMatrix& scores, const MarginalDistribution& marginal) {
  const std::size_t n = scores.size();
  const auto values = scores.values();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (values[a] != values[b]) return values[a] < values[b];
    return a < b;
  });

  // The 1e-9 guard keeps products such as 0.5263 * 60000 from flooring one short.
  std::array<std::size_t, 5> counts{};
  std::size_t assigned = 0;
  for (int r = 1; r <= 4; ++r) {
    const auto c = static_cast<std::size_t>(std::floor(marginal[r] * static_cast<double>(n) + 1e-9));
    counts[static_cast<std::size_t>(r - 1)] = std::min(c, n - assigned);
    assigned += counts[static_cast<std::size_t>(r - 1)];
  }
  counts[4] = n - assigned;

  RatingMatrix out(scores.rows(), scores.cols());
  auto dst = out.values();
  std::size_t pos = 0;
  for (int r = 1; r <= 5; ++r)
    for (std::size_t k = 0; k < counts[static_cast<std::size_t>(r - 1)]; ++k) dst[order[pos++]] = r;
  return out;
}

RatingMatrix complete_and_adjust(const ObservationSample& partial, const MarginalDistribution& marginal,
                                 const CompletionConfig& config) {
  if (partial.empty()) throw InvalidArgument("cannot complete an empty rating sample");
  const PropensityMatrix unweighted(partial.rows(), partial.cols(), 1.0);
  const FactorModel model = train(partial, unweighted, config.mf);
  return adjust_to_marginal(predict(model), marginal);
}

double select_completion_lambda(const ObservationSample& partial, std::span<const double> lambda_grid,
                                const CompletionConfig& config, std::uint64_t seed) {
  if (lambda_grid.empty()) throw InvalidArgument("empty lambda grid");
  if (partial.size() < 10) throw InvalidArgument("need at least 10 ratings for a 90/10 split");

  std::vector<std::size_t> order(partial.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  rng::Stream stream(rng::derive_seed(seed, 0x9010));
  stream.shuffle(std::span<std::size_t>(order));
  const std::size_t test_count = partial.size() / 10;
  const std::vector<std::size_t> test_pos(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(test_count));
  const std::vector<std::size_t> train_pos(order.begin() + static_cast<std::ptrdiff_t>(test_count), order.end());
  const ObservationSample train_part = partial.subset(train_pos);
  const ObservationSample test_part = partial.subset(test_pos);
  const PropensityMatrix unweighted(partial.rows(), partial.cols(), 1.0);

  std::vector<double> lambdas(lambda_grid.begin(), lambda_grid.end());
  std::sort(lambdas.begin(), lambdas.end());
  const RatingScale scale;
  double best_lambda = lambdas.front();
  double best_accuracy = -1.0;
  for (double lambda : lambdas) {
    TrainConfig mf = config.mf;
    mf.lambda = lambda;
    const FactorModel model = train(train_part, unweighted, mf);
    std::size_t hits = 0;
    for (const Rating& r : test_part.entries())
      if (static_cast<double>(scale.snap(model.predict(r.user, r.item))) == r.value) ++hits;
    const double accuracy = static_cast<double>(hits) / static_cast<double>(test_part.size());
    if (accuracy > best_accuracy) {
      best_accuracy = accuracy;
      best_lambda = lambda;
    }
  }
  return best_lambda;
}

ObservationModel observation_propensities(const RatingMatrix& truth, const ObservationModelConfig& config) {
  if (!(config.alpha > 0.0 && config.alpha <= 1.0)) throw InvalidArgument("alpha must lie in (0, 1]");
  if (!(config.target_fraction > 0.0 && config.target_fraction <= 1.0))
    throw InvalidArgument("target fraction must lie in (0, 1]");
  truth.require_on_scale(RatingScale{});

  auto relative = [&](double rating) { return rating >= 4.0 ? 1.0 : std::pow(config.alpha, 4.0 - rating); };
  std::array<double, 5> counts{};
  for (double y : truth.values()) counts[static_cast<std::size_t>(y) - 1] += 1.0;
  double mass = 0.0;
  for (int r = 1; r <= 5; ++r) mass += counts[static_cast<std::size_t>(r - 1)] * relative(r);

  const double k = config.target_fraction / (mass / static_cast<double>(truth.size()));
  if (k > 1.0) {
    throw Infeasible("observation scale k = " + std::to_string(k) + " exceeds 1; lower the target fraction or raise alpha");
  }
  std::vector<double> props(truth.size());
  const auto y = truth.values();
  for (std::size_t c = 0; c < props.size(); ++c) props[c] = k * relative(y[c]);
  return {PropensityMatrix(truth.rows(), truth.cols(), std::move(props)), k};
}

ObservationSample sample_observations(const RatingMatrix& truth, const PropensityMatrix& props, std::uint64_t seed) {
  require_same_dims(truth, props);
  std::vector<Rating> entries;
  const std::size_t cols = truth.cols();
  for (std::size_t u = 0; u < truth.rows(); ++u) {
    for (std::size_t i = 0; i < cols; ++i) {
      if (rng::counter_uniform(seed, u * cols + i) < props(u, i)) entries.push_back({u, i, truth(u, i)});
    }
  }
  return ObservationSample(truth.rows(), truth.cols(), std::move(entries));
}

std::string to_string(PredictorKind kind) {
  switch (kind) {
    case PredictorKind::RecOnes: return "REC_ONES";
    case PredictorKind::RecFours: return "REC_FOURS";
    case PredictorKind::Rotate: return "ROTATE";
    case PredictorKind::Skewed: return "SKEWED";
    case PredictorKind::Coarsened: return "COARSENED";
  }
  return "?";
}

PredictorKind parse_predictor(const std::string& text) {
  std::string upper;
  for (char ch : text) upper.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(ch))));
  for (PredictorKind kind : kAllPredictors)
    if (to_string(kind) == upper) return kind;
  throw InvalidArgument("unknown predictor '" + text + "'");
}

namespace {

RatingMatrix flip_to_five(const RatingMatrix& truth, double source, std::uint64_t seed) {
  std::size_t fives = 0;
  std::vector<std::size_t> candidates;
  const auto y = truth.values();
  for (std::size_t c = 0; c < y.size(); ++c) {
    if (y[c] == 5.0) ++fives;
    if (y[c] == source) candidates.push_back(c);
  }
  if (candidates.size() < fives) {
    throw InvalidArgument("only " + std::to_string(candidates.size()) + " cells rated " +
                          std::to_string(static_cast<int>(source)) + " to flip, need " + std::to_string(fives));
  }
  // Partial Fisher-Yates: the first `fives` slots become a uniform sample without replacement.
  rng::Stream stream(seed);
  for (std::size_t k = 0; k < fives; ++k) {
    const auto j = k + static_cast<std::size_t>(stream.below(candidates.size() - k));
    std::swap(candidates[k], candidates[j]);
  }
  RatingMatrix out = truth;
  auto dst = out.values();
  for (std::size_t k = 0; k < fives; ++k) dst[candidates[k]] = 5.0;
  return out;
}

}  // namespace

RatingMatrix make_predictor(PredictorKind kind, const RatingMatrix& truth, std::uint64_t seed) {
  truth.require_on_scale(RatingScale{});
  switch (kind) {
    case PredictorKind::RecOnes: return flip_to_five(truth, 1.0, seed);
    case PredictorKind::RecFours: return flip_to_five(truth, 4.0, seed);
    default: break;
  }
  RatingMatrix out = truth;
  auto dst = out.values();
  for (std::size_t c = 0; c < dst.size(); ++c) {
    const double y = dst[c];
    switch (kind) {
      case PredictorKind::Rotate:
        dst[c] = y >= 2.0 ? y - 1.0 : 5.0;
        break;
      case PredictorKind::Skewed:
        dst[c] = std::clamp(y + (6.0 - y) / 2.0 * rng::counter_normal(seed, c), 0.0, 6.0);
        break;
      case PredictorKind::Coarsened:
        dst[c] = y <= 3.0 ? 3.0 : 4.0;
        break;
      default:
        break;
    }
  }
  return out;
}

double closed_form_true_mae(PredictorKind kind, const MarginalDistribution& p) {
  switch (kind) {
    case PredictorKind::RecOnes: return 4.0 * p[5];
    case PredictorKind::RecFours: return p[5];
    case PredictorKind::Rotate: return 1.0 + 3.0 * p[1];
    case PredictorKind::Coarsened: return 2.0 * p[1] + p[2] + p[5];
    case PredictorKind::Skewed: break;
  }
  throw InvalidArgument("SKEWED predictions are random; no closed-form MAE");
}

ObservationSample make_source_ratings(const SourceConfig& config, std::uint64_t seed) {
  if (config.users == 0 || config.items == 0 || config.rank == 0)
    throw InvalidArgument("source ratings need positive users, items and rank");
  const std::uint64_t factor_seed = rng::derive_seed(seed, 1);
  const std::uint64_t noise_seed = rng::derive_seed(seed, 2);
  const std::uint64_t reveal_seed = rng::derive_seed(seed, 3);
  const std::size_t d = config.rank;
  const double factor_sd = 1.0 / std::sqrt(static_cast<double>(d));

  auto factor = [&](std::size_t row, std::size_t k) { return factor_sd * rng::counter_normal(factor_seed, row * d + k); };
  const std::size_t item_base = config.users;
  const std::size_t offset_base = (config.users + config.items) * d;

  RatingMatrix scores(config.users, config.items);
  for (std::size_t u = 0; u < config.users; ++u) {
    for (std::size_t i = 0; i < config.items; ++i) {
      double s = 0.0;
      for (std::size_t k = 0; k < d; ++k) s += factor(u, k) * factor(item_base + i, k);
      s += 0.5 * rng::counter_normal(factor_seed, offset_base + u);
      s += 0.5 * rng::counter_normal(factor_seed, offset_base + config.users + i);
      s += config.noise * rng::counter_normal(noise_seed, u * config.items + i);
      scores(u, i) = s;
    }
  }
  const RatingMatrix ratings = adjust_to_marginal(scores, default_marginal());
  const auto model = observation_propensities(ratings, {config.alpha, config.density});
  return sample_observations(ratings, model.propensities, reveal_seed);
}

}  // namespace mnar
