#include "mnar/factorization.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mnar/errors.hpp"
#include "mnar/propensity.hpp"
#include "mnar/rng.hpp"

namespace mnar {

FactorModel::FactorModel(std::size_t users, std::size_t items, std::size_t rank)
    : FactorModel(users, items, rank, std::vector<double>((users + items) * (rank + 1) + 1, 0.0)) {}

FactorModel::FactorModel(std::size_t users, std::size_t items, std::size_t rank, std::vector<double> params)
    : users_(users), items_(items), rank_(rank), params_(std::move(params)) {
  if (users == 0 || items == 0) throw InvalidArgument("factor model needs at least one user and one item");
  if (rank == 0) throw InvalidArgument("factor model rank must be >= 1");
  if (params_.size() != (users + items) * (rank + 1) + 1)
    throw InvalidArgument("factor model parameter vector has the wrong length");
  for (double v : params_)
    if (!std::isfinite(v)) throw InvalidArgument("factor model parameters must be finite");
}

double FactorModel::predict(std::size_t u, std::size_t i) const noexcept {
  const double* v = params_.data() + u * rank_;
  const double* w = params_.data() + (users_ + i) * rank_;
  double s = 0.0;
  for (std::size_t k = 0; k < rank_; ++k) s += v[k] * w[k];
  return s + user_offset(u) + item_offset(i) + global_offset();
}

double TrainConfig::effective_init_scale() const {
  return init_scale.value_or(0.1 / std::sqrt(static_cast<double>(rank)));
}

void TrainConfig::validate() const {
  if (!(lambda >= 0.0)) throw InvalidArgument("lambda must be >= 0");
  if (rank < 1) throw InvalidArgument("rank must be >= 1");
  if (!(tolerance > 0.0)) throw InvalidArgument("tolerance must be > 0");
  if (!(effective_init_scale() > 0.0)) throw InvalidArgument("init_scale must be > 0");
}

RatingMatrix predict(const FactorModel& model) {
  RatingMatrix out(model.users(), model.items());
  for (std::size_t u = 0; u < model.users(); ++u)
    for (std::size_t i = 0; i < model.items(); ++i) out(u, i) = model.predict(u, i);
  return out;
}

namespace {

struct WeightedEntry {
  std::size_t user;
  std::size_t item;
  double rating;
  double weight;  // 1 / P
};

std::vector<WeightedEntry> weighted_entries(const ObservationSample& obs, const PropensityMatrix& props) {
  require_same_dims(obs, props);
  std::vector<WeightedEntry> out;
  out.reserve(obs.size());
  for (const Rating& r : obs.entries()) {
    const double p = props(r.user, r.item);
    if (!(p > 0.0)) throw InvalidArgument("nonpositive propensity at an observed entry");
    out.push_back({r.user, r.item, r.value, 1.0 / p});
  }
  return out;
}

// Objective and (optionally) gradient over the flat parameter layout of FactorModel.
class MfProblem {
 public:
  MfProblem(std::size_t users, std::size_t items, const std::vector<WeightedEntry>& entries, const TrainConfig& config)
      : users_(users), items_(items), rank_(config.rank), entries_(entries), lambda_(config.lambda),
        loss_(config.loss) {}

  double operator()(std::span<const double> x, std::span<double> grad) const {
    const std::size_t d = rank_;
    const std::size_t factor_count = (users_ + items_) * d;
    const std::size_t a0 = factor_count;
    const std::size_t b0 = a0 + users_;
    const std::size_t c0 = b0 + items_;
    const bool want_grad = !grad.empty();
    if (want_grad) std::fill(grad.begin(), grad.end(), 0.0);

    double data = 0.0;
    for (const WeightedEntry& e : entries_) {
      const double* v = x.data() + e.user * d;
      const double* w = x.data() + (users_ + e.item) * d;
      double yhat = 0.0;
      for (std::size_t k = 0; k < d; ++k) yhat += v[k] * w[k];
      yhat += x[a0 + e.user] + x[b0 + e.item] + x[c0];
      const double r = yhat - e.rating;

      double dr;
      if (loss_ == TrainLoss::MSE) {
        data += r * r * e.weight;
        dr = 2.0 * r * e.weight;
      } else {
        data += std::abs(r) * e.weight;
        dr = (r > 0.0 ? 1.0 : (r < 0.0 ? -1.0 : 0.0)) * e.weight;
      }
      if (want_grad) {
        double* gv = grad.data() + e.user * d;
        double* gw = grad.data() + (users_ + e.item) * d;
        for (std::size_t k = 0; k < d; ++k) {
          gv[k] += dr * w[k];
          gw[k] += dr * v[k];
        }
        grad[a0 + e.user] += dr;
        grad[b0 + e.item] += dr;
        grad[c0] += dr;
      }
    }

    double penalty = 0.0;
    for (std::size_t j = 0; j < factor_count; ++j) {
      penalty += x[j] * x[j];
      if (want_grad) grad[j] += lambda_ * (2.0 * x[j]);
    }
    return data + lambda_ * penalty;
  }

 private:
  std::size_t users_;
  std::size_t items_;
  std::size_t rank_;
  const std::vector<WeightedEntry>& entries_;
  double lambda_;
  TrainLoss loss_;
};

void require_model_matches(const FactorModel& model, const ObservationSample& obs, const TrainConfig& config) {
  if (model.users() != obs.rows() || model.items() != obs.cols())
    throw InvalidArgument("factor model and observation sample dimensions differ");
  if (model.rank() != config.rank) throw InvalidArgument("factor model rank differs from config rank");
}

}  // namespace

double objective(const FactorModel& model, const ObservationSample& obs, const PropensityMatrix& props,
                 const TrainConfig& config) {
  require_model_matches(model, obs, config);
  const auto entries = weighted_entries(obs, props);
  return MfProblem(model.users(), model.items(), entries, config)(model.params(), {});
}

FactorModel gradient(const FactorModel& model, const ObservationSample& obs, const PropensityMatrix& props,
                     const TrainConfig& config) {
  require_model_matches(model, obs, config);
  const auto entries = weighted_entries(obs, props);
  std::vector<double> g(model.params().size());
  MfProblem(model.users(), model.items(), entries, config)(model.params(), g);
  return FactorModel(model.users(), model.items(), model.rank(), std::move(g));
}

FactorModel initial_model(const ObservationSample& obs, const PropensityMatrix& props, const TrainConfig& config) {
  config.validate();
  require_same_dims(obs, props);
  FactorModel model(obs.rows(), obs.cols(), config.rank);
  const double scale = config.effective_init_scale();
  auto params = model.params();
  for (std::size_t j = 0; j < model.factor_count(); ++j) params[j] = scale * rng::counter_normal(config.seed, j);

  double weighted = 0.0;
  double weights = 0.0;
  for (const auto& e : weighted_entries(obs, props)) {
    weighted += e.weight * e.rating;
    weights += e.weight;
  }
  model.global_offset() = weights > 0.0 ? weighted / weights : 0.0;
  return model;
}

TrainResult train_detailed(const ObservationSample& obs, const PropensityMatrix& props, const TrainConfig& config) {
  if (obs.empty()) throw InvalidArgument("cannot train on an empty observation sample");
  FactorModel start = initial_model(obs, props, config);
  const auto entries = weighted_entries(obs, props);
  const MfProblem problem(obs.rows(), obs.cols(), entries, config);

  DescentOptions options;
  options.method = config.method;
  options.memory = config.memory;
  options.max_iterations = config.max_iterations;
  options.gradient_tolerance = config.tolerance;

  const std::vector<double> x0(start.params().begin(), start.params().end());
  DescentResult descent = minimize(std::cref(problem), x0, options);
  FactorModel model(obs.rows(), obs.cols(), config.rank, descent.x);
  return {std::move(model), std::move(descent)};
}

FactorModel train(const ObservationSample& obs, const PropensityMatrix& props, const TrainConfig& config) {
  return train_detailed(obs, props, config).model;
}

std::vector<double> default_lambda_grid() { return {1e-6, 1e-5, 1e-4, 1e-3, 1e-2, 1e-1, 1.0}; }

std::vector<std::size_t> default_rank_grid() { return {5, 10, 20, 40}; }

std::vector<std::size_t> assign_folds(std::size_t entries, std::size_t folds, std::uint64_t seed) {
  if (folds < 2) throw InvalidArgument("cross-validation needs at least 2 folds");
  std::vector<std::size_t> order(entries);
  for (std::size_t k = 0; k < entries; ++k) order[k] = k;
  rng::Stream stream(rng::derive_seed(seed, 0xF0D5));
  stream.shuffle(std::span<std::size_t>(order));
  std::vector<std::size_t> label(entries);
  for (std::size_t pos = 0; pos < entries; ++pos) label[order[pos]] = pos % folds;
  return label;
}

CvResult cross_validate(const ObservationSample& obs, const PropensityMatrix& props,
                        std::span<const double> lambda_grid, std::span<const std::size_t> rank_grid,
                        std::size_t folds, const TrainConfig& base_config) {
  if (folds < 2) throw InvalidArgument("cross-validation needs at least 2 folds");
  if (obs.size() < folds) throw InvalidArgument("fewer observations than folds");
  if (lambda_grid.empty() || rank_grid.empty()) throw InvalidArgument("empty hyperparameter grid");
  require_same_dims(obs, props);

  std::vector<double> lambdas(lambda_grid.begin(), lambda_grid.end());
  std::vector<std::size_t> ranks(rank_grid.begin(), rank_grid.end());
  std::sort(lambdas.begin(), lambdas.end());
  lambdas.erase(std::unique(lambdas.begin(), lambdas.end()), lambdas.end());
  std::sort(ranks.begin(), ranks.end());
  ranks.erase(std::unique(ranks.begin(), ranks.end()), ranks.end());

  const auto k = static_cast<double>(folds);
  const double train_scale = (k - 1.0) / k;
  const double validation_scale = 1.0 / k;
  const PropensityMatrix train_props = scale_for_cv(props, train_scale);
  const PropensityMatrix validation_props = scale_for_cv(props, validation_scale);

  const auto label = assign_folds(obs.size(), folds, base_config.seed);
  std::vector<ObservationSample> train_parts;
  std::vector<ObservationSample> held_out_parts;
  for (std::size_t f = 0; f < folds; ++f) {
    std::vector<std::size_t> in;
    std::vector<std::size_t> out;
    for (std::size_t e = 0; e < obs.size(); ++e) (label[e] == f ? out : in).push_back(e);
    if (in.empty() || out.empty()) throw InvalidArgument("cross-validation fold " + std::to_string(f) + " is empty");
    train_parts.push_back(obs.subset(in));
    held_out_parts.push_back(obs.subset(out));
  }

  std::vector<CvCell> cells;
  std::size_t best = 0;
  for (double lambda : lambdas) {
    for (std::size_t rank : ranks) {
      TrainConfig config = base_config;
      config.lambda = lambda;
      config.rank = rank;
      CvCell cell{lambda, rank, 0.0, {}};
      for (std::size_t f = 0; f < folds; ++f) {
        const FactorModel model = train(train_parts[f], train_props, config);
        double sum = 0.0;
        for (const Rating& r : held_out_parts[f].entries()) {
          const double res = model.predict(r.user, r.item) - r.value;
          const double delta = config.loss == TrainLoss::MSE ? res * res : std::abs(res);
          sum += delta / validation_props(r.user, r.item);
        }
        cell.fold_scores.push_back(sum / static_cast<double>(obs.cells()));
      }
      double total = 0.0;
      for (double s : cell.fold_scores) total += s;
      cell.mean_score = total / k;
      if (cells.empty() || cell.mean_score < cells[best].mean_score) best = cells.size();
      cells.push_back(std::move(cell));
    }
  }

  TrainConfig final_config = base_config;
  final_config.lambda = cells[best].lambda;
  final_config.rank = cells[best].rank;
  FactorModel model = train(obs, props, final_config);
  return {cells[best].lambda, cells[best].rank, std::move(cells), train_scale, validation_scale, std::move(model)};
}

}  // namespace mnar
