#include "mnar/propensity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "mnar/errors.hpp"
#include "mnar/lbfgs.hpp"

namespace mnar {
namespace {

double clamp_propensity(double p, double floor) { return std::clamp(p, floor, 1.0); }

void require_floor(double floor) {
  if (!(floor > 0.0 && floor <= 1.0)) throw InvalidArgument("propensity floor must lie in (0, 1]");
}

void require_distribution(const std::vector<double>& dist, std::size_t levels, const char* what) {
  if (dist.size() != levels)
    throw InvalidArgument(std::string(what) + " must have one entry per rating level");
  double sum = 0.0;
  for (double p : dist) {
    if (!(p >= 0.0)) throw InvalidArgument(std::string(what) + " has a negative entry");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw InvalidArgument(std::string(what) + " does not sum to 1");
}

std::size_t level_of(const RatingScale& scale, double rating) {
  if (!scale.contains(rating))
    throw InvalidArgument("rating " + std::to_string(rating) + " is not on the rating scale");
  return static_cast<std::size_t>(static_cast<int>(rating) - scale.min);
}

}  // namespace

PropensityMatrix uniform_propensities(const ObservationSample& obs, double floor) {
  require_floor(floor);
  const double p = static_cast<double>(obs.size()) / static_cast<double>(obs.cells());
  return PropensityMatrix(obs.rows(), obs.cols(), clamp_propensity(p, floor));
}

PropensityMatrix scale_for_cv(const PropensityMatrix& props, double factor, double floor) {
  if (!(factor > 0.0 && factor <= 1.0)) throw InvalidArgument("cross-validation scale factor must lie in (0, 1]");
  require_floor(floor);
  std::vector<double> out(props.values().begin(), props.values().end());
  for (double& p : out) p = clamp_propensity(p * factor, floor);
  return PropensityMatrix(props.rows(), props.cols(), std::move(out));
}

// ---------------------------------------------------------------------------

NaiveBayesPropensityModel::NaiveBayesPropensityModel(RatingScale scale, std::vector<double> cond_rating_dist,
                                                     double reveal_rate, std::vector<double> marginal_rating_dist,
                                                     double laplace_alpha, double floor)
    : scale_(scale), cond_(std::move(cond_rating_dist)), reveal_rate_(reveal_rate),
      marginal_(std::move(marginal_rating_dist)), laplace_alpha_(laplace_alpha), floor_(floor) {
  if (scale.levels() < 1) throw InvalidArgument("rating scale is empty");
  const auto levels = static_cast<std::size_t>(scale.levels());
  require_distribution(cond_, levels, "P(Y=r|O=1)");
  require_distribution(marginal_, levels, "P(Y=r)");
  if (!(reveal_rate_ > 0.0 && reveal_rate_ <= 1.0)) throw InvalidArgument("P(O=1) must lie in (0, 1]");
  if (!(laplace_alpha_ >= 0.0)) throw InvalidArgument("Laplace pseudo-count must be >= 0");
  require_floor(floor_);
}

NaiveBayesPropensityModel fit_naive_bayes(const ObservationSample& mnar_obs, std::span<const double> mcar_ratings,
                                          double laplace_alpha, RatingScale scale, double floor) {
  if (mnar_obs.empty()) throw InvalidArgument("Naive Bayes propensities need at least one MNAR observation");
  if (!(laplace_alpha >= 0.0)) throw InvalidArgument("Laplace pseudo-count must be >= 0");
  if (mcar_ratings.empty() && laplace_alpha == 0.0)
    throw InvalidArgument("empty MCAR sample with zero smoothing leaves P(Y=r) undefined");

  const auto levels = static_cast<std::size_t>(scale.levels());
  std::vector<double> cond(levels, 0.0);
  std::vector<double> marginal(levels, 0.0);
  for (const Rating& r : mnar_obs.entries()) cond[level_of(scale, r.value)] += 1.0;
  for (double r : mcar_ratings) marginal[level_of(scale, r)] += 1.0;

  const double alpha_mass = laplace_alpha * static_cast<double>(levels);
  const double cond_total = static_cast<double>(mnar_obs.size()) + alpha_mass;
  const double marginal_total = static_cast<double>(mcar_ratings.size()) + alpha_mass;
  for (double& c : cond) c = (c + laplace_alpha) / cond_total;
  for (double& m : marginal) m = (m + laplace_alpha) / marginal_total;

  const double reveal_rate = static_cast<double>(mnar_obs.size()) / static_cast<double>(mnar_obs.cells());
  return NaiveBayesPropensityModel(scale, std::move(cond), reveal_rate, std::move(marginal), laplace_alpha, floor);
}

ClampedPropensity nb_propensity_checked(const NaiveBayesPropensityModel& model, int rating) {
  if (rating < model.scale().min || rating > model.scale().max)
    throw InvalidArgument("rating " + std::to_string(rating) + " is not on the rating scale");
  const auto level = static_cast<std::size_t>(rating - model.scale().min);
  const double cond = model.cond_rating_dist()[level];
  const double marginal = model.marginal_rating_dist()[level];
  double raw;
  if (marginal > 0.0) {
    raw = cond * model.reveal_rate() / marginal;
  } else {
    raw = cond > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
  }
  if (raw > 1.0) return {1.0, true};
  if (raw < model.floor()) return {model.floor(), true};
  return {raw, false};
}

double nb_propensity(const NaiveBayesPropensityModel& model, int rating) {
  return nb_propensity_checked(model, rating).value;
}

ImputedPropensities nb_propensity_matrix(const NaiveBayesPropensityModel& model, const ObservationSample& obs) {
  const std::size_t cells = obs.cells();
  std::vector<double> values(cells, clamp_propensity(model.reveal_rate(), model.floor()));
  std::vector<bool> imputed(cells, true);
  std::size_t clamped = 0;
  for (const Rating& r : obs.entries()) {
    const auto level = level_of(model.scale(), r.value);
    const auto p = nb_propensity_checked(model, model.scale().min + static_cast<int>(level));
    const std::size_t cell = r.user * obs.cols() + r.item;
    values[cell] = p.value;
    imputed[cell] = false;
    if (p.clamped) ++clamped;
  }
  return {PropensityMatrix(obs.rows(), obs.cols(), std::move(values)), std::move(imputed), clamped};
}

// ---------------------------------------------------------------------------

PairFeatures::PairFeatures(std::size_t rows, std::size_t cols, std::size_t dim, std::vector<double> values)
    : rows_(rows), cols_(cols), dim_(dim), values_(std::move(values)) {
  if (rows == 0 || cols == 0) throw InvalidArgument("pair features need positive dimensions");
  if (values_.size() != rows * cols * dim) throw InvalidArgument("pair feature array has the wrong length");
  for (double v : values_)
    if (!std::isfinite(v)) throw InvalidArgument("pair features must be finite");
}

LogisticPropensityModel::LogisticPropensityModel(std::vector<double> weights, std::vector<double> item_offsets,
                                                 std::vector<double> user_offsets, double regularization,
                                                 double floor)
    : weights_(std::move(weights)), item_offsets_(std::move(item_offsets)), user_offsets_(std::move(user_offsets)),
      regularization_(regularization), floor_(floor) {
  auto finite = [](const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
  };
  if (!finite(weights_) || !finite(item_offsets_) || !finite(user_offsets_))
    throw InvalidArgument("logistic propensity parameters must be finite");
  require_floor(floor_);
}

double LogisticProblem::negative_objective(std::span<const double> params, std::span<double> grad) const {
  const std::size_t dim = features.dim();
  const std::size_t items = features.cols();
  const std::size_t users = features.rows();
  const std::size_t beta0 = dim;
  const std::size_t gamma0 = dim + items;
  const bool want_grad = !grad.empty();
  if (want_grad) std::fill(grad.begin(), grad.end(), 0.0);

  std::vector<unsigned char> label(users * items, 0);
  for (const Rating& r : reveals.entries()) label[r.user * items + r.item] = 1;

  double nll = 0.0;
  for (std::size_t u = 0; u < users; ++u) {
    for (std::size_t i = 0; i < items; ++i) {
      const auto x = features.at(u, i);
      double z = params[beta0 + i] + params[gamma0 + u];
      for (std::size_t j = 0; j < dim; ++j) z += params[j] * x[j];
      const double o = label[u * items + i];
      // log(1 + e^z) - o z, computed stably
      nll += std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))) - o * z;
      if (want_grad) {
        const double sigma = z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
        const double dz = sigma - o;
        for (std::size_t j = 0; j < dim; ++j) grad[j] += dz * x[j];
        grad[beta0 + i] += dz;
        grad[gamma0 + u] += dz;
      }
    }
  }

  const double reg = config.regularization;
  const std::size_t penalized = config.penalize_offsets ? params.size() : dim;
  double penalty = 0.0;
  for (std::size_t j = 0; j < penalized; ++j) {
    penalty += params[j] * params[j];
    if (want_grad) grad[j] += reg * (2.0 * params[j]);
  }
  return nll + reg * penalty;
}

LogisticFit fit_logistic(const ObservationSample& reveals, const PairFeatures& features,
                         const LogisticConfig& config) {
  if (reveals.rows() != features.rows() || reveals.cols() != features.cols())
    throw InvalidArgument("reveal matrix and pair features differ in dimensions");
  if (!(config.regularization >= 0.0)) throw InvalidArgument("regularization must be >= 0");

  const LogisticProblem problem{reveals, features, config};
  DescentOptions options;
  options.max_iterations = config.max_iterations;
  options.gradient_tolerance = config.gradient_tolerance;
  const auto result = minimize([&](std::span<const double> x, std::span<double> g) {
    return problem.negative_objective(x, g);
  }, std::vector<double>(problem.parameter_count(), 0.0), options);

  const std::size_t dim = features.dim();
  const std::size_t items = features.cols();
  std::vector<double> w(result.x.begin(), result.x.begin() + static_cast<std::ptrdiff_t>(dim));
  std::vector<double> beta(result.x.begin() + static_cast<std::ptrdiff_t>(dim),
                           result.x.begin() + static_cast<std::ptrdiff_t>(dim + items));
  std::vector<double> gamma(result.x.begin() + static_cast<std::ptrdiff_t>(dim + items), result.x.end());
  return {LogisticPropensityModel(std::move(w), std::move(beta), std::move(gamma), config.regularization,
                                  config.floor),
          -result.value, result.iterations, result.reason == StopReason::GradientTolerance};
}

double lr_propensity(const LogisticPropensityModel& model, std::span<const double> pair_feature, std::size_t u,
                     std::size_t i) {
  if (pair_feature.size() != model.weights().size())
    throw InvalidArgument("pair feature length does not match the model");
  if (u >= model.user_offsets().size() || i >= model.item_offsets().size())
    throw InvalidArgument("user or item index out of range for the logistic model");
  double z = model.item_offsets()[i] + model.user_offsets()[u];
  for (std::size_t j = 0; j < pair_feature.size(); ++j) z += model.weights()[j] * pair_feature[j];
  const double sigma = z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
  return clamp_propensity(sigma, model.floor());
}

PropensityMatrix lr_propensity_matrix(const LogisticPropensityModel& model, const PairFeatures& features) {
  std::vector<double> values(features.rows() * features.cols());
  for (std::size_t u = 0; u < features.rows(); ++u)
    for (std::size_t i = 0; i < features.cols(); ++i)
      values[u * features.cols() + i] = lr_propensity(model, features.at(u, i), u, i);
  return PropensityMatrix(features.rows(), features.cols(), std::move(values));
}

}  // namespace mnar
