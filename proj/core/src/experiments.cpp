#include "mnar/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <ostream>
#include <thread>

#include "mnar/errors.hpp"
#include "mnar/io.hpp"
#include "mnar/propensity.hpp"
#include "mnar/rng.hpp"

namespace mnar {

// Seed streams derived from the master seed. Each stage gets its own index range.
namespace seeds {
constexpr std::uint64_t kPredictor = 100;
constexpr std::uint64_t kObservation = 1000;
constexpr std::uint64_t kMcar = 200000;
constexpr std::uint64_t kTraining = 400000;
}  // namespace seeds

GroundTruth build_ground_truth(const GroundTruthConfig& config, std::uint64_t seed) {
  ObservationSample source = make_source_ratings(config.source, rng::derive_seed(seed, 10));
  CompletionConfig completion = config.completion;
  completion.mf.seed = rng::derive_seed(seed, 11);
  if (!config.completion_lambda_grid.empty()) {
    completion.mf.lambda =
        select_completion_lambda(source, config.completion_lambda_grid, completion, rng::derive_seed(seed, 12));
  }
  RatingMatrix truth = complete_and_adjust(source, config.marginal, completion);
  return {std::move(truth), std::move(source), completion.mf.lambda};
}

std::string to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::EstimatorTable: return "estimator-table";
    case ExperimentKind::AlphaSweepEval: return "alpha-sweep-eval";
    case ExperimentKind::AlphaSweepLearn: return "alpha-sweep-learn";
    case ExperimentKind::RobustnessSweep: return "robustness-sweep";
  }
  return "?";
}

void ExperimentSpec::validate() const {
  if (trials < 1) throw InvalidArgument("trials must be >= 1");
  if (alphas.empty()) throw InvalidArgument("at least one alpha is required");
  for (double a : alphas)
    if (!(a > 0.0 && a <= 1.0)) throw InvalidArgument("alphas must lie in (0, 1]");
  if (!(target_fraction > 0.0 && target_fraction <= 1.0)) throw InvalidArgument("target fraction must lie in (0, 1]");
  if (metrics.empty()) throw InvalidArgument("at least one metric is required");
  if (folds < 2) throw InvalidArgument("folds must be >= 2");
  if (rank < 1) throw InvalidArgument("rank must be >= 1");
  if (threads < 1) throw InvalidArgument("threads must be >= 1");
}

std::vector<double> learning_lambda_grid() { return {1e-2, 1e-1, 1.0, 1e1, 1e2, 1e3}; }

void for_each_trial(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn) {
  if (threads <= 1 || n <= 1) {
    for (std::size_t t = 0; t < n; ++t) fn(t);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::jthread> workers;
  for (std::size_t w = 0; w < std::min(threads, n); ++w) {
    workers.emplace_back([&] {
      for (std::size_t t = next++; t < n; t = next++) {
        try {
          fn(t);
        } catch (...) {
          const std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  workers.clear();
  if (failure) std::rethrow_exception(failure);
}

namespace {

struct Summary {
  double mean;
  double std;
  double rmse;
};

// Sample standard deviation (n - 1); 0 for a single value.
Summary summarize(const std::vector<double>& values, double truth) {
  const auto n = static_cast<double>(values.size());
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= n;
  double ss = 0.0;
  double se = 0.0;
  for (double v : values) {
    ss += (v - mean) * (v - mean);
    se += (v - truth) * (v - truth);
  }
  const double std = values.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
  return {mean, std, std::sqrt(se / n)};
}

// Pooled error summary over several (estimates, truth) groups.
Summary summarize_errors(const std::vector<std::pair<const std::vector<double>*, double>>& groups) {
  std::vector<double> errors;
  for (const auto& [values, truth] : groups)
    for (double v : *values) errors.push_back(v - truth);
  return summarize(errors, 0.0);
}

struct Predictors {
  std::vector<PredictorKind> kinds;
  std::vector<RatingMatrix> matrices;
  // evaluators[p][m]
  std::vector<std::vector<LossEvaluator>> evaluators;
  // truths[p][m]
  std::vector<std::vector<double>> truths;
};

Predictors make_predictors(const RatingMatrix& truth, const std::vector<LossKind>& metrics, std::uint64_t seed) {
  Predictors out;
  for (std::size_t p = 0; p < kAllPredictors.size(); ++p) {
    const PredictorKind kind = kAllPredictors[p];
    out.kinds.push_back(kind);
    out.matrices.push_back(make_predictor(kind, truth, rng::derive_seed(seed, seeds::kPredictor + p)));
  }
  for (const RatingMatrix& pred : out.matrices) {
    std::vector<LossEvaluator> row;
    std::vector<double> truths;
    for (const LossKind& m : metrics) {
      row.emplace_back(pred, m);
      truths.push_back(true_risk(truth, pred, m));
    }
    out.evaluators.push_back(std::move(row));
    out.truths.push_back(std::move(truths));
  }
  return out;
}

ObservationSample trial_sample(const RatingMatrix& truth, const PropensityMatrix& props, std::uint64_t master,
                               std::size_t alpha_index, std::size_t trial) {
  const std::uint64_t seed = rng::derive_seed(rng::derive_seed(master, seeds::kObservation + alpha_index), trial);
  return sample_observations(truth, props, seed);
}

constexpr std::array<EstimatorKind, 3> kEstimators = {EstimatorKind::Naive, EstimatorKind::IPS, EstimatorKind::SNIPS};

// values[e][p][m][t] for the three estimators at one alpha.
using EstimateCube = std::vector<std::vector<std::vector<std::vector<double>>>>;

EstimateCube run_estimator_trials(const ExperimentSpec& spec, const RatingMatrix& truth,
                                  const PropensityMatrix& props, const Predictors& preds, std::size_t alpha_index) {
  const std::size_t np = preds.kinds.size();
  const std::size_t nm = spec.metrics.size();
  EstimateCube cube(kEstimators.size(),
                    std::vector(np, std::vector(nm, std::vector<double>(spec.trials, 0.0))));
  for_each_trial(spec.trials, spec.threads, [&](std::size_t t) {
    const ObservationSample obs = trial_sample(truth, props, spec.seed, alpha_index, t);
    for (std::size_t e = 0; e < kEstimators.size(); ++e)
      for (std::size_t p = 0; p < np; ++p)
        for (std::size_t m = 0; m < nm; ++m)
          cube[e][p][m][t] = estimate(kEstimators[e], obs, preds.evaluators[p][m], props).value;
  });
  return cube;
}

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Cross-validated training at a fixed rank; returns (true MSE, chosen lambda).
std::pair<double, double> cv_train_true_mse(const ExperimentSpec& spec, const RatingMatrix& truth,
                                            const ObservationSample& obs, const PropensityMatrix& props,
                                            std::uint64_t seed) {
  TrainConfig config;
  config.rank = spec.rank;
  config.loss = TrainLoss::MSE;
  config.max_iterations = spec.max_iterations;
  config.tolerance = spec.tolerance;
  config.seed = seed;
  const std::vector<double> grid = spec.lambda_grid.empty() ? learning_lambda_grid() : spec.lambda_grid;
  const std::vector<std::size_t> ranks = {spec.rank};
  const CvResult cv = cross_validate(obs, props, grid, ranks, spec.folds, config);
  return {true_risk(truth, predict(cv.model), LossKind::mse()), cv.best_lambda};
}

void add_learning_rows(SweepReport& report, const std::string& sweep, double param,
                       const std::vector<std::pair<std::string, std::vector<double>>>& methods) {
  for (const auto& [name, mses] : methods) {
    const Summary s = summarize(mses, 0.0);
    report.rows.push_back({sweep, param, "-", name, "MSE", kNaN, s.mean, s.std, std::sqrt(s.mean), mses.size()});
  }
}

}  // namespace

SweepReport run_estimator_table(const ExperimentSpec& spec, const RatingMatrix& truth) {
  spec.validate();
  const double alpha = spec.alphas.front();
  const ObservationModel model = observation_propensities(truth, {alpha, spec.target_fraction});
  const Predictors preds = make_predictors(truth, spec.metrics, spec.seed);
  const EstimateCube cube = run_estimator_trials(spec, truth, model.propensities, preds, 0);

  SweepReport report;
  for (std::size_t p = 0; p < preds.kinds.size(); ++p) {
    for (std::size_t m = 0; m < spec.metrics.size(); ++m) {
      const double true_value = preds.truths[p][m];
      report.rows.push_back({"estimator-table", alpha, to_string(preds.kinds[p]), "True", spec.metrics[m].name(),
                             true_value, true_value, 0.0, 0.0, spec.trials});
      for (std::size_t e = 0; e < kEstimators.size(); ++e) {
        const Summary s = summarize(cube[e][p][m], true_value);
        report.rows.push_back({"estimator-table", alpha, to_string(preds.kinds[p]), to_string(kEstimators[e]),
                               spec.metrics[m].name(), true_value, s.mean, s.std, s.rmse, spec.trials});
      }
    }
  }
  return report;
}

namespace {

SweepReport run_alpha_sweep_eval(const ExperimentSpec& spec, const RatingMatrix& truth) {
  const Predictors preds = make_predictors(truth, spec.metrics, spec.seed);
  SweepReport report;
  for (std::size_t a = 0; a < spec.alphas.size(); ++a) {
    const double alpha = spec.alphas[a];
    const ObservationModel model = observation_propensities(truth, {alpha, spec.target_fraction});
    const EstimateCube cube = run_estimator_trials(spec, truth, model.propensities, preds, a);
    for (std::size_t m = 0; m < spec.metrics.size(); ++m) {
      for (std::size_t e = 0; e < kEstimators.size(); ++e) {
        std::vector<std::pair<const std::vector<double>*, double>> groups;
        for (std::size_t p = 0; p < preds.kinds.size(); ++p) {
          groups.emplace_back(&cube[e][p][m], preds.truths[p][m]);
          const Summary s = summarize(cube[e][p][m], preds.truths[p][m]);
          report.rows.push_back({"alpha-sweep-eval", alpha, to_string(preds.kinds[p]), to_string(kEstimators[e]),
                                 spec.metrics[m].name(), preds.truths[p][m], s.mean, s.std, s.rmse, spec.trials});
        }
        const Summary pooled = summarize_errors(groups);
        report.rows.push_back({"alpha-sweep-eval", alpha, "ALL", to_string(kEstimators[e]), spec.metrics[m].name(),
                               kNaN, pooled.mean, pooled.std, pooled.rmse, spec.trials * preds.kinds.size()});
      }
    }
  }
  return report;
}

SweepReport run_alpha_sweep_learn(const ExperimentSpec& spec, const RatingMatrix& truth) {
  SweepReport report;
  for (std::size_t a = 0; a < spec.alphas.size(); ++a) {
    const double alpha = spec.alphas[a];
    const ObservationModel model = observation_propensities(truth, {alpha, spec.target_fraction});
    std::vector<double> ips_mse(spec.trials);
    std::vector<double> naive_mse(spec.trials);
    std::vector<double> ips_lambda(spec.trials);
    std::vector<double> naive_lambda(spec.trials);
    for_each_trial(spec.trials, spec.threads, [&](std::size_t t) {
      const ObservationSample obs = trial_sample(truth, model.propensities, spec.seed, a, t);
      const std::uint64_t train_seed = rng::derive_seed(rng::derive_seed(spec.seed, seeds::kTraining + a), t);
      std::tie(ips_mse[t], ips_lambda[t]) = cv_train_true_mse(spec, truth, obs, model.propensities, train_seed);
      std::tie(naive_mse[t], naive_lambda[t]) =
          cv_train_true_mse(spec, truth, obs, uniform_propensities(obs), train_seed);
    });
    for (std::size_t t = 0; t < spec.trials; ++t) {
      report.trial_records.push_back({alpha, t, "MF-IPS", ips_mse[t], ips_lambda[t], spec.rank});
      report.trial_records.push_back({alpha, t, "MF-Naive", naive_mse[t], naive_lambda[t], spec.rank});
    }
    add_learning_rows(report, "alpha-sweep-learn", alpha, {{"MF-IPS", ips_mse}, {"MF-Naive", naive_mse}});
  }
  return report;
}

// Naive Bayes model built from exact population quantities: reproduces the generating
// per-rating propensities when the truth follows a rating-only observation model.
NaiveBayesPropensityModel exact_naive_bayes(const RatingMatrix& truth, const PropensityMatrix& props) {
  std::vector<double> cond(5, 0.0);
  std::vector<double> marginal(5, 0.0);
  double total = 0.0;
  for (std::size_t c = 0; c < truth.size(); ++c) {
    const auto level = static_cast<std::size_t>(truth.values()[c]) - 1;
    cond[level] += props.values()[c];
    marginal[level] += 1.0;
    total += props.values()[c];
  }
  const auto cells = static_cast<double>(truth.size());
  for (double& v : cond) v /= total;
  for (double& v : marginal) v /= cells;
  return NaiveBayesPropensityModel(RatingScale{}, std::move(cond), total / cells, std::move(marginal), 0.0);
}

std::vector<double> draw_mcar_ratings(const RatingMatrix& truth, std::size_t count, std::uint64_t seed) {
  if (count > truth.size()) throw InvalidArgument("MCAR sample larger than the rating matrix");
  std::vector<std::size_t> cells(truth.size());
  for (std::size_t c = 0; c < cells.size(); ++c) cells[c] = c;
  rng::Stream stream(seed);
  std::vector<double> ratings(count);
  for (std::size_t k = 0; k < count; ++k) {
    const auto j = k + static_cast<std::size_t>(stream.below(cells.size() - k));
    std::swap(cells[k], cells[j]);
    ratings[k] = truth.values()[cells[k]];
  }
  return ratings;
}

}  // namespace

SweepReport run_alpha_sweep(const ExperimentSpec& spec, const RatingMatrix& truth) {
  spec.validate();
  if (spec.kind == ExperimentKind::AlphaSweepLearn) return run_alpha_sweep_learn(spec, truth);
  return run_alpha_sweep_eval(spec, truth);
}

SweepReport run_robustness_sweep(const ExperimentSpec& spec, const RatingMatrix& truth) {
  spec.validate();
  truth.require_on_scale(RatingScale{});
  const double alpha = spec.alphas.front();
  const ObservationModel model = observation_propensities(truth, {alpha, spec.target_fraction});
  const PropensityMatrix& props = model.propensities;
  const Predictors preds = make_predictors(truth, spec.metrics, spec.seed);
  const NaiveBayesPropensityModel exact_model = exact_naive_bayes(truth, props);

  const std::size_t np = preds.kinds.size();
  const std::size_t nm = spec.metrics.size();
  const std::size_t ns = spec.mcar_sizes.size();
  // Size slot ns holds the exact-marginal limit.
  auto empty = [&] { return std::vector(np, std::vector(nm, std::vector<double>(spec.trials, 0.0))); };
  std::vector<std::vector<std::vector<std::vector<double>>>> ips_nb(ns + 1, empty());
  std::vector<std::vector<std::vector<std::vector<double>>>> snips_nb(ns + 1, empty());
  auto naive = empty();
  auto ips_true = empty();

  std::vector<std::vector<double>> mf_nb(ns + 1, std::vector<double>(spec.trials, kNaN));
  std::vector<double> mf_naive(spec.trials, kNaN);
  std::vector<double> mf_true(spec.trials, kNaN);

  for_each_trial(spec.trials, spec.threads, [&](std::size_t t) {
    const ObservationSample obs = trial_sample(truth, props, spec.seed, 0, t);
    const std::uint64_t train_seed = rng::derive_seed(rng::derive_seed(spec.seed, seeds::kTraining), t);
    for (std::size_t p = 0; p < np; ++p) {
      for (std::size_t m = 0; m < nm; ++m) {
        naive[p][m][t] = naive_estimate(obs, preds.evaluators[p][m]).value;
        ips_true[p][m][t] = ips_estimate(obs, preds.evaluators[p][m], props).value;
      }
    }
    for (std::size_t s = 0; s <= ns; ++s) {
      const NaiveBayesPropensityModel nb =
          s < ns ? fit_naive_bayes(obs,
                                   draw_mcar_ratings(truth, spec.mcar_sizes[s],
                                                     rng::derive_seed(seeds::kMcar + s, rng::derive_seed(spec.seed, t))),
                                   spec.laplace_alpha)
                 : exact_model;
      const PropensityMatrix nb_props = nb_propensity_matrix(nb, obs).matrix;
      for (std::size_t p = 0; p < np; ++p) {
        for (std::size_t m = 0; m < nm; ++m) {
          ips_nb[s][p][m][t] = ips_estimate(obs, preds.evaluators[p][m], nb_props).value;
          snips_nb[s][p][m][t] = snips_estimate(obs, preds.evaluators[p][m], nb_props).value;
        }
      }
      if (spec.learn) mf_nb[s][t] = cv_train_true_mse(spec, truth, obs, nb_props, train_seed).first;
    }
    if (spec.learn) {
      mf_naive[t] = cv_train_true_mse(spec, truth, obs, uniform_propensities(obs), train_seed).first;
      mf_true[t] = cv_train_true_mse(spec, truth, obs, props, train_seed).first;
    }
  });

  SweepReport report;
  auto pooled_row = [&](double param, const std::string& name, const auto& cube, std::size_t m) {
    std::vector<std::pair<const std::vector<double>*, double>> groups;
    for (std::size_t p = 0; p < np; ++p) groups.emplace_back(&cube[p][m], preds.truths[p][m]);
    const Summary s = summarize_errors(groups);
    report.rows.push_back({"robustness", param, "ALL", name, spec.metrics[m].name(), kNaN, s.mean, s.std, s.rmse,
                           spec.trials * np});
  };
  for (std::size_t s = 0; s <= ns; ++s) {
    const double param = s < ns ? static_cast<double>(spec.mcar_sizes[s]) : std::numeric_limits<double>::infinity();
    for (std::size_t m = 0; m < nm; ++m) {
      pooled_row(param, "IPS-NB", ips_nb[s], m);
      pooled_row(param, "SNIPS-NB", snips_nb[s], m);
      pooled_row(param, "IPS-true", ips_true, m);
      pooled_row(param, "Naive", naive, m);
    }
    if (spec.learn) {
      add_learning_rows(report, "robustness", param, {{"MF-NB", mf_nb[s]}, {"MF-IPS", mf_true}, {"MF-Naive", mf_naive}});
      for (std::size_t t = 0; t < spec.trials; ++t) {
        report.trial_records.push_back({param, t, "MF-NB", mf_nb[s][t], kNaN, spec.rank});
        if (s == 0) {
          report.trial_records.push_back({param, t, "MF-IPS", mf_true[t], kNaN, spec.rank});
          report.trial_records.push_back({param, t, "MF-Naive", mf_naive[t], kNaN, spec.rank});
        }
      }
    }
  }
  return report;
}

void SweepReport::write_csv(std::ostream& out) const {
  out << kCsvHeader << '\n';
  for (const ReportRow& r : rows) {
    out << r.sweep << ',' << io::format_double(r.param) << ',' << r.predictor << ',' << r.estimator << ','
        << r.metric << ',' << io::format_double(r.true_value) << ',' << io::format_double(r.mean) << ','
        << io::format_double(r.std) << ',' << io::format_double(r.rmse) << ',' << r.trials << '\n';
  }
}

void SweepReport::write_trials_csv(std::ostream& out) const {
  out << "param,trial,method,true_mse,lambda,rank\n";
  for (const TrialRecord& r : trial_records) {
    out << io::format_double(r.param) << ',' << r.trial << ',' << r.method << ',' << io::format_double(r.true_mse)
        << ',' << io::format_double(r.lambda) << ',' << r.rank << '\n';
  }
}

const ReportRow& SweepReport::find(double param, const std::string& predictor, const std::string& estimator,
                                   const std::string& metric) const {
  for (const ReportRow& r : rows) {
    if (r.param == param && r.predictor == predictor && r.estimator == estimator && r.metric == metric) return r;
  }
  throw InvalidArgument("no report row for (" + io::format_double(param) + ", " + predictor + ", " + estimator +
                        ", " + metric + ")");
}

}  // namespace mnar
