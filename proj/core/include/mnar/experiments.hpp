#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mnar/estimators.hpp"
#include "mnar/factorization.hpp"
#include "mnar/loss.hpp"
#include "mnar/propensity.hpp"
#include "mnar/synthdata.hpp"
#include "mnar/types.hpp"

namespace mnar {

/// Semi-synthetic ground truth: desk-scale MNAR source log, MF completion, quantile adjustment.
struct GroundTruthConfig {
  SourceConfig source;
  MarginalDistribution marginal = default_marginal();
  CompletionConfig completion;
  /// When non-empty, the completion lambda is picked by select_completion_lambda() over this grid.
  std::vector<double> completion_lambda_grid = {0.1, 1.0, 10.0, 100.0};
};

struct GroundTruth {
  RatingMatrix truth;
  ObservationSample source;
  double completion_lambda;
};

GroundTruth build_ground_truth(const GroundTruthConfig& config, std::uint64_t seed);

enum class ExperimentKind { EstimatorTable, AlphaSweepEval, AlphaSweepLearn, RobustnessSweep };

std::string to_string(ExperimentKind kind);

struct ExperimentSpec {
  ExperimentKind kind = ExperimentKind::EstimatorTable;
  std::size_t trials = 50;
  std::vector<double> alphas = {0.25};
  std::uint64_t seed = 1;
  std::vector<LossKind> metrics = {LossKind::mae(), LossKind::dcg_at(50)};
  double target_fraction = 0.05;

  // Learning runs (alpha-sweep-learn, robustness with learn = true).
  std::size_t rank = 20;
  std::vector<double> lambda_grid;  ///< empty: learning_lambda_grid()
  std::size_t folds = 4;
  std::size_t max_iterations = 300;
  double tolerance = 1e-6;

  // Robustness sweep.
  std::vector<std::size_t> mcar_sizes = {100, 1000, 10000};
  double laplace_alpha = kDefaultLaplaceAlpha;
  bool learn = false;

  /// Trials run on this many threads. Results do not depend on it.
  std::size_t threads = 1;

  void validate() const;
};

/// Lambda grid used by the learning experiments: 1e-2 ... 1e3 by decades. The unnormalized
/// objective scales its data term with the inverse propensities, so useful lambdas sit above 1.
std::vector<double> learning_lambda_grid();

/// One CSV record. For pooled rows (predictor "ALL") mean/std describe the estimation error
/// (estimate - truth) and true_value is NaN; otherwise they describe the estimates themselves.
struct ReportRow {
  std::string sweep;
  double param;
  std::string predictor;
  std::string estimator;
  std::string metric;
  double true_value;
  double mean;
  double std;
  double rmse;
  std::size_t trials;
};

/// One trained model in a learning experiment.
struct TrialRecord {
  double param;
  std::size_t trial;
  std::string method;
  double true_mse;
  double lambda;
  std::size_t rank;
};

struct SweepReport {
  std::vector<ReportRow> rows;
  std::vector<TrialRecord> trial_records;

  static constexpr const char* kCsvHeader =
      "sweep,param,predictor,estimator,metric,true_value,mean,std,rmse,trials";

  void write_csv(std::ostream& out) const;
  void write_trials_csv(std::ostream& out) const;

  /// First row matching all given fields; throws InvalidArgument if none.
  const ReportRow& find(double param, const std::string& predictor, const std::string& estimator,
                        const std::string& metric) const;
};

/// Mean and standard deviation of each estimator over sampled patterns at alphas.front(),
/// next to the exact true values, for the five reference predictors.
SweepReport run_estimator_table(const ExperimentSpec& spec, const RatingMatrix& truth);

/// Evaluation sweep: per alpha, RMSE of each estimator against the true metric (pooled over
/// predictors and trials) plus per-predictor rows. Learning sweep: per alpha, true MSE of
/// IPS-weighted vs uniform-weighted MF, each with its own cross-validated lambda.
SweepReport run_alpha_sweep(const ExperimentSpec& spec, const RatingMatrix& truth);

/// Per MCAR sample size: estimation error of IPS/SNIPS with Naive Bayes propensities, with
/// true-propensity IPS and Naive as references; "exact" rows (param = +inf) use the exact marginal.
/// With spec.learn, also the true MSE of MF trained with each propensity source.
SweepReport run_robustness_sweep(const ExperimentSpec& spec, const RatingMatrix& truth);

/// Runs fn(trial) for trial in [0, n) on `threads` workers. fn must only touch its own slot.
void for_each_trial(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn);

}  // namespace mnar
