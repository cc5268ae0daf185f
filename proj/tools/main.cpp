#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <fstream>
#include <iostream>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mnar/bounds.hpp"
#include "mnar/errors.hpp"
#include "mnar/estimators.hpp"
#include "mnar/experiments.hpp"
#include "mnar/factorization.hpp"
#include "mnar/io.hpp"
#include "mnar/propensity.hpp"
#include "mnar/rng.hpp"
#include "mnar/synthdata.hpp"

namespace {

using namespace mnar;

// Options every subcommand carries.
struct Common {
  std::uint64_t seed = 1;
  std::string out;
  std::string config;
};

void add_common(CLI::App* cmd, Common& common) {
  cmd->add_option("--seed", common.seed, "Master seed");
  cmd->add_option("--out", common.out, "Output path (default: stdout)");
  cmd->add_option("--config", common.config, "Flat key=value file; keys are option names without dashes");
}

// Values from the config file fill options that were not given on the command line.
void apply_config(CLI::App* cmd, const std::string& path) {
  for (const auto& [key, value] : io::read_config(std::filesystem::path(path))) {
    if (key == "config") throw InvalidArgument("config files cannot include other config files");
    CLI::Option* opt = cmd->get_option_no_throw("--" + key);
    if (opt == nullptr) throw InvalidArgument("unknown config key '" + key + "' for '" + cmd->get_name() + "'");
    if (opt->count() > 0) continue;
    if (opt->get_type_size() == 0) {
      if (value == "true" || value == "1") opt->add_result("true");
      else if (value != "false" && value != "0") throw InvalidArgument("config key '" + key + "' expects true/false");
    } else {
      opt->add_result(value);
    }
    opt->run_callback();
  }
}

// Writes to --out or stdout.
class Output {
 public:
  explicit Output(const std::string& path) {
    if (!path.empty()) {
      file_ = std::make_unique<std::ofstream>(path);
      if (!*file_) throw InvalidArgument("cannot open '" + path + "' for writing");
    }
  }
  std::ostream& stream() { return file_ ? *file_ : std::cout; }

 private:
  std::unique_ptr<std::ofstream> file_;
};

void require(bool condition, const std::string& message) {
  if (!condition) throw InvalidArgument(message);
}

// Where estimate/train/cv get their propensities from.
struct PropensitySource {
  std::string props_path;
  std::string method = "uniform";
  std::string mcar_path;
  double laplace = kDefaultLaplaceAlpha;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--props", props_path, "Propensity matrix file (overrides --propensity)");
    cmd->add_option("--propensity", method, "uniform | nb")->check(CLI::IsMember({"uniform", "nb"}));
    cmd->add_option("--mcar", mcar_path, "MCAR observation file for --propensity nb");
    cmd->add_option("--laplace", laplace, "Laplace pseudo-count for --propensity nb");
  }

  PropensityMatrix resolve(const ObservationSample& obs) const {
    if (!props_path.empty()) {
      PropensityMatrix props = io::read_propensity_matrix(props_path);
      require_same_dims(obs, props);
      return props;
    }
    if (method == "nb") {
      require(!mcar_path.empty(), "--propensity nb requires --mcar");
      const ObservationSample mcar = io::read_observations(std::filesystem::path(mcar_path));
      std::vector<double> ratings;
      for (const Rating& r : mcar.entries()) ratings.push_back(r.value);
      return nb_propensity_matrix(fit_naive_bayes(obs, ratings, laplace), obs).matrix;
    }
    return uniform_propensities(obs);
  }
};

// Semi-synthetic ground truth: loaded from --truth or built from the seed.
struct TruthSource {
  std::string truth_path;
  GroundTruthConfig config;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--truth", truth_path, "Ground-truth rating matrix file (default: build one from --seed)");
    add_generator_options(cmd, config);
  }

  static void add_generator_options(CLI::App* cmd, GroundTruthConfig& config) {
    cmd->add_option("--users", config.source.users, "Users in the synthetic source");
    cmd->add_option("--items", config.source.items, "Items in the synthetic source");
    cmd->add_option("--density", config.source.density, "Revealed fraction of the synthetic source");
    cmd->add_option("--source-rank", config.source.rank, "Rank of the synthetic source scores");
    cmd->add_option("--noise", config.source.noise, "Score noise of the synthetic source");
    cmd->add_option("--source-alpha", config.source.alpha, "Observation-model alpha of the synthetic source");
    cmd->add_option("--completion-rank", config.completion.mf.rank, "Rank of the completion MF");
    cmd->add_option("--completion-lambdas", config.completion_lambda_grid, "Completion lambda grid")
        ->delimiter(',');
  }

  RatingMatrix resolve(std::uint64_t seed) const {
    if (!truth_path.empty()) return io::read_rating_matrix(std::filesystem::path(truth_path));
    return build_ground_truth(config, seed).truth;
  }
};

std::vector<LossKind> parse_metrics(const std::vector<std::string>& names) {
  std::vector<LossKind> out;
  for (const std::string& n : names) out.push_back(LossKind::parse(n));
  return out;
}

RatingMatrix load_predictions(const std::string& pred_path, const std::string& model_path) {
  require(pred_path.empty() != model_path.empty(), "exactly one of --pred and --model is required");
  if (!model_path.empty()) return predict(io::load_model(std::filesystem::path(model_path)));
  return io::read_rating_matrix(std::filesystem::path(pred_path));
}

TrainLoss parse_train_loss(const std::string& text) { return text == "mae" ? TrainLoss::MAE : TrainLoss::MSE; }

DescentMethod parse_method(const std::string& text) {
  return text == "gd" ? DescentMethod::GradientDescent : DescentMethod::LBFGS;
}

std::string to_string(StopReason reason) {
  switch (reason) {
    case StopReason::GradientTolerance: return "gradient-tolerance";
    case StopReason::MaxIterations: return "max-iterations";
    case StopReason::LineSearchFailed: return "line-search-failed";
  }
  return "?";
}

// Training options shared by train and cv.
struct TrainOptions {
  TrainConfig config;
  std::string loss = "mse";
  std::string method = "lbfgs";

  void add_to(CLI::App* cmd, bool with_lambda_rank) {
    if (with_lambda_rank) {
      cmd->add_option("--lambda", config.lambda, "L2 strength on the factors");
      cmd->add_option("--rank", config.rank, "Factor rank d");
    }
    cmd->add_option("--loss", loss, "mse | mae")->check(CLI::IsMember({"mse", "mae"}));
    cmd->add_option("--max-iter", config.max_iterations, "Iteration cap");
    cmd->add_option("--tol", config.tolerance, "Gradient max-norm tolerance");
    cmd->add_option("--init-scale", config.init_scale, "Std of the initial factors");
    cmd->add_option("--optimizer", method, "lbfgs | gd")->check(CLI::IsMember({"lbfgs", "gd"}));
  }

  TrainConfig resolve(std::uint64_t seed) const {
    TrainConfig c = config;
    c.loss = parse_train_loss(loss);
    c.method = parse_method(method);
    c.seed = seed;
    return c;
  }
};

std::string error_kind(const std::exception& e) {
  if (dynamic_cast<const InvalidArgument*>(&e)) return "invalid-argument";
  if (dynamic_cast<const UndefinedEstimate*>(&e)) return "undefined-estimate";
  if (dynamic_cast<const Infeasible*>(&e)) return "infeasible";
  if (dynamic_cast<const FormatError*>(&e)) return "format-error";
  if (dynamic_cast<const DivergenceError*>(&e)) return "divergence";
  if (dynamic_cast<const Error*>(&e)) return "error";
  return "internal";
}

void print_error(const std::string& kind, const std::string& message) {
  std::cerr << nlohmann::json{{"error", kind}, {"message", message}}.dump() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Propensity-scored evaluation and training of recommenders under selection bias"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  // ingest ------------------------------------------------------------------
  Common ingest_common;
  std::string ingest_input, ingest_format = "tsv", ingest_users, ingest_items;
  auto* ingest = app.add_subcommand("ingest", "Convert a ratings triplet file to the native observation format");
  add_common(ingest, ingest_common);
  ingest->add_option("--input", ingest_input, "Triplet file (user, item, rating[, timestamp])");
  ingest->add_option("--format", ingest_format, "tsv | ml100k | csv");
  ingest->add_option("--users", ingest_users, "Existing user id map (ids must already be known)");
  ingest->add_option("--items", ingest_items, "Existing item id map (ids must already be known)");

  // complete ----------------------------------------------------------------
  Common complete_common;
  GroundTruthConfig complete_config;
  std::string complete_input, complete_format = "tsv", complete_source_out;
  std::optional<double> complete_lambda;
  std::vector<double> complete_marginal;
  auto* complete = app.add_subcommand("complete", "Build a fully known semi-synthetic rating matrix");
  add_common(complete, complete_common);
  complete->add_option("--input", complete_input, "Partial ratings triplet file (default: synthetic source)");
  complete->add_option("--format", complete_format, "tsv | ml100k | csv");
  complete->add_option("--lambda", complete_lambda, "Completion lambda (skips the 90/10 selection)");
  complete->add_option("--marginal", complete_marginal, "Target marginal p1,...,p5")->delimiter(',');
  complete->add_option("--source-out", complete_source_out, "Write the partial ratings in native format");
  TruthSource::add_generator_options(complete, complete_config);

  // propensities ------------------------------------------------------------
  Common props_common;
  std::string props_method = "observation", props_truth, props_obs, props_mcar, props_features,
              props_features_format = "tsv";
  ObservationModelConfig props_model;
  double props_laplace = kDefaultLaplaceAlpha;
  LogisticConfig props_logistic;
  auto* props = app.add_subcommand("propensities", "Compute or estimate a propensity matrix");
  add_common(props, props_common);
  props->add_option("--method", props_method, "observation | uniform | nb | logistic")
      ->check(CLI::IsMember({"observation", "uniform", "nb", "logistic"}));
  props->add_option("--truth", props_truth, "Rating matrix (observation)");
  props->add_option("--alpha", props_model.alpha, "Observation-model alpha (observation)");
  props->add_option("--target", props_model.target_fraction, "Expected revealed fraction (observation)");
  props->add_option("--obs", props_obs, "Observation file (uniform, nb, logistic)");
  props->add_option("--mcar", props_mcar, "MCAR observation file (nb)");
  props->add_option("--laplace", props_laplace, "Laplace pseudo-count (nb)");
  props->add_option("--features", props_features, "Pair feature file keyed by 0-based indices (logistic)");
  props->add_option("--features-format", props_features_format, "tsv | csv");
  props->add_option("--reg", props_logistic.regularization, "L2 strength (logistic)");
  props->add_flag("--penalize-offsets", props_logistic.penalize_offsets, "Also penalize offsets (logistic)");

  // sample ------------------------------------------------------------------
  Common sample_common;
  std::string sample_truth, sample_props;
  auto* sample = app.add_subcommand("sample", "Draw an observation pattern by independent Bernoulli reveals");
  add_common(sample, sample_common);
  sample->add_option("--truth", sample_truth, "Rating matrix");
  sample->add_option("--props", sample_props, "Propensity matrix");

  // estimate ----------------------------------------------------------------
  Common estimate_common;
  std::string estimate_obs, estimate_pred, estimate_model, estimate_truth;
  std::vector<std::string> estimate_metrics = {"MAE"};
  std::vector<std::string> estimate_estimators = {"Naive", "IPS", "SNIPS"};
  double estimate_eta = 0.05;
  PropensitySource estimate_props;
  auto* est = app.add_subcommand("estimate", "Estimate the risk of a prediction matrix from observed ratings");
  add_common(est, estimate_common);
  est->add_option("--obs", estimate_obs, "Observation file");
  est->add_option("--pred", estimate_pred, "Prediction matrix file");
  est->add_option("--model", estimate_model, "Model file");
  est->add_option("--truth", estimate_truth, "Full rating matrix: adds true risk and tail bound rows");
  est->add_option("--metric", estimate_metrics, "MAE, MSE, ACC, DCG, DCG@k, PREC@k")->delimiter(',');
  est->add_option("--estimator", estimate_estimators, "Naive, IPS, SNIPS")->delimiter(',');
  est->add_option("--eta", estimate_eta, "Confidence parameter for the tail bound row");
  estimate_props.add_to(est);

  // train -------------------------------------------------------------------
  Common train_common;
  std::string train_obs;
  TrainOptions train_options;
  PropensitySource train_props;
  auto* train_cmd = app.add_subcommand("train", "Train a propensity-weighted matrix factorization model");
  add_common(train_cmd, train_common);
  train_cmd->add_option("--obs", train_obs, "Observation file");
  train_options.add_to(train_cmd, true);
  train_props.add_to(train_cmd);

  // cv ----------------------------------------------------------------------
  Common cv_common;
  std::string cv_obs, cv_model_out;
  std::vector<double> cv_lambdas = default_lambda_grid();
  std::vector<std::size_t> cv_ranks = default_rank_grid();
  std::size_t cv_folds = 4;
  TrainOptions cv_options;
  PropensitySource cv_props;
  auto* cv = app.add_subcommand("cv", "Cross-validate lambda and rank by held-out IPS");
  add_common(cv, cv_common);
  cv->add_option("--obs", cv_obs, "Observation file");
  cv->add_option("--lambdas", cv_lambdas, "Lambda grid")->delimiter(',');
  cv->add_option("--ranks", cv_ranks, "Rank grid")->delimiter(',');
  cv->add_option("--folds", cv_folds, "Number of folds");
  cv->add_option("--model-out", cv_model_out, "Save the model retrained on all observations");
  cv_options.add_to(cv, false);
  cv_props.add_to(cv);

  // sweep / table1 / robustness ---------------------------------------------
  auto add_experiment = [&](CLI::App* cmd, ExperimentSpec& spec, std::vector<std::string>& metrics,
                            std::string& trials_out) {
    cmd->add_option("--trials", spec.trials, "Sampled observation patterns per setting");
    cmd->add_option("--metrics", metrics, "Metrics, e.g. MAE,DCG@50")->delimiter(',');
    cmd->add_option("--target", spec.target_fraction, "Expected revealed fraction");
    cmd->add_option("--threads", spec.threads, "Worker threads for trials");
    cmd->add_option("--rank", spec.rank, "Rank of trained models");
    cmd->add_option("--lambdas", spec.lambda_grid, "Lambda grid for trained models")->delimiter(',');
    cmd->add_option("--folds", spec.folds, "Cross-validation folds for trained models");
    cmd->add_option("--max-iter", spec.max_iterations, "Iteration cap for trained models");
    cmd->add_option("--trials-out", trials_out, "Per-trial CSV of trained models");
  };

  Common sweep_common;
  ExperimentSpec sweep_spec;
  sweep_spec.alphas = {0.03125, 0.0625, 0.125, 0.25, 0.5, 1.0};
  std::vector<std::string> sweep_metrics = {"MAE", "DCG@50"};
  std::string sweep_kind = "eval", sweep_trials_out;
  TruthSource sweep_truth;
  auto* sweep = app.add_subcommand("sweep", "Vary the selection-bias strength alpha");
  add_common(sweep, sweep_common);
  sweep->add_option("--kind", sweep_kind, "eval | learn")->check(CLI::IsMember({"eval", "learn"}));
  sweep->add_option("--alphas", sweep_spec.alphas, "Alpha values")->delimiter(',');
  add_experiment(sweep, sweep_spec, sweep_metrics, sweep_trials_out);
  sweep_truth.add_to(sweep);

  Common table_common;
  ExperimentSpec table_spec;
  double table_alpha = 0.25;
  std::vector<std::string> table_metrics = {"MAE", "DCG@50"};
  std::string table_trials_out;
  TruthSource table_truth;
  auto* table = app.add_subcommand("table1", "Naive, IPS and SNIPS estimates for the five reference predictors");
  add_common(table, table_common);
  table->add_option("--alpha", table_alpha, "Observation-model alpha");
  add_experiment(table, table_spec, table_metrics, table_trials_out);
  table_truth.add_to(table);

  Common robust_common;
  ExperimentSpec robust_spec;
  double robust_alpha = 0.25;
  std::vector<std::string> robust_metrics = {"MSE"};
  std::string robust_trials_out;
  TruthSource robust_truth;
  auto* robust = app.add_subcommand("robustness", "Naive Bayes propensities from MCAR samples of varying size");
  add_common(robust, robust_common);
  robust->add_option("--alpha", robust_alpha, "Observation-model alpha");
  robust->add_option("--mcar-sizes", robust_spec.mcar_sizes, "MCAR sample sizes")->delimiter(',');
  robust->add_option("--laplace", robust_spec.laplace_alpha, "Laplace pseudo-count");
  robust->add_flag("--learn", robust_spec.learn, "Also train MF with each propensity source");
  add_experiment(robust, robust_spec, robust_metrics, robust_trials_out);
  robust_truth.add_to(robust);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    print_error("usage", e.what());
    return e.get_exit_code() == 0 ? 2 : e.get_exit_code();
  }

  try {
    // ingest
    if (*ingest) {
      if (!ingest_common.config.empty()) apply_config(ingest, ingest_common.config);
      require(!ingest_input.empty(), "--input is required");
      require(!ingest_common.out.empty(), "--out is required");
      const io::TripletFormat format = io::parse_triplet_format(ingest_format);
      require(ingest_users.empty() == ingest_items.empty(), "--users and --items go together");
      if (!ingest_users.empty()) {
        const ObservationSample obs = io::ingest_triplets(std::filesystem::path(ingest_input), format,
                                                          io::read_id_map(ingest_users), io::read_id_map(ingest_items));
        io::write_observations(std::filesystem::path(ingest_common.out), obs);
        std::cout << "ratings=" << obs.size() << " users=" << obs.rows() << " items=" << obs.cols() << '\n';
      } else {
        const io::TripletData data = io::ingest_triplets(std::filesystem::path(ingest_input), format);
        io::write_observations(std::filesystem::path(ingest_common.out), data.sample);
        io::write_id_map(ingest_common.out + ".users", data.users);
        io::write_id_map(ingest_common.out + ".items", data.items);
        std::cout << "ratings=" << data.sample.size() << " users=" << data.users.size()
                  << " items=" << data.items.size() << '\n';
      }
      return 0;
    }

    // complete
    if (*complete) {
      if (!complete_common.config.empty()) apply_config(complete, complete_common.config);
      require(!complete_common.out.empty(), "--out is required");
      if (!complete_marginal.empty()) {
        require(complete_marginal.size() == 5, "--marginal takes five probabilities");
        complete_config.marginal = MarginalDistribution({complete_marginal[0], complete_marginal[1],
                                                         complete_marginal[2], complete_marginal[3],
                                                         complete_marginal[4]});
      }
      if (complete_lambda) {
        complete_config.completion.mf.lambda = *complete_lambda;
        complete_config.completion_lambda_grid.clear();
      }
      GroundTruth gt = [&] {
        if (complete_input.empty()) return build_ground_truth(complete_config, complete_common.seed);
        ObservationSample partial =
            io::ingest_triplets(std::filesystem::path(complete_input), io::parse_triplet_format(complete_format))
                .sample;
        CompletionConfig completion = complete_config.completion;
        completion.mf.seed = rng::derive_seed(complete_common.seed, 11);
        if (!complete_config.completion_lambda_grid.empty()) {
          completion.mf.lambda = select_completion_lambda(partial, complete_config.completion_lambda_grid,
                                                          completion, rng::derive_seed(complete_common.seed, 12));
        }
        RatingMatrix truth = complete_and_adjust(partial, complete_config.marginal, completion);
        return GroundTruth{std::move(truth), std::move(partial), completion.mf.lambda};
      }();
      io::write_matrix(std::filesystem::path(complete_common.out), gt.truth);
      if (!complete_source_out.empty()) io::write_observations(std::filesystem::path(complete_source_out), gt.source);
      std::cout << "users=" << gt.truth.rows() << " items=" << gt.truth.cols()
                << " completion_lambda=" << io::format_double(gt.completion_lambda) << '\n';
      return 0;
    }

    // propensities
    if (*props) {
      if (!props_common.config.empty()) apply_config(props, props_common.config);
      require(!props_common.out.empty(), "--out is required");
      const std::filesystem::path out(props_common.out);
      if (props_method == "observation") {
        require(!props_truth.empty(), "--truth is required");
        const ObservationModel model =
            observation_propensities(io::read_rating_matrix(std::filesystem::path(props_truth)), props_model);
        io::write_matrix(out, model.propensities);
        std::cout << "scale=" << io::format_double(model.scale) << '\n';
        return 0;
      }
      require(!props_obs.empty(), "--obs is required");
      const ObservationSample obs = io::read_observations(std::filesystem::path(props_obs));
      if (props_method == "uniform") {
        io::write_matrix(out, uniform_propensities(obs));
      } else if (props_method == "nb") {
        require(!props_mcar.empty(), "--mcar is required");
        std::vector<double> ratings;
        for (const Rating& r : io::read_observations(std::filesystem::path(props_mcar)).entries())
          ratings.push_back(r.value);
        const ImputedPropensities nb = nb_propensity_matrix(fit_naive_bayes(obs, ratings, props_laplace), obs);
        io::write_matrix(out, nb.matrix);
        std::cout << "clamped=" << nb.clamped_count << '\n';
      } else {
        require(!props_features.empty(), "--features is required");
        io::IdMap users, items;
        for (std::size_t u = 0; u < obs.rows(); ++u) users.intern(std::to_string(u));
        for (std::size_t i = 0; i < obs.cols(); ++i) items.intern(std::to_string(i));
        const PairFeatures features = io::read_pair_features(
            props_features, io::parse_triplet_format(props_features_format), users, items);
        const LogisticFit fit = fit_logistic(obs, features, props_logistic);
        io::write_matrix(out, lr_propensity_matrix(fit.model, features));
        std::cout << "log_likelihood=" << io::format_double(fit.log_likelihood) << " iterations=" << fit.iterations
                  << " converged=" << (fit.converged ? "true" : "false") << '\n';
      }
      return 0;
    }

    // sample
    if (*sample) {
      if (!sample_common.config.empty()) apply_config(sample, sample_common.config);
      require(!sample_truth.empty() && !sample_props.empty(), "--truth and --props are required");
      require(!sample_common.out.empty(), "--out is required");
      const ObservationSample obs =
          sample_observations(io::read_rating_matrix(std::filesystem::path(sample_truth)),
                              io::read_propensity_matrix(sample_props), sample_common.seed);
      io::write_observations(std::filesystem::path(sample_common.out), obs);
      std::cout << "revealed=" << obs.size() << '\n';
      return 0;
    }

    // estimate
    if (*est) {
      if (!estimate_common.config.empty()) apply_config(est, estimate_common.config);
      require(!estimate_obs.empty(), "--obs is required");
      const ObservationSample obs = io::read_observations(std::filesystem::path(estimate_obs));
      const RatingMatrix pred = load_predictions(estimate_pred, estimate_model);
      require_same_dims(obs, pred);
      const PropensityMatrix p = estimate_props.resolve(obs);
      std::optional<RatingMatrix> truth;
      if (!estimate_truth.empty()) {
        truth = io::read_rating_matrix(std::filesystem::path(estimate_truth));
        require_same_dims(obs, *truth);
        obs.require_consistent_with(*truth);
      }
      Output out(estimate_common.out);
      out.stream() << "estimator,metric,value,observed_count,normalizer\n";
      for (const LossKind& metric : parse_metrics(estimate_metrics)) {
        const LossEvaluator loss(pred, metric);
        for (const std::string& name : estimate_estimators) {
          EstimatorKind kind;
          if (name == "Naive") kind = EstimatorKind::Naive;
          else if (name == "IPS") kind = EstimatorKind::IPS;
          else if (name == "SNIPS") kind = EstimatorKind::SNIPS;
          else throw InvalidArgument("unknown estimator '" + name + "'");
          const EstimateReport r = estimate(kind, obs, loss, p);
          out.stream() << to_string(kind) << ',' << metric.name() << ',' << io::format_double(r.value) << ','
                       << r.observed_count << ',' << io::format_double(r.normalizer) << '\n';
        }
        if (truth) {
          out.stream() << "True," << metric.name() << ',' << io::format_double(true_risk(*truth, pred, metric))
                       << ',' << obs.size() << ',' << obs.cells() << '\n';
          out.stream() << "IPSTailBound," << metric.name() << ','
                       << io::format_double(ips_tail_bound(*truth, pred, p, metric, estimate_eta)) << ','
                       << obs.size() << ',' << obs.cells() << '\n';
        }
      }
      return 0;
    }

    // train
    if (*train_cmd) {
      if (!train_common.config.empty()) apply_config(train_cmd, train_common.config);
      require(!train_obs.empty(), "--obs is required");
      require(!train_common.out.empty(), "--out is required");
      const ObservationSample obs = io::read_observations(std::filesystem::path(train_obs));
      const TrainResult result = train_detailed(obs, train_props.resolve(obs), train_options.resolve(train_common.seed));
      io::save_model(std::filesystem::path(train_common.out), result.model);
      std::cout << "objective=" << io::format_double(result.descent.value)
                << " iterations=" << result.descent.iterations << " stop=" << to_string(result.descent.reason)
                << '\n';
      return 0;
    }

    // cv
    if (*cv) {
      if (!cv_common.config.empty()) apply_config(cv, cv_common.config);
      require(!cv_obs.empty(), "--obs is required");
      const ObservationSample obs = io::read_observations(std::filesystem::path(cv_obs));
      const CvResult result =
          cross_validate(obs, cv_props.resolve(obs), cv_lambdas, cv_ranks, cv_folds, cv_options.resolve(cv_common.seed));
      std::cerr << "fold propensity scaling: train=" << io::format_double(result.train_scale)
                << " validation=" << io::format_double(result.validation_scale) << '\n';
      Output out(cv_common.out);
      out.stream() << "lambda,rank,mean_score";
      for (std::size_t k = 0; k < cv_folds; ++k) out.stream() << ",fold" << k;
      out.stream() << ",selected\n";
      for (const CvCell& cell : result.cells) {
        out.stream() << io::format_double(cell.lambda) << ',' << cell.rank << ',' << io::format_double(cell.mean_score);
        for (double s : cell.fold_scores) out.stream() << ',' << io::format_double(s);
        const bool selected = cell.lambda == result.best_lambda && cell.rank == result.best_rank;
        out.stream() << ',' << (selected ? 1 : 0) << '\n';
      }
      if (!cv_model_out.empty()) io::save_model(std::filesystem::path(cv_model_out), result.model);
      std::cerr << "selected: lambda=" << io::format_double(result.best_lambda) << " rank=" << result.best_rank
                << '\n';
      return 0;
    }

    auto finish = [](const SweepReport& report, const Common& common, const std::string& trials_out) {
      Output out(common.out);
      report.write_csv(out.stream());
      if (!trials_out.empty()) {
        Output trials(trials_out);
        report.write_trials_csv(trials.stream());
      }
    };

    if (*sweep) {
      if (!sweep_common.config.empty()) apply_config(sweep, sweep_common.config);
      sweep_spec.kind = sweep_kind == "learn" ? ExperimentKind::AlphaSweepLearn : ExperimentKind::AlphaSweepEval;
      sweep_spec.seed = sweep_common.seed;
      sweep_spec.metrics = parse_metrics(sweep_metrics);
      if (sweep_kind == "learn" && sweep->get_option("--trials")->count() == 0) sweep_spec.trials = 30;
      finish(run_alpha_sweep(sweep_spec, sweep_truth.resolve(sweep_common.seed)), sweep_common, sweep_trials_out);
      return 0;
    }
    if (*table) {
      if (!table_common.config.empty()) apply_config(table, table_common.config);
      table_spec.kind = ExperimentKind::EstimatorTable;
      table_spec.alphas = {table_alpha};
      table_spec.seed = table_common.seed;
      table_spec.metrics = parse_metrics(table_metrics);
      finish(run_estimator_table(table_spec, table_truth.resolve(table_common.seed)), table_common,
             table_trials_out);
      return 0;
    }
    if (*robust) {
      if (!robust_common.config.empty()) apply_config(robust, robust_common.config);
      robust_spec.kind = ExperimentKind::RobustnessSweep;
      robust_spec.alphas = {robust_alpha};
      robust_spec.seed = robust_common.seed;
      robust_spec.metrics = parse_metrics(robust_metrics);
      finish(run_robustness_sweep(robust_spec, robust_truth.resolve(robust_common.seed)), robust_common,
             robust_trials_out);
      return 0;
    }
  } catch (const CLI::Error& e) {
    print_error("usage", e.what());
    return 2;
  } catch (const std::exception& e) {
    print_error(error_kind(e), e.what());
    return 1;
  }
  return 0;
}
