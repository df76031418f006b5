#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include "l2c/augmentation.hpp"
#include "l2c/bridge.hpp"
#include "l2c/cohort.hpp"
#include "l2c/csv.hpp"
#include "l2c/error.hpp"
#include "l2c/evaluation.hpp"
#include "l2c/feature_table.hpp"
#include "l2c/forecasting.hpp"
#include "l2c/predictors.hpp"
#include "l2c/splitting.hpp"
#include "l2c/synth.hpp"

namespace l2c::cli {
namespace {

namespace fs = std::filesystem;

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

std::vector<Task> parse_tasks(const std::string& name) {
  if (lower(name) == "all") return {Task::DX, Task::ADAS, Task::Ventricles};
  return {parse_task(name)};
}

std::string file_stem(Task task) { return lower(std::string(task_name(task))); }

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    auto v = csv::parse_number(item);
    if (!v || *v < 0 || *v != static_cast<double>(static_cast<std::uint64_t>(*v))) {
      fail(ErrorKind::Config, "invalid seed '" + item + "'");
    }
    seeds.push_back(static_cast<std::uint64_t>(*v));
  }
  if (seeds.empty()) fail(ErrorKind::Config, "at least one seed required");
  return seeds;
}

/// "a:b" or "a:b:step" ranges and comma lists, e.g. "1:60" or "6,12,24".
std::vector<double> parse_horizons(const std::string& text) {
  if (text.find(':') != std::string::npos) {
    std::vector<double> parts;
    std::stringstream in(text);
    std::string item;
    while (std::getline(in, item, ':')) {
      auto v = csv::parse_number(item);
      if (!v) fail(ErrorKind::Config, "invalid horizon range '" + text + "'");
      parts.push_back(*v);
    }
    if (parts.size() < 2 || parts.size() > 3) fail(ErrorKind::Config, "horizon range must be first:last[:step]");
    return horizon_grid(parts[0], parts[1], parts.size() == 3 ? parts[2] : 1.0);
  }
  std::vector<double> horizons;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    auto v = csv::parse_number(item);
    if (!v || *v <= 0) fail(ErrorKind::Config, "invalid horizon '" + item + "'");
    horizons.push_back(*v);
  }
  if (horizons.empty()) fail(ErrorKind::Config, "no horizons given");
  return horizons;
}

struct CohortFlags {
  std::vector<std::string> columns;
  std::vector<std::string> sentinels;
  std::vector<std::string> features;
  bool strict = false;
  char delimiter = ',';
  double ventricles_scale = 1.0;

  void add_to(CLI::App* app) {
    app->add_option("--column", columns, "Column mapping field=NAME (fields: id, month, dx, apoe4, sex, educ, "
                                         "marital, age, d1, d2, or a feature name)");
    app->add_option("--sentinel", sentinels, "Missing-value sentinel (replaces the default set)");
    app->add_option("--features", features, "Numeric features to read (default: TADPOLE biomarkers)");
    app->add_flag("--strict", strict, "Reject duplicate visits and invalid values instead of nulling them");
    app->add_option("--delimiter", delimiter, "Field delimiter");
    app->add_option("--ventricles-scale", ventricles_scale, "Multiplier applied to Ventricles/ICV");
  }

  ParseOptions options() const {
    ParseOptions o;
    for (const auto& c : columns) {
      const auto eq = c.find('=');
      if (eq == std::string::npos || eq == 0) fail(ErrorKind::Config, "--column expects field=NAME, got '" + c + "'");
      o.columns[c.substr(0, eq)] = c.substr(eq + 1);
    }
    if (!sentinels.empty()) {
      o.missing_sentinels = sentinels;
      o.missing_sentinels.emplace_back("");
    }
    if (!features.empty()) o.numeric_features = features;
    o.strict = strict;
    o.delimiter = delimiter;
    o.ventricles_scale = ventricles_scale;
    return o;
  }
};

struct PredictorFlags {
  std::string kind;
  std::size_t neighbors = 5;
  std::string host;
  std::string preset;
  std::vector<std::string> hparams;
  double timeout = 3600.0;
  std::string model_name;

  void add_to(CLI::App* app) {
    app->add_option("--predictor", kind, "constant-median | carry-forward | knn | bridge")->required();
    app->add_option("--neighbors", neighbors, "knn neighbor count")->check(CLI::PositiveNumber);
    app->add_option("--host", host, std::string("Bridge host command line (default: $") + kBridgeHostEnv + ")");
    app->add_option("--preset", preset, "Bridge hyperparameter preset: tabpfn | gbt");
    app->add_option("--hparam", hparams, "Hyperparameter key=value (value read as JSON when possible)");
    app->add_option("--timeout", timeout, "Bridge session timeout in seconds")->check(CLI::PositiveNumber);
    app->add_option("--model-name", model_name, "Model name used in reports");
  }

  PredictorConfig config(Task task) const {
    PredictorConfig c;
    c.kind = parse_predictor_kind(kind);
    c.task = task;
    if (!preset.empty()) c.hparams = bridge_preset(preset, task);
    if (c.kind == PredictorKind::Knn) c.hparams["k"] = neighbors;
    if (c.kind == PredictorKind::Bridge) {
      if (!host.empty()) c.hparams["host"] = host;
      c.hparams["timeout"] = timeout;
    }
    for (const auto& kv : hparams) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos || eq == 0) fail(ErrorKind::Config, "--hparam expects key=value, got '" + kv + "'");
      const auto value = kv.substr(eq + 1);
      auto parsed = nlohmann::ordered_json::parse(value, nullptr, false);
      c.hparams[kv.substr(0, eq)] = parsed.is_discarded() ? nlohmann::ordered_json(value) : parsed;
    }
    c.validate();
    return c;
  }

  std::string name() const {
    if (!model_name.empty()) return model_name;
    return preset.empty() ? kind : preset;
  }
};

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorKind::Io, "cannot create directory '" + dir + "': " + ec.message());
}

// ---------------------------------------------------------------- synth

struct SynthCommand {
  SynthOptions options;
  std::string out;

  void add_to(CLI::App* app) {
    app->add_option("--patients", options.patients, "Number of patients")->capture_default_str();
    app->add_option("--visits", options.visits, "Exact visits per patient (0: draw from min..max)")
        ->capture_default_str();
    app->add_option("--min-visits", options.min_visits)->capture_default_str();
    app->add_option("--max-visits", options.max_visits)->capture_default_str();
    app->add_option("--missing", options.missing, "Missingness of MMSE and CDRSB")->capture_default_str();
    app->add_option("--outcome-missing", options.outcome_missing, "Missingness of DX, ADAS13, Ventricles, ICV")
        ->capture_default_str();
    app->add_option("--reversion", options.reversion, "Probability a visit reports a milder diagnosis")
        ->capture_default_str();
    app->add_option("--d2-fraction", options.d2_fraction, "Share of patients flagged D2")->capture_default_str();
    app->add_option("--seed", options.seed)->capture_default_str();
    app->add_option("--out", out, "Output cohort file")->required();
  }

  int run(std::ostream& os) const {
    const auto cohort = synthesize(options);
    write_cohort(out, cohort);
    std::size_t visits = 0;
    for (const auto& p : cohort.patients) visits += p.visits.size();
    os << "wrote " << cohort.patients.size() << " patients, " << visits << " visits to " << out << '\n';
    return 0;
  }
};

// ---------------------------------------------------------------- transform

struct TransformCommand {
  CohortFlags cohort_flags;
  std::string input;
  std::string task = "all";
  std::string out;
  std::string test_out;
  std::string out_dir = ".";
  std::string membership = "D1";
  std::string test_membership = "D2";
  std::string cutoff_policy = "maximal";

  void add_to(CLI::App* app) {
    cohort_flags.add_to(app);
    app->add_option("--input", input, "Cohort file")->required();
    app->add_option("--task", task, "DX | ADAS | Ventricles | all")->capture_default_str();
    app->add_option("--out", out, "Training table path (single task only)");
    app->add_option("--test-out", test_out, "Test table path (single task only)");
    app->add_option("--out-dir", out_dir, "Directory for <task>_train.csv / <task>_test.csv")->capture_default_str();
    app->add_option("--membership", membership, "Training patients: D1 | D2 | all")->capture_default_str();
    app->add_option("--test-membership", test_membership, "Test patients: D1 | D2 | all")->capture_default_str();
    app->add_option("--cutoff-policy", cutoff_policy, "Test cutoffs: maximal | half")->capture_default_str();
  }

  int run(std::ostream& os, unsigned jobs) const {
    const auto tasks = parse_tasks(task);
    if (tasks.size() > 1 && (!out.empty() || !test_out.empty())) {
      fail(ErrorKind::Config, "--out/--test-out need a single --task");
    }
    const auto cohort = read_cohort(input, cohort_flags.options());
    const auto train_members = parse_membership(membership);
    const auto test_members = parse_membership(test_membership);
    const auto policy = parse_cutoff_policy(cutoff_policy);

    for (Task t : tasks) {
      std::string train_path = out;
      std::string test_path = test_out;
      const std::string dir = out.empty() ? out_dir : fs::path(out).parent_path().string();
      if (!dir.empty()) ensure_dir(dir);
      const fs::path base = dir.empty() ? fs::path(".") : fs::path(dir);
      if (train_path.empty()) train_path = (base / (file_stem(t) + "_train.csv")).string();
      if (test_path.empty()) test_path = (base / (file_stem(t) + "_test.csv")).string();

      const RowBuilder builder(cohort, t);
      std::size_t before = 0;
      for (const auto& p : cohort.patients) {
        if (selected(p, train_members)) before += consecutive_rows(builder, p).size();
      }
      const auto train = build_training_table(cohort, t, train_members, jobs);
      const auto test = build_test_table(cohort, t, policy, test_members, jobs);
      write_table(train_path, train);
      write_table(test_path, test);
      os << task_name(t) << ": before augmentation " << before << ", train " << train.rows.size() << " -> "
         << train_path << ", test " << test.rows.size() << " -> " << test_path << '\n';
    }
    return 0;
  }
};

// ---------------------------------------------------------------- split

struct SplitCommand {
  std::string input;
  std::string task;
  std::size_t k = 5;
  std::uint64_t seed = 0;
  bool stratified = false;
  std::string out;

  void add_to(CLI::App* app) {
    app->add_option("--input", input, "Training table")->required();
    app->add_option("--task", task, "DX | ADAS | Ventricles")->required();
    app->add_option("--k", k, "Fold count")->capture_default_str();
    app->add_option("--seed", seed)->capture_default_str();
    app->add_flag("--stratified", stratified, "Balance patients' latest diagnosis across folds (DX)");
    app->add_option("--out", out, "Fold assignment file (patient_id,fold)")->required();
  }

  int run(std::ostream& os) const {
    const auto table = read_table(input, parse_task(task));
    const auto folds = patient_disjoint_folds(table, k, seed, stratified);
    write_folds(out, folds);
    os << "assigned " << folds.entries.size() << " patients to " << folds.k << " folds (sizes";
    for (auto s : folds.fold_sizes()) os << ' ' << s;
    os << ") -> " << out << '\n';
    return 0;
  }
};

// ---------------------------------------------------------------- fit-eval

struct FitEvalCommand {
  CohortFlags cohort_flags;
  PredictorFlags predictor;
  std::string task;
  std::string mode = "holdout";
  std::string train_path;
  std::string test_path;
  std::string cohort_path;
  std::string folds_path;
  std::size_t k_folds = 5;
  bool stratified = false;
  std::string seeds = "0";
  std::string seed_scope = "both";
  std::uint64_t fold_seed = 0;
  std::string cutoff_policy = "maximal";
  std::string out_dir;

  void add_to(CLI::App* app) {
    cohort_flags.add_to(app);
    predictor.add_to(app);
    app->add_option("--task", task, "DX | ADAS | Ventricles | all")->required();
    app->add_option("--mode", mode, "holdout (train -> test) | cv (patient-disjoint folds)")->capture_default_str();
    app->add_option("--train", train_path, "Training table (single task)");
    app->add_option("--test", test_path, "Test table (holdout, single task)");
    app->add_option("--cohort", cohort_path, "Cohort file; builds D1 training and D2 test tables");
    app->add_option("--folds", folds_path, "Fold assignment from `split` (cv)");
    app->add_option("--k-folds", k_folds, "Fold count when no --folds file is given")->capture_default_str();
    app->add_flag("--stratified", stratified, "Stratify generated folds (DX)");
    app->add_option("--seeds", seeds, "Comma-separated seeds")->capture_default_str();
    app->add_option("--seed-scope", seed_scope, "What the seeds vary: fold | predictor | both")->capture_default_str();
    app->add_option("--fold-seed", fold_seed, "Fold seed when the scope excludes folds")->capture_default_str();
    app->add_option("--cutoff-policy", cutoff_policy, "Test cutoffs when built from --cohort: maximal | half")
        ->capture_default_str();
    app->add_option("--out-dir", out_dir, "Output directory")->required();
  }

  int run(std::ostream& os, unsigned jobs) const {
    if (mode != "holdout" && mode != "cv") fail(ErrorKind::Config, "--mode must be holdout or cv");
    if (seed_scope != "fold" && seed_scope != "predictor" && seed_scope != "both") {
      fail(ErrorKind::Config, "--seed-scope must be fold, predictor or both");
    }
    const auto tasks = parse_tasks(task);
    if (tasks.size() > 1 && (!train_path.empty() || !test_path.empty())) {
      fail(ErrorKind::Config, "--train/--test need a single --task; use --cohort for all tasks");
    }
    std::optional<Cohort> cohort;
    if (!cohort_path.empty()) cohort = read_cohort(cohort_path, cohort_flags.options());
    if (mode == "cv" && !cohort) fail(ErrorKind::Config, "cv mode needs --cohort for half-history validation rows");
    if (mode == "holdout" && !cohort && (train_path.empty() || test_path.empty())) {
      fail(ErrorKind::Config, "holdout mode needs --train and --test, or --cohort");
    }
    const auto seed_list = parse_seeds(seeds);
    const bool vary_predictor = seed_scope != "fold";
    const bool vary_folds = seed_scope != "predictor";
    ensure_dir(out_dir);
    const std::string model = predictor.name();

    std::vector<MetricReport> reports;
    for (Task t : tasks) {
      const auto config = predictor.config(t);
      const auto train = !train_path.empty() ? read_table(train_path, t)
                                             : build_training_table(*cohort, t, Membership::D1, jobs);
      std::optional<FeatureTable> test;
      if (mode == "holdout") {
        test = !test_path.empty() ? read_table(test_path, t)
                                  : build_test_table(*cohort, t, parse_cutoff_policy(cutoff_policy),
                                                     Membership::D2, jobs);
      }
      std::optional<FoldAssignment> fixed_folds;
      if (mode == "cv" && !folds_path.empty()) fixed_folds = read_folds(folds_path);

      std::map<Metric, std::vector<double>> values;
      for (auto seed : seed_list) {
        auto seeded = config;
        if (vary_predictor) seeded.hparams["seed"] = seed;
        FeatureTable evaluated;
        std::vector<PredictionRecord> predictions;
        if (mode == "holdout") {
          predictions = fit_predict(train, *test, seeded, jobs);
          evaluated = *test;
        } else {
          const auto folds = fixed_folds ? *fixed_folds
                                         : patient_disjoint_folds(train, k_folds, vary_folds ? seed : fold_seed,
                                                                  stratified);
          evaluated.task = t;
          evaluated.columns = train.columns;
          for (std::size_t f = 0; f < folds.k; ++f) {
            const auto data = make_fold(*cohort, train, folds, f);
            if (data.validation.rows.empty()) continue;
            auto p = fit_predict(data.train, data.validation, seeded, jobs);
            predictions.insert(predictions.end(), p.begin(), p.end());
            evaluated.rows.insert(evaluated.rows.end(), data.validation.rows.begin(), data.validation.rows.end());
          }
        }
        const auto pred_path =
            (fs::path(out_dir) / (model + "_" + file_stem(t) + "_seed" + std::to_string(seed) + ".csv")).string();
        write_predictions(pred_path, t, predictions);
        for (const auto& mv : evaluate(evaluated, predictions)) values[mv.metric].push_back(mv.value);
      }
      for (Metric m : task_metrics(t)) reports.push_back(make_report(t, m, model, seed_list, values[m]));
    }

    const auto json_path = (fs::path(out_dir) / (model + "_report.json")).string();
    const auto text_path = (fs::path(out_dir) / (model + "_report.txt")).string();
    write_reports(json_path, model, reports);
    std::ofstream text(text_path);
    if (!text) fail(ErrorKind::Io, "cannot write '" + text_path + "'");
    print_reports(text, reports);
    print_reports(os, reports);
    os << "reports -> " << json_path << ", " << text_path << '\n';
    return 0;
  }
};

// ---------------------------------------------------------------- forecast

struct ForecastCommand {
  CohortFlags cohort_flags;
  PredictorFlags predictor;
  std::string cohort_path;
  std::string task;
  std::string train_path;
  std::string horizons = "1:60";
  std::string membership = "D2";
  std::uint64_t seed = 0;
  std::string out;

  void add_to(CLI::App* app) {
    cohort_flags.add_to(app);
    predictor.add_to(app);
    app->add_option("--cohort", cohort_path, "Cohort file")->required();
    app->add_option("--task", task, "DX | ADAS | Ventricles")->required();
    app->add_option("--train", train_path, "Training table (default: built from the cohort's D1 patients)");
    app->add_option("--horizons", horizons, "first:last[:step] or a comma list of months")->capture_default_str();
    app->add_option("--membership", membership, "Patients to forecast: D1 | D2 | all")->capture_default_str();
    app->add_option("--seed", seed, "Predictor seed")->capture_default_str();
    app->add_option("--out", out, "Forecast table")->required();
  }

  int run(std::ostream& os, unsigned jobs) const {
    const Task t = parse_task(task);
    auto config = predictor.config(t);
    config.hparams["seed"] = seed;
    const auto cohort = read_cohort(cohort_path, cohort_flags.options());
    const auto train = !train_path.empty() ? read_table(train_path, t)
                                           : build_training_table(cohort, t, Membership::D1, jobs);
    const auto grid = parse_horizons(horizons);
    const auto rows = forecast_rows(cohort, t, parse_membership(membership), grid);
    const auto table = FeatureTable::from_rows(t, cohort.features, rows);
    const auto predictions = fit_predict(train, table, config, jobs);
    write_forecast(out, t, rows, predictions);
    os << "forecast " << rows.size() << " rows (" << grid.size() << " horizons) -> " << out << '\n';
    return 0;
  }
};

// ---------------------------------------------------------------- compare

struct CompareCommand {
  std::string a;
  std::string b;
  bool two_sided = false;
  std::string out;

  void add_to(CLI::App* app) {
    app->add_option("--a", a, "Report file of the first model")->required();
    app->add_option("--b", b, "Report file of the second model")->required();
    app->add_flag("--two-sided", two_sided, "Two-sided exact Wilcoxon p-values");
    app->add_option("--out", out, "Write the comparison as JSON");
  }

  int run(std::ostream& os) const {
    const auto left = read_reports(a);
    const auto right = read_reports(b);
    std::vector<MetricReport> compared;
    for (const auto& r : left) {
      auto match = std::find_if(right.begin(), right.end(),
                                [&](const MetricReport& o) { return o.task == r.task && o.metric == r.metric; });
      if (match == right.end()) continue;
      compared.push_back(compare(r, *match, two_sided ? Sidedness::TwoSided : Sidedness::OneSided));
    }
    if (compared.empty()) fail(ErrorKind::Schema, "the two report files share no task/metric pair");
    print_reports(os, compared);
    if (!out.empty()) write_reports(out, compared.front().model, compared);
    return 0;
  }
};

}  // namespace

int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Longitudinal-to-cross-sectional forecasting pipeline"};
  app.name("l2c");
  app.set_config("--config", "", "TOML configuration file; command-line flags override its values");
  app.require_subcommand(1, 1);
  unsigned jobs = 1;
  app.add_option("--jobs", jobs, "Worker threads for per-patient and per-row work")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  SynthCommand synth;
  TransformCommand transform;
  SplitCommand split;
  FitEvalCommand fit_eval;
  ForecastCommand forecast;
  CompareCommand compare_cmd;
  auto* synth_app = app.add_subcommand("synth", "Generate a reproducible synthetic cohort");
  auto* transform_app = app.add_subcommand("transform", "Build per-task training and test tables");
  auto* split_app = app.add_subcommand("split", "Assign patients to disjoint folds");
  auto* fit_eval_app = app.add_subcommand("fit-eval", "Fit a predictor, predict and score");
  auto* forecast_app = app.add_subcommand("forecast", "Predict on a grid of horizons");
  auto* compare_app = app.add_subcommand("compare", "Compare two models' per-seed metrics");
  synth.add_to(synth_app);
  transform.add_to(transform_app);
  split.add_to(split_app);
  fit_eval.add_to(fit_eval_app);
  forecast.add_to(forecast_app);
  compare_cmd.add_to(compare_app);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kUsageError;
  }

  try {
    if (synth_app->parsed()) return synth.run(out);
    if (transform_app->parsed()) return transform.run(out, jobs);
    if (split_app->parsed()) return split.run(out);
    if (fit_eval_app->parsed()) return fit_eval.run(out, jobs);
    if (forecast_app->parsed()) return forecast.run(out, jobs);
    if (compare_app->parsed()) return compare_cmd.run(out);
  } catch (const Error& e) {
    err << "l2c: " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    err << "l2c: internal error: " << e.what() << '\n';
    return 1;
  }
  return kUsageError;
}

}  // namespace l2c::cli
