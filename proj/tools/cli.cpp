#include "cli.hpp"

#include <filesystem>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "CLI11.hpp"
#include "kpstorm/baseline.hpp"
#include "kpstorm/config.hpp"
#include "kpstorm/datagen.hpp"
#include "kpstorm/error.hpp"
#include "kpstorm/eval.hpp"
#include "kpstorm/forest.hpp"
#include "kpstorm/fusion.hpp"
#include "kpstorm/ingest.hpp"
#include "kpstorm/model_io.hpp"
#include "kpstorm/pca.hpp"

namespace kpstorm::cli {

namespace {

struct FlagSpec {
  const char* flag;
  const char* key;
  const char* help;
};

constexpr FlagSpec kSourceFlags[] = {
    {"--data-dir", "data_dir", "Directory holding solar_wind.csv, dst.csv and kp.csv"},
    {"--solar", "solar", "Solar-wind CSV (overrides --data-dir)"},
    {"--dst", "dst", "Dst CSV (overrides --data-dir)"},
    {"--kp", "kp", "Kp CSV (overrides --data-dir)"},
};

constexpr FlagSpec kLagFlags[] = {
    {"--solar-lookback", "solar_lookback_minutes", "Solar-wind lookback in minutes (540)"},
    {"--solar-step", "solar_step_minutes", "Solar-wind lag step in minutes (5)"},
    {"--dst-lookback", "dst_lookback_hours", "Dst lookback in hours (3)"},
    {"--kp-lookback", "kp_lookback_hours", "Kp lookback in hours (24)"},
    {"--horizon", "horizon_hours", "Prediction horizon in hours, multiple of 3 (3)"},
};

constexpr FlagSpec kModelFlags[] = {
    {"--seed", "seed", "Master seed; stage seeds are derived from it (0)"},
    {"--threads", "threads", "Worker threads for forest training, 0 = all cores (0)"},
    {"--model", "model", "forest or linear (forest)"},
    {"--n-trees", "n_trees", "Trees in the forest (100)"},
    {"--mtry", "mtry", "Features tried per split, or 'default' for p/3"},
    {"--min-leaf", "min_leaf", "Nodes with at most this many rows become leaves (5)"},
    {"--bootstrap", "bootstrap", "Bootstrap each tree: true or false (true)"},
};

constexpr FlagSpec kPlanFlags[] = {
    {"--cutoff", "cutoff", "Train/test cutoff instant, e.g. 2021-10-01T00:00Z"},
    {"--k", "k", "Keep the top-k ranked features, or 'all' (all)"},
    {"--downsample-L", "downsample_L", "Keep 1/L of low-Kp training rows (1)"},
    {"--downsample-threshold", "downsample_threshold", "Rows above this Kp are never dropped (4)"},
};

/// String-valued flags that map onto manifest keys; set flags override the
/// file given with --config.
class Overrides {
 public:
  void add(CLI::App* app, std::span<const FlagSpec> flags) {
    for (const auto& f : flags) {
      auto* opt = app->add_option(f.flag, values_[f.key], f.help);
      options_.emplace_back(opt, f.key);
    }
  }
  void add_config_flag(CLI::App* app) {
    app->add_option("--config", config_path_, "Flat key = value manifest file");
  }

  KeyValueConfig merged() const {
    KeyValueConfig config =
        config_path_.empty() ? KeyValueConfig{} : KeyValueConfig::load(config_path_);
    for (const auto& [opt, key] : options_)
      if (opt->count() > 0) config.set(key, values_.at(key));
    return config;
  }

 private:
  std::map<std::string, std::string> values_;
  std::vector<std::pair<CLI::Option*, std::string>> options_;
  std::string config_path_;
};

unsigned threads_of(const KeyValueConfig& config) {
  auto v = config.get("threads");
  if (!v) return 0;
  try {
    const long t = std::stol(*v);
    if (t < 0) throw std::invalid_argument("negative");
    return static_cast<unsigned>(t);
  } catch (const std::exception&) {
    throw Error(ErrorKind::kInvalidArgument,
                fmt::format("invalid value '{}' for 'threads'", *v));
  }
}

void emit(const std::string& path, const std::string& content, std::ostream& out) {
  if (path.empty() || path == "-") out << content;
  else write_file(path, content);
}

SourceSeries load(const KeyValueConfig& config) {
  const auto paths = source_paths(config);
  return load_sources(paths.solar, paths.dst, paths.kp);
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Geomagnetic storm early prediction: Kp forecasting toolkit", "kpstorm"};
  app.require_subcommand(1);

  // synth
  auto* synth = app.add_subcommand("synth", "Write synthetic solar-wind, Dst and Kp CSVs");
  SynthConfig synth_config;
  std::string synth_out;
  synth->add_option("--seed", synth_config.seed, "Generator seed")->capture_default_str();
  synth->add_option("--days", synth_config.n_days, "Days to simulate")->capture_default_str();
  synth->add_option("--storm-rate", synth_config.storm_rate_per_day,
                    "Expected storm onsets per day")->capture_default_str();
  synth->add_option("--noise", synth_config.noise_scale, "Noise scale")->capture_default_str();
  synth->add_option("--out", synth_out, "Output directory")->required();

  // fuse
  auto* fuse_cmd = app.add_subcommand("fuse", "Build the lagged feature dataset CSV");
  Overrides fuse_flags;
  fuse_flags.add_config_flag(fuse_cmd);
  fuse_flags.add(fuse_cmd, kSourceFlags);
  fuse_flags.add(fuse_cmd, kLagFlags);
  std::string fuse_out;
  fuse_cmd->add_option("--out", fuse_out, "Dataset CSV (default: standard output)");

  // train
  auto* train = app.add_subcommand("train", "Fit a forest or linear model on a dataset CSV");
  Overrides train_flags;
  train_flags.add_config_flag(train);
  train_flags.add(train, kModelFlags);
  train_flags.add(train, std::span<const FlagSpec>(kPlanFlags, 1));  // --cutoff only
  std::string train_data, train_out;
  train->add_option("--data", train_data, "Dataset CSV from `fuse`")->required();
  train->add_option("--out", train_out, "Model JSON (default: standard output)");

  // predict
  auto* predict_cmd = app.add_subcommand("predict", "Predict Kp for every row of a dataset");
  std::string predict_model, predict_data, predict_out;
  predict_cmd->add_option("--model", predict_model, "Model JSON from `train`")->required();
  predict_cmd->add_option("--data", predict_data, "Dataset CSV")->required();
  predict_cmd->add_option("--out", predict_out, "Predictions CSV (default: standard output)");

  // importance
  auto* importance_cmd = app.add_subcommand("importance", "Rank forest features by impurity decrease");
  std::string importance_model, importance_out;
  std::size_t importance_top = 0;
  importance_cmd->add_option("--model", importance_model, "Forest model JSON")->required();
  importance_cmd->add_option("--top", importance_top, "Only the first k features (0 = all)");
  importance_cmd->add_option("--out", importance_out, "Ranked CSV (default: standard output)");

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "Run one experiment plan and report accuracy");
  Overrides evaluate_flags;
  evaluate_flags.add_config_flag(evaluate);
  evaluate_flags.add(evaluate, kSourceFlags);
  evaluate_flags.add(evaluate, kLagFlags);
  evaluate_flags.add(evaluate, kModelFlags);
  evaluate_flags.add(evaluate, kPlanFlags);
  std::string evaluate_json;
  evaluate->add_option("--out-json", evaluate_json, "Write the report as JSON here");

  // compare
  auto* compare = app.add_subcommand("compare", "Accuracy table over several plans");
  Overrides compare_flags;
  compare_flags.add_config_flag(compare);
  compare_flags.add(compare, kSourceFlags);
  compare_flags.add(compare, kLagFlags);
  compare_flags.add(compare, kModelFlags);
  compare_flags.add(compare, kPlanFlags);
  static constexpr FlagSpec kPlansFlag[] = {
      {"--plans", "plans", "Comma-separated plan labels, e.g. \"RF, RF top-50 L=2, Linear\""}};
  compare_flags.add(compare, kPlansFlag);
  std::string compare_csv;
  compare->add_option("--csv", compare_csv, "Also write label,accuracy CSV here");

  // pca
  auto* pca_cmd = app.add_subcommand("pca", "Project a dataset on its top principal directions");
  std::string pca_data, pca_out;
  std::size_t pca_k = 2;
  bool pca_standardize = false;
  pca_cmd->add_option("--data", pca_data, "Dataset CSV")->required();
  pca_cmd->add_option("--k", pca_k, "Number of components")->capture_default_str();
  pca_cmd->add_flag("--standardize", pca_standardize, "Scale features to unit variance first");
  pca_cmd->add_option("--out", pca_out, "Scores CSV (default: standard output)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*synth) {
      const auto data = generate(synth_config);
      std::filesystem::create_directories(synth_out);
      const std::filesystem::path dir(synth_out);
      write_file((dir / "solar_wind.csv").string(), format_solar_wind(data.solar));
      write_file((dir / "dst.csv").string(), format_dst(data.dst));
      write_file((dir / "kp.csv").string(), format_kp(data.kp));
    } else if (*fuse_cmd) {
      const auto config = fuse_flags.merged();
      const auto plan = plan_from_config(config);
      emit(fuse_out, format_dataset(fuse(load(config), plan.lag_spec)), out);
    } else if (*train) {
      const auto config = train_flags.merged();
      const auto plan = plan_from_config(config);
      FusedDataset data = parse_dataset(read_file(train_data));
      if (config.get("cutoff")) data = split_by_time(data, plan.cutoff).first;
      if (plan.model_kind == ModelKind::kLinear) {
        emit(train_out, save_model(fit_linear(data)), out);
      } else {
        ForestConfig forest = plan.forest;
        forest.seed = forest_seed(plan.seed);
        emit(train_out, save_model(fit_forest(data, forest, threads_of(config))), out);
      }
    } else if (*predict_cmd) {
      const auto model = load_model(read_file(predict_model));
      const auto data = parse_dataset(read_file(predict_data));
      std::vector<double> predicted;
      if (const auto* forest = std::get_if<ForestModel>(&model))
        predicted = predict(*forest, select_features(data, std::span<const std::string>(forest->feature_names)));
      else {
        const auto& linear = std::get<LinearModel>(model);
        predicted = predict_linear(linear, select_features(data, std::span<const std::string>(linear.feature_names)));
      }
      std::string csv = "row_time,predicted,actual\n";
      for (std::size_t i = 0; i < data.n_rows(); ++i)
        csv += fmt::format("{},{:.17g},{:.17g}\n", data.row_times()[i].to_string(),
                           predicted[i], data.targets()[i]);
      emit(predict_out, csv, out);
    } else if (*importance_cmd) {
      const auto model = load_forest(read_file(importance_model));
      const auto report = importance(model);
      const std::size_t k = importance_top == 0 ? report.ranked.size() : importance_top;
      const auto subset = top_k(report, k);
      std::string csv = "rank,feature,importance\n";
      for (std::size_t i = 0; i < subset.indices.size(); ++i)
        csv += fmt::format("{},{},{:.17g}\n", report.ranked[i].rank,
                           report.ranked[i].name, report.ranked[i].importance);
      emit(importance_out, csv, out);
    } else if (*evaluate) {
      const auto config = evaluate_flags.merged();
      const auto plan = plan_from_config(config);
      const auto report = run_experiment(plan, load(config), threads_of(config));
      if (!evaluate_json.empty()) write_file(evaluate_json, report_json(report));
      out << report_text(report);
    } else if (*compare) {
      const auto config = compare_flags.merged();
      const auto plans = plans_from_config(config);
      const auto rows = comparison_table(plans, load(config), threads_of(config));
      if (!compare_csv.empty()) write_file(compare_csv, table_csv(rows));
      out << render_table(rows);
    } else if (*pca_cmd) {
      const auto data = parse_dataset(read_file(pca_data));
      const auto model = fit_pca(data, pca_k, pca_standardize);
      std::string csv;
      for (std::size_t i = 0; i < pca_k; ++i) csv += fmt::format("pc{},", i + 1);
      csv += "kp_label\n";
      const auto scores = project(model, data);
      for (std::size_t r = 0; r < data.n_rows(); ++r) {
        for (double s : scores[r]) csv += fmt::format("{:.17g},", s);
        csv += fmt::format("{}\n", kp_label(data.targets()[r]));
      }
      emit(pca_out, csv, out);
      std::string ratios;
      double total = 0.0;
      for (double r : model.explained_variance_ratio) {
        ratios += fmt::format(" {:.4f}", r);
        total += r;
      }
      err << fmt::format("explained variance ratio:{} (total {:.4f})\n", ratios, total);
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return e.kind() == ErrorKind::kInvalidArgument ? kExitUsage : kExitData;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitOk;
}

}  // namespace kpstorm::cli
