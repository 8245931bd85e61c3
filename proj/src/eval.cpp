#include "kpstorm/eval.hpp"

#include <charconv>
#include <cmath>
#include <map>
#include <memory>
#include <tuple>

#include <fmt/format.h>

#include "json.hpp"
#include "kpstorm/error.hpp"
#include "kpstorm/random.hpp"

namespace kpstorm {

namespace {

constexpr double kStormThreshold = 4.0;

using Json = nlohmann::ordered_json;

// Full-feature forests trained on a train split, shared between plans of a
// comparison: the ranking forest of a top-k plan and the final model of a
// plain RF plan are the same fit.
class ForestCache {
 public:
  using Key = std::tuple<int, int, int, int, int, std::int64_t, int, int, int,
                         std::uint64_t, bool>;

  const ForestModel& get(const ExperimentPlan& plan, const FusedDataset& train,
                         const ForestConfig& config, unsigned threads) {
    const auto& l = plan.lag_spec;
    Key key{l.solar_wind_lookback_minutes, l.solar_wind_step_minutes,
            l.dst_lookback_hours, l.kp_lookback_hours, l.horizon_hours,
            plan.cutoff.minutes(), config.n_trees,
            config.mtry ? *config.mtry : -1, config.min_leaf, config.seed,
            config.bootstrap};
    auto it = models_.find(key);
    if (it == models_.end())
      it = models_.emplace(key, fit_forest(train, config, threads)).first;
    return it->second;
  }

 private:
  std::map<Key, ForestModel> models_;
};

ExperimentOutcome run_pipeline(const ExperimentPlan& plan,
                               const FusedDataset& data, unsigned threads,
                               ForestCache* cache) {
  auto [train, test] = split_by_time(data, plan.cutoff);
  if (test.empty())
    throw Error(ErrorKind::kEmptyTestSet,
                fmt::format("no rows at or after cutoff {}", plan.cutoff.to_string()));
  if (train.empty())
    throw Error(ErrorKind::kEmptyDataset,
                fmt::format("no rows before cutoff {}", plan.cutoff.to_string()));

  ForestConfig config = plan.forest;
  config.seed = forest_seed(plan.seed);

  ForestCache local;
  ForestCache& forests = cache ? *cache : local;
  const bool full_forest = plan.model_kind == ModelKind::kForest;

  const std::size_t all_features = train.n_features();
  if (full_forest && plan.k_features) {
    const std::size_t k = *plan.k_features;
    if (k < 1 || k > all_features)
      throw Error(ErrorKind::kKOutOfRange,
                  fmt::format("k = {} outside [1, {}]", k, all_features));
    if (k < all_features) {
      const auto& ranker = forests.get(plan, train, config, threads);
      const FeatureSubset subset = top_k(importance(ranker), k);
      train = select_features(train, subset);
      test = select_features(test, subset);
    }
  }
  const bool use_cache = full_forest && plan.downsample_factor <= 1 &&
                         train.n_features() == all_features;
  if (plan.downsample_factor > 1)
    train = downsample_low_kp(train, plan.downsample_factor,
                              plan.downsample_threshold,
                              downsample_seed(plan.seed));

  ExperimentOutcome out;
  if (plan.model_kind == ModelKind::kLinear) {
    auto model = fit_linear(train);
    out.predicted = predict_linear(model, test);
    out.model = std::move(model);
  } else {
    ForestModel model = use_cache ? forests.get(plan, train, config, threads)
                                  : fit_forest(train, config, threads);
    out.predicted = predict(model, test);
    out.model = std::move(model);
  }
  out.actual = test.targets();
  out.row_times = test.row_times();
  out.report = score_predictions(out.predicted, out.actual);
  out.report.n_train = train.n_rows();
  out.report.n_features = train.n_features();
  out.report.label = plan.label();
  out.report.plan = plan;
  return out;
}

Json plan_json(const ExperimentPlan& plan) {
  const auto& l = plan.lag_spec;
  const auto& f = plan.forest;
  Json j;
  j["label"] = plan.label();
  j["model"] = plan.model_kind == ModelKind::kForest ? "forest" : "linear";
  j["seed"] = plan.seed;
  j["cutoff"] = plan.cutoff.to_string();
  j["k_features"] = plan.k_features ? Json(*plan.k_features) : Json("all");
  j["downsample_L"] = plan.downsample_factor;
  j["downsample_threshold"] = plan.downsample_threshold;
  j["lag_spec"] = {{"solar_wind_lookback_minutes", l.solar_wind_lookback_minutes},
                   {"solar_wind_step_minutes", l.solar_wind_step_minutes},
                   {"dst_lookback_hours", l.dst_lookback_hours},
                   {"kp_lookback_hours", l.kp_lookback_hours},
                   {"horizon_hours", l.horizon_hours}};
  j["forest"] = {{"n_trees", f.n_trees},
                 {"mtry", f.mtry ? Json(*f.mtry) : Json("default")},
                 {"min_leaf", f.min_leaf},
                 {"bootstrap", f.bootstrap}};
  return j;
}

}  // namespace

double accuracy_within_1(std::span<const double> predicted,
                         std::span<const double> actual) {
  if (predicted.size() != actual.size())
    throw Error(ErrorKind::kLengthMismatch,
                fmt::format("{} predictions for {} actual values",
                            predicted.size(), actual.size()));
  if (predicted.empty()) throw Error(ErrorKind::kEmptyInput, "no predictions");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    if (!std::isfinite(predicted[i]) || !std::isfinite(actual[i]))
      throw Error(ErrorKind::kNonFiniteValue, "non-finite prediction or target");
    if (std::abs(predicted[i] - actual[i]) <= 1.0) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(predicted.size());
}

std::uint64_t forest_seed(std::uint64_t seed) { return derive_seed(seed, "forest"); }
std::uint64_t downsample_seed(std::uint64_t seed) {
  return derive_seed(seed, "downsample");
}

std::string ExperimentPlan::label() const {
  if (model_kind == ModelKind::kLinear) return "Linear";
  std::string out = "RF";
  if (k_features) out += fmt::format(" top-{}", *k_features);
  if (downsample_factor > 1) out += fmt::format(" L={}", downsample_factor);
  return out;
}

ExperimentPlan ExperimentPlan::from_label(std::string_view label,
                                          const ExperimentPlan& base) {
  auto fail = [&] {
    return Error(ErrorKind::kInvalidArgument,
                 fmt::format("cannot interpret plan label '{}'", label));
  };
  auto parse_int = [&](std::string_view s) {
    long long v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || v < 1) throw fail();
    return v;
  };
  std::vector<std::string_view> words;
  for (std::size_t pos = 0; pos < label.size();) {
    auto space = label.find(' ', pos);
    if (space == std::string_view::npos) space = label.size();
    if (space > pos) words.push_back(label.substr(pos, space - pos));
    pos = space + 1;
  }
  if (words.empty()) throw fail();
  ExperimentPlan plan = base;
  plan.k_features.reset();
  plan.downsample_factor = 1;
  if (words[0] == "Linear") {
    if (words.size() != 1) throw fail();
    plan.model_kind = ModelKind::kLinear;
    return plan;
  }
  if (words[0] != "RF") throw fail();
  plan.model_kind = ModelKind::kForest;
  for (std::size_t i = 1; i < words.size(); ++i) {
    if (words[i].starts_with("top-") && !plan.k_features)
      plan.k_features = static_cast<std::size_t>(parse_int(words[i].substr(4)));
    else if (words[i].starts_with("L=") && plan.downsample_factor == 1)
      plan.downsample_factor = static_cast<int>(parse_int(words[i].substr(2)));
    else
      throw fail();
  }
  return plan;
}

EvalReport score_predictions(std::span<const double> predicted,
                             std::span<const double> actual) {
  EvalReport r;
  r.accuracy_within_1 = accuracy_within_1(predicted, actual);
  r.n = predicted.size();
  double abs_sum = 0.0;
  std::size_t storm_hits = 0;
  for (std::size_t i = 0; i < r.n; ++i) {
    const double err = std::abs(predicted[i] - actual[i]);
    abs_sum += err;
    ++r.per_bin_hits[err <= 1.0 ? 0 : err <= 2.0 ? 1 : 2];
    if (actual[i] > kStormThreshold) {
      ++r.n_storm;
      if (err <= 1.0) ++storm_hits;
    }
  }
  r.mean_abs_error = abs_sum / static_cast<double>(r.n);
  if (r.n_storm > 0)
    r.storm_accuracy_within_1 =
        static_cast<double>(storm_hits) / static_cast<double>(r.n_storm);
  return r;
}

ExperimentOutcome run_experiment_detailed(const ExperimentPlan& plan,
                                          const FusedDataset& data,
                                          unsigned threads) {
  return run_pipeline(plan, data, threads, nullptr);
}

EvalReport run_experiment(const ExperimentPlan& plan, const FusedDataset& data,
                          unsigned threads) {
  return run_pipeline(plan, data, threads, nullptr).report;
}

EvalReport run_experiment(const ExperimentPlan& plan,
                          const SourceSeries& sources, unsigned threads) {
  return run_experiment(plan, fuse(sources, plan.lag_spec), threads);
}

std::vector<ComparisonRow> comparison_table(std::span<const ExperimentPlan> plans,
                                            const SourceSeries& sources,
                                            unsigned threads) {
  if (plans.empty())
    throw Error(ErrorKind::kEmptyInput, "comparison needs at least one plan");
  std::vector<std::pair<LagSpec, std::shared_ptr<const FusedDataset>>> fused;
  ForestCache cache;
  std::vector<ComparisonRow> rows;
  for (const auto& plan : plans) {
    std::shared_ptr<const FusedDataset> data;
    for (const auto& [spec, d] : fused)
      if (spec == plan.lag_spec) data = d;
    if (!data) {
      data = std::make_shared<const FusedDataset>(fuse(sources, plan.lag_spec));
      fused.emplace_back(plan.lag_spec, data);
    }
    auto outcome = run_pipeline(plan, *data, threads, &cache);
    rows.push_back({outcome.report.label, outcome.report.accuracy_within_1,
                    std::move(outcome.report)});
  }
  return rows;
}

std::vector<ExperimentPlan> default_comparison_plans(const ExperimentPlan& base) {
  std::vector<ExperimentPlan> plans;
  for (auto label : {"RF", "RF top-100", "RF top-50", "RF top-50 L=2", "Linear"})
    plans.push_back(ExperimentPlan::from_label(label, base));
  return plans;
}

std::string render_table(std::span<const ComparisonRow> rows) {
  std::size_t width = 9;
  for (const auto& r : rows) width = std::max(width, r.label.size());
  std::string out = fmt::format("{:<{}}  {:>8}  {:>6}  {:>6}\n", "algorithm",
                                width, "accuracy", "n_test", "n_feat");
  for (const auto& r : rows)
    out += fmt::format("{:<{}}  {:>8.4f}  {:>6}  {:>6}\n", r.label, width,
                       r.accuracy, r.report.n, r.report.n_features);
  return out;
}

std::string table_csv(std::span<const ComparisonRow> rows) {
  std::string out = "label,accuracy\n";
  for (const auto& r : rows) out += fmt::format("{},{:.17g}\n", r.label, r.accuracy);
  return out;
}

std::string report_json(const EvalReport& report) {
  Json j;
  j["label"] = report.label;
  j["n"] = report.n;
  j["accuracy_within_1"] = report.accuracy_within_1;
  j["mean_abs_error"] = report.mean_abs_error;
  j["per_bin_hits"] = {{"le_1", report.per_bin_hits[0]},
                       {"1_to_2", report.per_bin_hits[1]},
                       {"gt_2", report.per_bin_hits[2]}};
  j["storm_rows"] = {
      {"threshold", kStormThreshold},
      {"n", report.n_storm},
      {"accuracy_within_1", report.storm_accuracy_within_1
                                ? Json(*report.storm_accuracy_within_1)
                                : Json(nullptr)}};
  j["n_train"] = report.n_train;
  j["n_features"] = report.n_features;
  j["config"] = plan_json(report.plan);
  return j.dump(2) + "\n";
}

std::string report_text(const EvalReport& report) {
  std::string out;
  out += fmt::format("model              {}\n", report.label);
  out += fmt::format("train rows         {}\n", report.n_train);
  out += fmt::format("features           {}\n", report.n_features);
  out += fmt::format("test rows          {}\n", report.n);
  out += fmt::format("accuracy (+-1 Kp)  {:.4f}\n", report.accuracy_within_1);
  out += fmt::format("mean abs error     {:.4f}\n", report.mean_abs_error);
  out += fmt::format("|err| <= 1         {}\n", report.per_bin_hits[0]);
  out += fmt::format("1 < |err| <= 2     {}\n", report.per_bin_hits[1]);
  out += fmt::format("|err| > 2          {}\n", report.per_bin_hits[2]);
  if (report.storm_accuracy_within_1)
    out += fmt::format("storm rows (Kp>4)  {} accuracy {:.4f}\n", report.n_storm,
                       *report.storm_accuracy_within_1);
  else
    out += "storm rows (Kp>4)  0\n";
  return out;
}

}  // namespace kpstorm
