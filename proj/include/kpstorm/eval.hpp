#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "kpstorm/baseline.hpp"
#include "kpstorm/forest.hpp"
#include "kpstorm/fusion.hpp"
#include "kpstorm/ingest.hpp"

namespace kpstorm {

/// Fraction of pairs with |predicted - actual| <= 1.
double accuracy_within_1(std::span<const double> predicted,
                         std::span<const double> actual);

enum class ModelKind { kForest, kLinear };

/// One run of the chronological-split protocol. A single seed drives every
/// random stage through derived seeds (see stage_seed).
struct ExperimentPlan {
  LagSpec lag_spec;
  ForestConfig forest;  // forest.seed is replaced by the derived stage seed
  std::optional<std::size_t> k_features;  // nullopt = all features
  int downsample_factor = 1;
  double downsample_threshold = 4.0;
  Timestamp cutoff = Timestamp::from_civil(2021, 10, 1);
  ModelKind model_kind = ModelKind::kForest;
  std::uint64_t seed = 0;

  /// `RF`, `RF top-50`, `RF top-50 L=2`, `Linear`, ...
  std::string label() const;
  /// Applies a label back onto `base` (model kind, k, L); throws
  /// InvalidArgument for anything the label grammar does not cover.
  static ExperimentPlan from_label(std::string_view label,
                                   const ExperimentPlan& base);
};

/// Seeds used by run_experiment for its random stages.
std::uint64_t forest_seed(std::uint64_t seed);
std::uint64_t downsample_seed(std::uint64_t seed);

struct EvalReport {
  std::size_t n = 0;
  double accuracy_within_1 = 0.0;
  double mean_abs_error = 0.0;
  /// |error| in [0, 1], (1, 2], (2, inf).
  std::array<std::size_t, 3> per_bin_hits{};
  /// Rows with actual kp > 4; accuracy is absent when there are none.
  std::size_t n_storm = 0;
  std::optional<double> storm_accuracy_within_1;
  std::size_t n_train = 0;
  std::size_t n_features = 0;
  std::string label;
  ExperimentPlan plan;
};

/// Metrics for a labelled prediction run (no plan information filled in).
EvalReport score_predictions(std::span<const double> predicted,
                             std::span<const double> actual);

using TrainedModel = std::variant<ForestModel, LinearModel>;

struct ExperimentOutcome {
  EvalReport report;
  TrainedModel model;
  std::vector<double> predicted;
  std::vector<double> actual;
  std::vector<Timestamp> row_times;
};

/// split -> optional top-k selection ranked on train only -> optional
/// train-only downsampling -> final fit -> predict test.
ExperimentOutcome run_experiment_detailed(const ExperimentPlan& plan,
                                          const FusedDataset& data,
                                          unsigned threads = 0);
EvalReport run_experiment(const ExperimentPlan& plan, const FusedDataset& data,
                          unsigned threads = 0);
/// Fuses `sources` with the plan's lag spec first.
EvalReport run_experiment(const ExperimentPlan& plan,
                          const SourceSeries& sources, unsigned threads = 0);

struct ComparisonRow {
  std::string label;
  double accuracy = 0.0;
  EvalReport report;
};

std::vector<ComparisonRow> comparison_table(std::span<const ExperimentPlan> plans,
                                            const SourceSeries& sources,
                                            unsigned threads = 0);

/// The five algorithm choices compared in the study, sharing `base`.
std::vector<ExperimentPlan> default_comparison_plans(const ExperimentPlan& base);

std::string render_table(std::span<const ComparisonRow> rows);
std::string table_csv(std::span<const ComparisonRow> rows);
std::string report_json(const EvalReport& report);
std::string report_text(const EvalReport& report);

}  // namespace kpstorm
