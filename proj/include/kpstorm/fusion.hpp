#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "kpstorm/ingest.hpp"
#include "kpstorm/timestamp.hpp"

namespace kpstorm {

/// Lag windows per source. Solar lags run 0, step, ..., lookback - step
/// minutes; dst lags 0..lookback-1 hours; kp lags every 3 h over its lookback.
struct LagSpec {
  int solar_wind_lookback_minutes = 540;
  int solar_wind_step_minutes = 5;
  int dst_lookback_hours = 3;
  int kp_lookback_hours = 24;
  int horizon_hours = 3;

  /// Throws InvalidArgument when a field breaks the divisibility rules.
  void validate() const;
  std::size_t feature_count() const;
  /// `fma_m0`, `fma_m5`, ..., `dst_m0`, ..., `kp_m1260` in row order.
  std::vector<std::string> feature_names() const;

  friend bool operator==(const LagSpec&, const LagSpec&) = default;
};

/// Immutable design matrix: row-major features, future-kp targets and the
/// prediction instant of each row. Every cell is finite.
class FusedDataset {
 public:
  FusedDataset() = default;
  FusedDataset(std::vector<std::string> feature_names,
               std::vector<double> values, std::vector<double> targets,
               std::vector<Timestamp> row_times);

  std::size_t n_rows() const { return targets_.size(); }
  std::size_t n_features() const { return feature_names_.size(); }
  bool empty() const { return targets_.empty(); }

  const std::vector<std::string>& feature_names() const { return feature_names_; }
  /// Row-major, n_rows * n_features.
  const std::vector<double>& values() const { return values_; }
  const std::vector<double>& targets() const { return targets_; }
  const std::vector<Timestamp>& row_times() const { return row_times_; }

  std::span<const double> row(std::size_t i) const {
    return {values_.data() + i * n_features(), n_features()};
  }
  double at(std::size_t row, std::size_t col) const {
    return values_[row * n_features() + col];
  }

  /// Rows at `indices`, in the given order.
  FusedDataset take_rows(std::span<const std::size_t> indices) const;
  /// Copy with targets replaced (same length required).
  FusedDataset with_targets(std::vector<double> targets) const;

  friend bool operator==(const FusedDataset&, const FusedDataset&) = default;

 private:
  std::vector<std::string> feature_names_;
  std::vector<double> values_;
  std::vector<double> targets_;
  std::vector<Timestamp> row_times_;
};

/// Ordered feature positions (importance-rank order) with their names.
struct FeatureSubset {
  std::vector<std::size_t> indices;
  std::vector<std::string> names;
};

/// One row per 3-hour grid instant whose whole lag window and target exist.
FusedDataset fuse(const SourceSeries& sources, const LagSpec& spec);

/// Keeps every row with target > threshold and ceil(count / factor) of the
/// rest, chosen by the seeded generator. Survivors keep their order.
FusedDataset downsample_low_kp(const FusedDataset& data, int factor,
                               double threshold, std::uint64_t seed);

FusedDataset select_features(const FusedDataset& data,
                             const FeatureSubset& subset);
/// Projection by feature name; throws IndexOutOfRange for unknown names.
FusedDataset select_features(const FusedDataset& data,
                             std::span<const std::string> names);

/// Rows with row_time < cutoff go to the first element.
std::pair<FusedDataset, FusedDataset> split_by_time(const FusedDataset& data,
                                                    Timestamp cutoff);

/// CSV with a header of feature names plus `target,row_time`; reals are
/// written with 17 significant digits so parsing restores them bit-exactly.
std::string format_dataset(const FusedDataset& data);
FusedDataset parse_dataset(std::string_view content);

}  // namespace kpstorm
