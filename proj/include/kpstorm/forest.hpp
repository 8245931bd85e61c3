#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "kpstorm/fusion.hpp"

namespace kpstorm {

struct ForestConfig {
  int n_trees = 100;
  /// Candidate features per node; nullopt means floor(p / 3), at least 1.
  std::optional<int> mtry;
  /// Nodes with at most this many rows become leaves.
  int min_leaf = 5;
  std::uint64_t seed = 0;
  bool bootstrap = true;

  int resolved_mtry(std::size_t n_features) const;
  void validate() const;

  friend bool operator==(const ForestConfig&, const ForestConfig&) = default;
};

/// Flat tree node. Internal nodes have feature >= 0 and route rows with
/// value <= threshold to `left`. Leaves carry the mean routed target.
struct TreeNode {
  std::int32_t feature = -1;
  double threshold = 0.0;
  std::int32_t left = -1;
  std::int32_t right = -1;
  double prediction = 0.0;
  std::int32_t n_samples = 0;

  bool is_leaf() const { return feature < 0; }
  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

/// Nodes in depth-first preorder; node 0 is the root.
struct RegressionTree {
  std::vector<TreeNode> nodes;

  double predict(std::span<const double> row) const;
  std::size_t leaf_count() const;
  std::size_t depth() const;
  friend bool operator==(const RegressionTree&, const RegressionTree&) = default;
};

struct ForestModel {
  std::vector<RegressionTree> trees;
  std::vector<std::string> feature_names;
  ForestConfig config;  // mtry is stored resolved
  /// Normalized impurity decrease per feature; all zero when nothing split.
  std::vector<double> importances;
  double target_min = 0.0;
  double target_max = 0.0;
  /// Out-of-bag mean squared error; absent without bootstrap or when no row
  /// was ever out of bag.
  std::optional<double> oob_mse;

  std::size_t n_features() const { return feature_names.size(); }
  friend bool operator==(const ForestModel&, const ForestModel&) = default;
};

struct RankedFeature {
  std::string name;
  std::size_t index = 0;
  double importance = 0.0;
  std::size_t rank = 0;  // 1-based
};

struct ImportanceReport {
  std::vector<RankedFeature> ranked;
};

/// Trains the forest. Trees are built on `threads` workers (0 = hardware
/// concurrency); every tree draws from its own stream derived from
/// (seed, tree index), so the model does not depend on the thread count.
ForestModel fit_forest(const FusedDataset& data, const ForestConfig& config,
                       unsigned threads = 0);

double predict(const ForestModel& model, std::span<const double> row);
std::vector<double> predict(const ForestModel& model, const FusedDataset& data);

/// Descending importance, ties by lower feature index.
ImportanceReport importance(const ForestModel& model);

FeatureSubset top_k(const ImportanceReport& report, std::size_t k);

}  // namespace kpstorm
