#include "kpstorm/forest.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <thread>

#include <fmt/format.h>

#include "kpstorm/error.hpp"
#include "kpstorm/random.hpp"

namespace kpstorm {

int ForestConfig::resolved_mtry(std::size_t n_features) const {
  if (mtry) return *mtry;
  return std::max(1, static_cast<int>(n_features / 3));
}

void ForestConfig::validate() const {
  if (n_trees < 1)
    throw Error(ErrorKind::kInvalidArgument, "n_trees must be >= 1");
  if (min_leaf < 1)
    throw Error(ErrorKind::kInvalidArgument, "min_leaf must be >= 1");
  if (mtry && *mtry < 1)
    throw Error(ErrorKind::kInvalidArgument, "mtry must be >= 1");
}

double RegressionTree::predict(std::span<const double> row) const {
  std::size_t i = 0;
  while (!nodes[i].is_leaf()) {
    const auto& n = nodes[i];
    i = static_cast<std::size_t>(
        row[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left
                                                                : n.right);
  }
  return nodes[i].prediction;
}

std::size_t RegressionTree::leaf_count() const {
  return static_cast<std::size_t>(std::count_if(
      nodes.begin(), nodes.end(), [](const TreeNode& n) { return n.is_leaf(); }));
}

std::size_t RegressionTree::depth() const {
  std::vector<std::size_t> level(nodes.size(), 0);
  std::size_t deepest = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    deepest = std::max(deepest, level[i]);
    if (!nodes[i].is_leaf()) {
      level[static_cast<std::size_t>(nodes[i].left)] = level[i] + 1;
      level[static_cast<std::size_t>(nodes[i].right)] = level[i] + 1;
    }
  }
  return deepest;
}

namespace {

struct Split {
  bool found = false;
  std::size_t feature = 0;
  double threshold = 0.0;
  // sum_L^2/n_L + sum_R^2/n_R; larger means smaller child squared error.
  double score = 0.0;
};

bool better(const Split& candidate, const Split& best) {
  if (!best.found) return true;
  if (candidate.score != best.score) return candidate.score > best.score;
  if (candidate.feature != best.feature) return candidate.feature < best.feature;
  return candidate.threshold < best.threshold;
}

/// Builds one tree. Columns are stored feature-major for cache-friendly
/// gathers during the split search.
class TreeBuilder {
 public:
  TreeBuilder(const std::vector<std::vector<double>>& columns,
              std::span<const double> targets, int mtry, int min_leaf)
      : columns_(columns),
        targets_(targets),
        mtry_(static_cast<std::size_t>(mtry)),
        min_leaf_(static_cast<std::size_t>(min_leaf)),
        features_(columns.size()),
        importance_(columns.size(), 0.0) {
    std::iota(features_.begin(), features_.end(), std::size_t{0});
  }

  RegressionTree build(std::vector<std::size_t> sample, Rng& rng) {
    rows_ = std::move(sample);
    scratch_.resize(rows_.size());
    pairs_.reserve(rows_.size());
    sample_size_ = static_cast<double>(rows_.size());
    tree_.nodes.clear();
    grow(0, rows_.size(), rng);
    return std::move(tree_);
  }

  const std::vector<double>& importance() const { return importance_; }

 private:
  // Depth-first preorder: a node's random draws happen before its left
  // subtree, which happens before its right subtree.
  std::int32_t grow(std::size_t begin, std::size_t end, Rng& rng) {
    const auto id = static_cast<std::int32_t>(tree_.nodes.size());
    tree_.nodes.emplace_back();
    const std::size_t n = end - begin;

    double sum = 0.0;
    double lo = targets_[rows_[begin]];
    double hi = lo;
    for (std::size_t i = begin; i < end; ++i) {
      const double y = targets_[rows_[i]];
      sum += y;
      lo = std::min(lo, y);
      hi = std::max(hi, y);
    }

    auto make_leaf = [&] {
      auto& node = tree_.nodes[static_cast<std::size_t>(id)];
      node.prediction = std::clamp(sum / static_cast<double>(n), lo, hi);
      node.n_samples = static_cast<std::int32_t>(n);
      return id;
    };
    if (n <= min_leaf_ || lo == hi) return make_leaf();

    const Split split = find_split(begin, end, rng);
    if (!split.found) return make_leaf();

    const double parent_score = sum * sum / static_cast<double>(n);
    importance_[split.feature] +=
        std::max(0.0, split.score - parent_score) / sample_size_;

    // Stable partition keeps each child's rows in ascending order.
    const auto& column = columns_[split.feature];
    std::size_t left_end = begin;
    std::size_t right_fill = 0;
    for (std::size_t i = begin; i < end; ++i) {
      const auto r = rows_[i];
      if (column[r] <= split.threshold) rows_[left_end++] = r;
      else scratch_[right_fill++] = r;
    }
    std::copy_n(scratch_.begin(), right_fill, rows_.begin() + static_cast<std::ptrdiff_t>(left_end));

    {
      auto& node = tree_.nodes[static_cast<std::size_t>(id)];
      node.feature = static_cast<std::int32_t>(split.feature);
      node.threshold = split.threshold;
      node.n_samples = static_cast<std::int32_t>(n);
    }
    const auto left = grow(begin, left_end, rng);
    const auto right = grow(left_end, end, rng);
    tree_.nodes[static_cast<std::size_t>(id)].left = left;
    tree_.nodes[static_cast<std::size_t>(id)].right = right;
    return id;
  }

  Split find_split(std::size_t begin, std::size_t end, Rng& rng) {
    const std::size_t p = features_.size();
    const std::size_t draws = std::min(mtry_, p);
    for (std::size_t i = 0; i < draws; ++i)
      std::swap(features_[i], features_[i + rng.below(p - i)]);

    Split best;
    for (std::size_t c = 0; c < draws; ++c) {
      const std::size_t f = features_[c];
      const auto& column = columns_[f];
      pairs_.clear();
      for (std::size_t i = begin; i < end; ++i)
        pairs_.emplace_back(column[rows_[i]], targets_[rows_[i]]);
      std::sort(pairs_.begin(), pairs_.end(),
                [](const auto& a, const auto& b) { return a.first < b.first; });
      if (pairs_.front().first == pairs_.back().first) continue;

      double total = 0.0;
      for (const auto& pr : pairs_) total += pr.second;
      const std::size_t n = pairs_.size();
      double left_sum = 0.0;
      for (std::size_t i = 0; i + 1 < n; ++i) {
        left_sum += pairs_[i].second;
        const double a = pairs_[i].first;
        const double b = pairs_[i + 1].first;
        if (a == b) continue;
        const double n_left = static_cast<double>(i + 1);
        const double n_right = static_cast<double>(n - i - 1);
        const double right_sum = total - left_sum;
        Split candidate;
        candidate.found = true;
        candidate.feature = f;
        candidate.score =
            left_sum * left_sum / n_left + right_sum * right_sum / n_right;
        double mid = a + (b - a) / 2.0;
        if (!(mid < b)) mid = a;
        candidate.threshold = mid;
        if (better(candidate, best)) best = candidate;
      }
    }
    return best;
  }

  const std::vector<std::vector<double>>& columns_;
  std::span<const double> targets_;
  std::size_t mtry_;
  std::size_t min_leaf_;
  std::vector<std::size_t> features_;
  std::vector<double> importance_;
  std::vector<std::size_t> rows_;
  std::vector<std::size_t> scratch_;
  std::vector<std::pair<double, double>> pairs_;
  double sample_size_ = 1.0;
  RegressionTree tree_;
};

struct TreeResult {
  RegressionTree tree;
  std::vector<double> importance;
  std::vector<std::uint32_t> in_bag;  // draw count per training row
};

void check_finite(std::span<const double> row) {
  for (double v : row)
    if (!std::isfinite(v))
      throw Error(ErrorKind::kNonFiniteValue, "non-finite feature value");
}

}  // namespace

ForestModel fit_forest(const FusedDataset& data, const ForestConfig& config,
                       unsigned threads) {
  config.validate();
  if (data.empty() || data.n_features() == 0)
    throw Error(ErrorKind::kEmptyDataset, "cannot fit a forest on empty data");
  check_finite(data.values());
  check_finite(data.targets());

  const std::size_t n = data.n_rows();
  const std::size_t p = data.n_features();
  const int mtry = config.resolved_mtry(p);
  if (static_cast<std::size_t>(mtry) > p)
    throw Error(ErrorKind::kInvalidArgument,
                fmt::format("mtry {} exceeds feature count {}", mtry, p));

  std::vector<std::vector<double>> columns(p, std::vector<double>(n));
  for (std::size_t r = 0; r < n; ++r) {
    auto row = data.row(r);
    for (std::size_t f = 0; f < p; ++f) columns[f][r] = row[f];
  }
  const auto& targets = data.targets();

  const auto n_trees = static_cast<std::size_t>(config.n_trees);
  std::vector<TreeResult> results(n_trees);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t t = next++; t < n_trees; t = next++) {
      Rng rng(derive_seed(config.seed, t));
      std::vector<std::uint32_t> counts(n, 0);
      if (config.bootstrap) {
        for (std::size_t i = 0; i < n; ++i) ++counts[rng.below(n)];
      } else {
        std::fill(counts.begin(), counts.end(), 1U);
      }
      std::vector<std::size_t> sample;
      sample.reserve(n);
      for (std::size_t r = 0; r < n; ++r)
        sample.insert(sample.end(), counts[r], r);
      TreeBuilder fresh(columns, targets, mtry, config.min_leaf);
      results[t].tree = fresh.build(std::move(sample), rng);
      results[t].importance = fresh.importance();
      results[t].in_bag = std::move(counts);
    }
  };

  unsigned workers = threads ? threads : std::max(1U, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, n_trees));
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
  }

  ForestModel model;
  model.feature_names = data.feature_names();
  model.config = config;
  model.config.mtry = mtry;
  model.target_min = *std::min_element(targets.begin(), targets.end());
  model.target_max = *std::max_element(targets.begin(), targets.end());
  model.importances.assign(p, 0.0);
  model.trees.reserve(n_trees);

  std::vector<double> oob_sum(n, 0.0);
  std::vector<std::uint32_t> oob_count(n, 0);
  for (auto& result : results) {
    for (std::size_t f = 0; f < p; ++f)
      model.importances[f] += result.importance[f];
    if (config.bootstrap) {
      for (std::size_t r = 0; r < n; ++r) {
        if (result.in_bag[r] != 0) continue;
        oob_sum[r] += result.tree.predict(data.row(r));
        ++oob_count[r];
      }
    }
    model.trees.push_back(std::move(result.tree));
  }

  double total = 0.0;
  for (auto& v : model.importances) {
    v /= static_cast<double>(n_trees);
    total += v;
  }
  if (total > 0.0)
    for (auto& v : model.importances) v /= total;

  double squared_error = 0.0;
  std::size_t scored = 0;
  for (std::size_t r = 0; r < n; ++r) {
    if (oob_count[r] == 0) continue;
    const double err = oob_sum[r] / oob_count[r] - targets[r];
    squared_error += err * err;
    ++scored;
  }
  if (scored > 0) model.oob_mse = squared_error / static_cast<double>(scored);
  return model;
}

double predict(const ForestModel& model, std::span<const double> row) {
  if (row.size() != model.n_features())
    throw Error(ErrorKind::kDimensionMismatch,
                fmt::format("row has {} values, model expects {}", row.size(),
                            model.n_features()));
  check_finite(row);
  if (model.trees.empty())
    throw Error(ErrorKind::kEmptyDataset, "model has no trees");
  double sum = 0.0;
  for (const auto& tree : model.trees) sum += tree.predict(row);
  return std::clamp(sum / static_cast<double>(model.trees.size()),
                    model.target_min, model.target_max);
}

std::vector<double> predict(const ForestModel& model, const FusedDataset& data) {
  std::vector<double> out;
  out.reserve(data.n_rows());
  for (std::size_t r = 0; r < data.n_rows(); ++r)
    out.push_back(predict(model, data.row(r)));
  return out;
}

ImportanceReport importance(const ForestModel& model) {
  std::vector<std::size_t> order(model.importances.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return model.importances[a] > model.importances[b];
  });
  ImportanceReport report;
  report.ranked.reserve(order.size());
  for (std::size_t r = 0; r < order.size(); ++r)
    report.ranked.push_back({model.feature_names[order[r]], order[r],
                             model.importances[order[r]], r + 1});
  return report;
}

FeatureSubset top_k(const ImportanceReport& report, std::size_t k) {
  if (k < 1 || k > report.ranked.size())
    throw Error(ErrorKind::kKOutOfRange,
                fmt::format("k = {} outside [1, {}]", k, report.ranked.size()));
  FeatureSubset subset;
  for (std::size_t i = 0; i < k; ++i) {
    subset.indices.push_back(report.ranked[i].index);
    subset.names.push_back(report.ranked[i].name);
  }
  return subset;
}

}  // namespace kpstorm
