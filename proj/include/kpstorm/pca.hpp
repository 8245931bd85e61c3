#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "kpstorm/fusion.hpp"

namespace kpstorm {

struct PcaModel {
  std::vector<double> mean;
  /// Per-feature divisor applied after centring; all ones unless the model
  /// was fitted with standardization.
  std::vector<double> scale;
  /// k unit directions, strongest first. Each has its largest-magnitude
  /// entry positive.
  std::vector<std::vector<double>> directions;
  /// Covariance eigenvalues (n - 1 normalization) for each direction.
  std::vector<double> eigenvalues;
  /// eigenvalue / trace(covariance).
  std::vector<double> explained_variance_ratio;
};

PcaModel fit_pca(const FusedDataset& data, std::size_t k,
                 bool standardize = false);

std::vector<double> project(const PcaModel& model, std::span<const double> row);
/// Row-major scores, one inner vector of length k per input row.
std::vector<std::vector<double>> project(const PcaModel& model,
                                         const FusedDataset& data);

/// Nearest integer, halves rounded up. Used for the plot labels.
int kp_label(double kp);

}  // namespace kpstorm
