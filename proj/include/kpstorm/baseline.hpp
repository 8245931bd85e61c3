#pragma once

#include <span>
#include <string>
#include <vector>

#include "kpstorm/fusion.hpp"

namespace kpstorm {

/// Ordinary least squares: y ~ intercept + coefficients . x
struct LinearModel {
  double intercept = 0.0;
  std::vector<double> coefficients;
  std::vector<std::string> feature_names;

  friend bool operator==(const LinearModel&, const LinearModel&) = default;
};

/// Least-squares fit on the mean-centred design through a complete
/// orthogonal decomposition, so rank-deficient designs get the
/// minimum-norm coefficient vector and the intercept absorbs the means.
LinearModel fit_linear(const FusedDataset& data);

double predict_linear(const LinearModel& model, std::span<const double> row);
std::vector<double> predict_linear(const LinearModel& model,
                                   const FusedDataset& data);

}  // namespace kpstorm
