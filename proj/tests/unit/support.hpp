#pragma once

#include <string>
#include <vector>

#include "kpstorm/fusion.hpp"
#include "kpstorm/random.hpp"

namespace kpstorm::testing {

/// Dataset from row vectors; targets must lie in [0, 9]. Rows are stamped
/// three hours apart from 2021-01-01.
inline FusedDataset make_dataset(const std::vector<std::vector<double>>& x,
                                 const std::vector<double>& y) {
  std::vector<std::string> names;
  const std::size_t p = x.empty() ? 0 : x[0].size();
  for (std::size_t j = 0; j < p; ++j) names.push_back("x" + std::to_string(j));
  std::vector<double> values;
  std::vector<Timestamp> times;
  for (std::size_t i = 0; i < x.size(); ++i) {
    values.insert(values.end(), x[i].begin(), x[i].end());
    times.push_back(Timestamp::from_civil(2021, 1, 1) + 180 * static_cast<std::int64_t>(i));
  }
  return FusedDataset(std::move(names), std::move(values), y, std::move(times));
}

inline std::vector<std::vector<double>> random_matrix(Rng& rng, std::size_t n,
                                                      std::size_t p, double lo = -1.0,
                                                      double hi = 1.0) {
  std::vector<std::vector<double>> x(n, std::vector<double>(p));
  for (auto& row : x)
    for (auto& v : row) v = lo + (hi - lo) * rng.uniform();
  return x;
}

}  // namespace kpstorm::testing
