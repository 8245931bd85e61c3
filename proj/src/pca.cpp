#include "kpstorm/pca.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "kpstorm/error.hpp"

namespace kpstorm {

PcaModel fit_pca(const FusedDataset& data, std::size_t k, bool standardize) {
  const std::size_t n = data.n_rows();
  const std::size_t p = data.n_features();
  if (n < 2)
    throw Error(ErrorKind::kDegenerateData, "PCA needs at least two rows");
  if (k < 1 || k > std::min(n, p))
    throw Error(ErrorKind::kKOutOfRange,
                fmt::format("k = {} outside [1, {}]", k, std::min(n, p)));

  using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const auto rows = static_cast<Eigen::Index>(n);
  const auto cols = static_cast<Eigen::Index>(p);
  Eigen::MatrixXd centered = Eigen::Map<const RowMajor>(data.values().data(), rows, cols);
  const Eigen::RowVectorXd mean = centered.colwise().mean();
  centered.rowwise() -= mean;

  Eigen::RowVectorXd scale = Eigen::RowVectorXd::Ones(cols);
  if (standardize) {
    for (Eigen::Index j = 0; j < cols; ++j) {
      const double sd = std::sqrt(centered.col(j).squaredNorm() / static_cast<double>(n - 1));
      if (sd > 0.0) scale(j) = sd;
    }
    centered.array().rowwise() /= scale.array();
  }

  const double denom = static_cast<double>(n - 1);
  const double trace = centered.squaredNorm() / denom;
  if (!(trace > 0.0))
    throw Error(ErrorKind::kDegenerateData, "data has zero total variance");

  // Right singular vectors of the centred data are the covariance
  // eigenvectors; squared singular values / (n - 1) are the eigenvalues.
  Eigen::BDCSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinV);
  const Eigen::VectorXd& sv = svd.singularValues();
  const Eigen::MatrixXd& v = svd.matrixV();

  PcaModel model;
  model.mean.assign(mean.data(), mean.data() + p);
  model.scale.assign(scale.data(), scale.data() + p);
  for (std::size_t i = 0; i < k; ++i) {
    const auto col = static_cast<Eigen::Index>(i);
    std::vector<double> dir(v.col(col).data(), v.col(col).data() + p);
    std::size_t largest = 0;
    for (std::size_t j = 1; j < p; ++j)
      if (std::abs(dir[j]) > std::abs(dir[largest])) largest = j;
    if (dir[largest] < 0.0)
      for (auto& d : dir) d = -d;
    const double lambda = sv(col) * sv(col) / denom;
    model.directions.push_back(std::move(dir));
    model.eigenvalues.push_back(lambda);
    model.explained_variance_ratio.push_back(std::clamp(lambda / trace, 0.0, 1.0));
  }
  return model;
}

std::vector<double> project(const PcaModel& model, std::span<const double> row) {
  if (row.size() != model.mean.size())
    throw Error(ErrorKind::kDimensionMismatch,
                fmt::format("row has {} values, model expects {}", row.size(),
                            model.mean.size()));
  std::vector<double> scores;
  scores.reserve(model.directions.size());
  for (const auto& dir : model.directions) {
    double s = 0.0;
    for (std::size_t j = 0; j < row.size(); ++j)
      s += (row[j] - model.mean[j]) / model.scale[j] * dir[j];
    scores.push_back(s);
  }
  return scores;
}

std::vector<std::vector<double>> project(const PcaModel& model,
                                         const FusedDataset& data) {
  std::vector<std::vector<double>> out;
  out.reserve(data.n_rows());
  for (std::size_t r = 0; r < data.n_rows(); ++r)
    out.push_back(project(model, data.row(r)));
  return out;
}

int kp_label(double kp) { return static_cast<int>(std::floor(kp + 0.5)); }

}  // namespace kpstorm
