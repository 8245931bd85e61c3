#include "kpstorm/baseline.hpp"

#include <Eigen/Dense>
#include <fmt/format.h>

#include "kpstorm/error.hpp"

namespace kpstorm {

LinearModel fit_linear(const FusedDataset& data) {
  if (data.empty())
    throw Error(ErrorKind::kEmptyDataset, "cannot fit a linear model on empty data");
  const auto n = static_cast<Eigen::Index>(data.n_rows());
  const auto p = static_cast<Eigen::Index>(data.n_features());

  using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  Eigen::MatrixXd x = Eigen::Map<const RowMajor>(data.values().data(), n, p);
  Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(data.targets().data(), n);

  const Eigen::RowVectorXd x_mean = x.colwise().mean();
  const double y_mean = y.mean();
  x.rowwise() -= x_mean;
  y.array() -= y_mean;

  LinearModel model;
  model.feature_names = data.feature_names();
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  if (p > 0) beta = x.completeOrthogonalDecomposition().solve(y);
  model.coefficients.assign(beta.data(), beta.data() + p);
  model.intercept = y_mean - x_mean.dot(beta);
  return model;
}

double predict_linear(const LinearModel& model, std::span<const double> row) {
  if (row.size() != model.coefficients.size())
    throw Error(ErrorKind::kDimensionMismatch,
                fmt::format("row has {} values, model expects {}", row.size(),
                            model.coefficients.size()));
  double value = model.intercept;
  for (std::size_t i = 0; i < row.size(); ++i)
    value += model.coefficients[i] * row[i];
  return value;
}

std::vector<double> predict_linear(const LinearModel& model,
                                   const FusedDataset& data) {
  std::vector<double> out;
  out.reserve(data.n_rows());
  for (std::size_t r = 0; r < data.n_rows(); ++r)
    out.push_back(predict_linear(model, data.row(r)));
  return out;
}

}  // namespace kpstorm
