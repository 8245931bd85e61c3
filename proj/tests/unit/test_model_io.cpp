#include "doctest.h"
#include "kpstorm/baseline.hpp"
#include "kpstorm/error.hpp"
#include "kpstorm/forest.hpp"
#include "kpstorm/model_io.hpp"
#include "unit/support.hpp"

#include <cstring>

using namespace kpstorm;

namespace {

FusedDataset noisy(std::uint64_t seed, std::size_t n, std::size_t p) {
  Rng rng(seed);
  const auto x = testing::random_matrix(rng, n, p, -3.0, 3.0);
  std::vector<double> y;
  for (const auto& row : x) y.push_back(4.5 + row[0] + 0.3 * row[1] * row[1] / 3.0 + 0.1 * rng.uniform());
  return testing::make_dataset(x, y);
}

bool same_bits(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

}  // namespace

TEST_CASE("forest round trip predicts bit-identically") {
  const auto train = noisy(1, 120, 6);
  const auto test = noisy(2, 50, 6);
  ForestConfig config;
  config.n_trees = 25;
  config.seed = 99;
  const auto model = fit_forest(train, config);
  const auto text = save_model(model);
  const auto loaded = load_forest(text);
  CHECK(same_bits(predict(model, test), predict(loaded, test)));
  CHECK(save_model(loaded) == text);
  CHECK(loaded.feature_names == model.feature_names);
  CHECK(same_bits(loaded.importances, model.importances));
  CHECK(loaded.target_min == model.target_min);
  CHECK(loaded.target_max == model.target_max);
  CHECK(loaded.config.n_trees == 25);
  CHECK(loaded.config.seed == 99);
  CHECK(std::holds_alternative<ForestModel>(load_model(text)));
}

TEST_CASE("linear round trip") {
  const auto model = fit_linear(noisy(3, 40, 4));
  const auto text = save_model(model);
  const auto loaded = load_linear(text);
  CHECK(loaded == model);
  CHECK(std::holds_alternative<LinearModel>(load_model(text)));
  CHECK_THROWS_AS(load_forest(text), Error);
}

TEST_CASE("awkward reals survive") {
  LinearModel model{0.1 + 0.2, {1.0 / 3.0, -2.5e-300, 6.02214076e23}, {"a", "b", "c"}};
  CHECK(load_linear(save_model(model)) == model);
}

TEST_CASE("malformed documents are rejected") {
  for (const char* bad : {"", "{", "[]", "{\"kind\": \"tree\"}", "{\"kind\": \"linear\"}",
                          "{\"kind\": \"forest\", \"trees\": 3}"})
    CHECK_THROWS_AS(load_model(bad), Error);
}
