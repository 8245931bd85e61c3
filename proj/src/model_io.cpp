#include "kpstorm/model_io.hpp"

#include <fmt/format.h>

#include "json.hpp"
#include "kpstorm/error.hpp"

namespace kpstorm {

namespace {

using Json = nlohmann::ordered_json;

Json tree_json(const RegressionTree& tree, std::size_t i) {
  const auto& node = tree.nodes[i];
  if (node.is_leaf()) return Json{{"p", node.prediction}, {"n", node.n_samples}};
  return Json{{"f", node.feature},
              {"t", node.threshold},
              {"l", tree_json(tree, static_cast<std::size_t>(node.left))},
              {"r", tree_json(tree, static_cast<std::size_t>(node.right))}};
}

// Rebuilds nodes in preorder, which is the order fit_forest produces.
std::int32_t read_tree(const Json& j, RegressionTree& tree, std::size_t n_features) {
  const auto id = static_cast<std::int32_t>(tree.nodes.size());
  tree.nodes.emplace_back();
  if (j.contains("p")) {
    auto& node = tree.nodes.back();
    node.prediction = j.at("p").get<double>();
    node.n_samples = j.at("n").get<std::int32_t>();
    return id;
  }
  const auto feature = j.at("f").get<std::int32_t>();
  if (feature < 0 || static_cast<std::size_t>(feature) >= n_features)
    throw Error(ErrorKind::kIndexOutOfRange,
                fmt::format("tree splits on feature {} of {}", feature, n_features));
  tree.nodes.back().feature = feature;
  tree.nodes.back().threshold = j.at("t").get<double>();
  const auto left = read_tree(j.at("l"), tree, n_features);
  const auto right = read_tree(j.at("r"), tree, n_features);
  auto& node = tree.nodes[static_cast<std::size_t>(id)];
  node.left = left;
  node.right = right;
  node.n_samples = tree.nodes[static_cast<std::size_t>(left)].n_samples +
                   tree.nodes[static_cast<std::size_t>(right)].n_samples;
  return id;
}

Json parse_json(std::string_view text) {
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kMalformedLine, fmt::format("invalid model JSON: {}", e.what()));
  }
}

template <typename F>
auto guarded(F&& f) {
  try {
    return f();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kMalformedLine, fmt::format("invalid model JSON: {}", e.what()));
  }
}

ForestModel forest_from(const Json& j) {
  return guarded([&] {
    ForestModel m;
    const auto& c = j.at("config");
    m.config.n_trees = c.at("n_trees").get<int>();
    m.config.mtry = c.at("mtry").get<int>();
    m.config.min_leaf = c.at("min_leaf").get<int>();
    m.config.seed = c.at("seed").get<std::uint64_t>();
    m.config.bootstrap = c.at("bootstrap").get<bool>();
    m.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    m.target_min = j.at("target_range").at(0).get<double>();
    m.target_max = j.at("target_range").at(1).get<double>();
    m.importances = j.at("importances").get<std::vector<double>>();
    if (m.importances.size() != m.feature_names.size())
      throw Error(ErrorKind::kDimensionMismatch, "importances do not match features");
    if (j.contains("oob_mse") && !j.at("oob_mse").is_null())
      m.oob_mse = j.at("oob_mse").get<double>();
    for (const auto& t : j.at("trees")) {
      RegressionTree tree;
      read_tree(t, tree, m.feature_names.size());
      m.trees.push_back(std::move(tree));
    }
    if (m.trees.size() != static_cast<std::size_t>(m.config.n_trees))
      throw Error(ErrorKind::kDimensionMismatch, "tree count does not match config");
    return m;
  });
}

LinearModel linear_from(const Json& j) {
  return guarded([&] {
    LinearModel m;
    m.intercept = j.at("intercept").get<double>();
    m.coefficients = j.at("coefficients").get<std::vector<double>>();
    m.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    if (m.coefficients.size() != m.feature_names.size())
      throw Error(ErrorKind::kDimensionMismatch, "coefficients do not match features");
    return m;
  });
}

std::string kind_of(const Json& j) {
  return guarded([&] { return j.at("kind").get<std::string>(); });
}

}  // namespace

std::string save_model(const ForestModel& model) {
  Json j;
  j["kind"] = "forest";
  j["config"] = {{"n_trees", model.config.n_trees},
                 {"mtry", model.config.resolved_mtry(model.n_features())},
                 {"min_leaf", model.config.min_leaf},
                 {"seed", model.config.seed},
                 {"bootstrap", model.config.bootstrap}};
  j["feature_names"] = model.feature_names;
  j["target_range"] = {model.target_min, model.target_max};
  j["importances"] = model.importances;
  j["oob_mse"] = model.oob_mse ? Json(*model.oob_mse) : Json(nullptr);
  Json trees = Json::array();
  for (const auto& tree : model.trees) trees.push_back(tree_json(tree, 0));
  j["trees"] = std::move(trees);
  return j.dump() + "\n";
}

std::string save_model(const LinearModel& model) {
  Json j;
  j["kind"] = "linear";
  j["feature_names"] = model.feature_names;
  j["intercept"] = model.intercept;
  j["coefficients"] = model.coefficients;
  return j.dump(1) + "\n";
}

std::variant<ForestModel, LinearModel> load_model(std::string_view json) {
  const Json j = parse_json(json);
  const auto kind = kind_of(j);
  if (kind == "forest") return forest_from(j);
  if (kind == "linear") return linear_from(j);
  throw Error(ErrorKind::kMalformedLine, fmt::format("unknown model kind '{}'", kind));
}

ForestModel load_forest(std::string_view json) {
  const Json j = parse_json(json);
  if (kind_of(j) != "forest")
    throw Error(ErrorKind::kMalformedLine, "model JSON is not a forest");
  return forest_from(j);
}

LinearModel load_linear(std::string_view json) {
  const Json j = parse_json(json);
  if (kind_of(j) != "linear")
    throw Error(ErrorKind::kMalformedLine, "model JSON is not a linear model");
  return linear_from(j);
}

}  // namespace kpstorm
