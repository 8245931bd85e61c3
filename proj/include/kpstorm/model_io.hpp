#pragma once

#include <string>
#include <string_view>
#include <variant>

#include "kpstorm/baseline.hpp"
#include "kpstorm/forest.hpp"

namespace kpstorm {

// Self-describing JSON container. Trees nest as {"f","t","l","r"} for splits
// and {"p","n"} for leaves. Reals are written in shortest round-trip form
// (at most 17 significant digits), so load(save(m)) == m bit for bit.
std::string save_model(const ForestModel& model);
std::string save_model(const LinearModel& model);

/// Dispatches on the `kind` tag.
std::variant<ForestModel, LinearModel> load_model(std::string_view json);
ForestModel load_forest(std::string_view json);
LinearModel load_linear(std::string_view json);

}  // namespace kpstorm
