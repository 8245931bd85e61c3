#include "kpstorm/config.hpp"

#include <algorithm>
#include <charconv>
#include <filesystem>

#include <fmt/format.h>

#include "kpstorm/error.hpp"
#include "kpstorm/ingest.hpp"

namespace kpstorm {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

Error bad_value(const std::string& key, const std::string& value) {
  return Error(ErrorKind::kInvalidArgument,
               fmt::format("invalid value '{}' for '{}'", value, key));
}

template <typename T>
T number(const std::string& key, const std::string& value) {
  T out{};
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (value.empty() || ec != std::errc() || ptr != value.data() + value.size())
    throw bad_value(key, value);
  return out;
}

bool boolean(const std::string& key, const std::string& value) {
  if (value == "true" || value == "on" || value == "1") return true;
  if (value == "false" || value == "off" || value == "0") return false;
  throw bad_value(key, value);
}

}  // namespace

KeyValueConfig KeyValueConfig::parse(std::string_view text) {
  KeyValueConfig config;
  std::size_t line_no = 0;
  for (std::size_t pos = 0; pos < text.size();) {
    auto eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    // A '#' outside quotes starts a comment.
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (line[i] == '"') quoted = !quoted;
      if (line[i] == '#' && !quoted) {
        line = line.substr(0, i);
        break;
      }
    }
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw Error(ErrorKind::kInvalidArgument,
                  fmt::format("expected key = value, got '{}'", line), line_no);
    auto key = trim(line.substr(0, eq));
    auto value = trim(line.substr(eq + 1));
    if (key.empty())
      throw Error(ErrorKind::kInvalidArgument, "empty key", line_no);
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"')
      value = value.substr(1, value.size() - 2);
    config.entries_[std::string(key)] = std::string(value);
  }
  return config;
}

KeyValueConfig KeyValueConfig::load(const std::string& path) {
  const std::string text = read_file(path);
  try {
    return parse(text);
  } catch (const Error& e) {
    throw Error(e.kind(), fmt::format("{}: {}", path, e.message()), e.line());
  }
}

std::optional<std::string> KeyValueConfig::get(const std::string& key) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void KeyValueConfig::set(const std::string& key, std::string value) {
  entries_[key] = std::move(value);
}

const std::vector<std::string>& known_config_keys() {
  static const std::vector<std::string> keys = {
      "seed", "threads", "cutoff", "model", "k", "downsample_L",
      "downsample_threshold", "n_trees", "mtry", "min_leaf", "bootstrap",
      "solar_lookback_minutes", "solar_step_minutes", "dst_lookback_hours",
      "kp_lookback_hours", "horizon_hours", "plans", "data_dir", "solar",
      "dst", "kp", "out"};
  return keys;
}

ExperimentPlan plan_from_config(const KeyValueConfig& config) {
  const auto& known = known_config_keys();
  for (const auto& [key, value] : config.entries())
    if (std::find(known.begin(), known.end(), key) == known.end())
      throw Error(ErrorKind::kInvalidArgument, fmt::format("unknown key '{}'", key));

  ExperimentPlan plan;
  auto with = [&](const char* key, auto&& apply) {
    if (auto v = config.get(key)) apply(std::string(key), *v);
  };
  with("seed", [&](const auto& k, const auto& v) { plan.seed = number<std::uint64_t>(k, v); });
  with("cutoff", [&](const auto& k, const auto& v) {
    auto t = Timestamp::parse(v);
    if (!t) throw bad_value(k, v);
    plan.cutoff = *t;
  });
  with("model", [&](const auto& k, const auto& v) {
    if (v == "forest") plan.model_kind = ModelKind::kForest;
    else if (v == "linear") plan.model_kind = ModelKind::kLinear;
    else throw bad_value(k, v);
  });
  with("k", [&](const auto& k, const auto& v) {
    if (v == "all") plan.k_features.reset();
    else plan.k_features = number<std::size_t>(k, v);
  });
  with("downsample_L", [&](const auto& k, const auto& v) {
    plan.downsample_factor = number<int>(k, v);
    if (plan.downsample_factor < 1) throw bad_value(k, v);
  });
  with("downsample_threshold", [&](const auto& k, const auto& v) {
    plan.downsample_threshold = number<double>(k, v);
    if (!(plan.downsample_threshold >= 0.0 && plan.downsample_threshold <= 9.0))
      throw bad_value(k, v);
  });
  with("n_trees", [&](const auto& k, const auto& v) { plan.forest.n_trees = number<int>(k, v); });
  with("mtry", [&](const auto& k, const auto& v) {
    if (v == "default") plan.forest.mtry.reset();
    else plan.forest.mtry = number<int>(k, v);
  });
  with("min_leaf", [&](const auto& k, const auto& v) { plan.forest.min_leaf = number<int>(k, v); });
  with("bootstrap", [&](const auto& k, const auto& v) { plan.forest.bootstrap = boolean(k, v); });
  auto& lag = plan.lag_spec;
  with("solar_lookback_minutes", [&](const auto& k, const auto& v) { lag.solar_wind_lookback_minutes = number<int>(k, v); });
  with("solar_step_minutes", [&](const auto& k, const auto& v) { lag.solar_wind_step_minutes = number<int>(k, v); });
  with("dst_lookback_hours", [&](const auto& k, const auto& v) { lag.dst_lookback_hours = number<int>(k, v); });
  with("kp_lookback_hours", [&](const auto& k, const auto& v) { lag.kp_lookback_hours = number<int>(k, v); });
  with("horizon_hours", [&](const auto& k, const auto& v) { lag.horizon_hours = number<int>(k, v); });

  lag.validate();
  plan.forest.validate();
  return plan;
}

std::vector<ExperimentPlan> plans_from_config(const KeyValueConfig& config) {
  const ExperimentPlan base = plan_from_config(config);
  auto list = config.get("plans");
  if (!list) return default_comparison_plans(base);
  std::vector<ExperimentPlan> plans;
  std::string_view rest = *list;
  while (!rest.empty()) {
    auto comma = rest.find(',');
    auto item = trim(rest.substr(0, comma));
    if (!item.empty()) plans.push_back(ExperimentPlan::from_label(item, base));
    if (comma == std::string_view::npos) break;
    rest.remove_prefix(comma + 1);
  }
  if (plans.empty())
    throw Error(ErrorKind::kInvalidArgument, "'plans' lists no plan");
  return plans;
}

SourcePaths source_paths(const KeyValueConfig& config) {
  const std::filesystem::path dir = config.get("data_dir").value_or(".");
  SourcePaths paths;
  paths.solar = config.get("solar").value_or((dir / "solar_wind.csv").string());
  paths.dst = config.get("dst").value_or((dir / "dst.csv").string());
  paths.kp = config.get("kp").value_or((dir / "kp.csv").string());
  return paths;
}

}  // namespace kpstorm
