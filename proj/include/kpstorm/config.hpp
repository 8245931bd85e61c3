#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "kpstorm/eval.hpp"

namespace kpstorm {

/// Flat `key = value` experiment manifest. `#` starts a comment, values may
/// be wrapped in double quotes, and a repeated key keeps its last value.
class KeyValueConfig {
 public:
  static KeyValueConfig parse(std::string_view text);
  static KeyValueConfig load(const std::string& path);

  std::optional<std::string> get(const std::string& key) const;
  void set(const std::string& key, std::string value);
  const std::map<std::string, std::string>& entries() const { return entries_; }

 private:
  std::map<std::string, std::string> entries_;
};

/// Keys understood by plan_from_config and the data-path helpers.
const std::vector<std::string>& known_config_keys();

/// Throws InvalidArgument naming the key for unknown keys or bad values.
ExperimentPlan plan_from_config(const KeyValueConfig& config);

/// `plans = "RF, RF top-50, Linear"`; defaults to the five-way comparison.
std::vector<ExperimentPlan> plans_from_config(const KeyValueConfig& config);

struct SourcePaths {
  std::string solar;
  std::string dst;
  std::string kp;
};

/// `solar`/`dst`/`kp` keys, defaulting to the synth file names inside
/// `data_dir` (itself defaulting to the working directory).
SourcePaths source_paths(const KeyValueConfig& config);

}  // namespace kpstorm
