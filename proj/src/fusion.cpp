#include "kpstorm/fusion.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

#include <fmt/format.h>

#include "kpstorm/error.hpp"
#include "kpstorm/random.hpp"

namespace kpstorm {

namespace {

void require(bool ok, const std::string& message) {
  if (!ok) throw Error(ErrorKind::kInvalidArgument, message);
}

}  // namespace

void LagSpec::validate() const {
  require(solar_wind_step_minutes > 0 &&
              solar_wind_step_minutes % kSolarWindCadence == 0,
          "solar-wind step must be a positive multiple of 5 minutes");
  require(solar_wind_lookback_minutes > 0 &&
              solar_wind_lookback_minutes % solar_wind_step_minutes == 0,
          "solar-wind lookback must be a positive multiple of its step");
  require(dst_lookback_hours > 0, "dst lookback must be positive");
  require(kp_lookback_hours > 0 && kp_lookback_hours % 3 == 0,
          "kp lookback must be a positive multiple of 3 hours");
  require(horizon_hours > 0 && horizon_hours % 3 == 0,
          "horizon must be a positive multiple of 3 hours");
}

std::size_t LagSpec::feature_count() const {
  return 7 * static_cast<std::size_t>(solar_wind_lookback_minutes /
                                      solar_wind_step_minutes) +
         static_cast<std::size_t>(dst_lookback_hours) +
         static_cast<std::size_t>(kp_lookback_hours / 3);
}

std::vector<std::string> LagSpec::feature_names() const {
  std::vector<std::string> names;
  names.reserve(feature_count());
  for (auto quantity : kSolarFields)
    for (int lag = 0; lag < solar_wind_lookback_minutes;
         lag += solar_wind_step_minutes)
      names.push_back(fmt::format("{}_m{}", quantity, lag));
  for (int h = 0; h < dst_lookback_hours; ++h)
    names.push_back(fmt::format("dst_m{}", h * 60));
  for (int h = 0; h < kp_lookback_hours; h += 3)
    names.push_back(fmt::format("kp_m{}", h * 60));
  return names;
}

FusedDataset::FusedDataset(std::vector<std::string> feature_names,
                           std::vector<double> values,
                           std::vector<double> targets,
                           std::vector<Timestamp> row_times)
    : feature_names_(std::move(feature_names)),
      values_(std::move(values)),
      targets_(std::move(targets)),
      row_times_(std::move(row_times)) {
  if (row_times_.size() != targets_.size() ||
      values_.size() != targets_.size() * feature_names_.size())
    throw Error(ErrorKind::kDimensionMismatch,
                fmt::format("{} values do not form {} rows of {} features",
                            values_.size(), targets_.size(),
                            feature_names_.size()));
  for (double v : values_)
    if (!std::isfinite(v))
      throw Error(ErrorKind::kNonFiniteValue, "non-finite feature value");
  for (double y : targets_)
    if (!std::isfinite(y) || y < 0.0 || y > 9.0)
      throw Error(ErrorKind::kValueOutOfRange,
                  fmt::format("target {} outside [0, 9]", y));
}

FusedDataset FusedDataset::take_rows(std::span<const std::size_t> indices) const {
  const std::size_t p = n_features();
  std::vector<double> values;
  std::vector<double> targets;
  std::vector<Timestamp> times;
  values.reserve(indices.size() * p);
  targets.reserve(indices.size());
  times.reserve(indices.size());
  for (auto i : indices) {
    if (i >= n_rows())
      throw Error(ErrorKind::kIndexOutOfRange,
                  fmt::format("row {} of {}", i, n_rows()));
    auto r = row(i);
    values.insert(values.end(), r.begin(), r.end());
    targets.push_back(targets_[i]);
    times.push_back(row_times_[i]);
  }
  return FusedDataset(feature_names_, std::move(values), std::move(targets),
                      std::move(times));
}

FusedDataset FusedDataset::with_targets(std::vector<double> targets) const {
  return FusedDataset(feature_names_, values_, std::move(targets), row_times_);
}

FusedDataset fuse(const SourceSeries& sources, const LagSpec& spec) {
  spec.validate();
  for (const auto& s : sources.solar)
    if (s.cadence_minutes() != kSolarWindCadence)
      throw Error(ErrorKind::kCadenceMismatch,
                  fmt::format("solar series '{}' has cadence {}, expected 5",
                              s.name(), s.cadence_minutes()));
  if (sources.dst.cadence_minutes() != kDstCadence)
    throw Error(ErrorKind::kCadenceMismatch, "dst series cadence must be 60");
  if (sources.kp.cadence_minutes() != kKpCadence)
    throw Error(ErrorKind::kCadenceMismatch, "kp series cadence must be 180");

  std::vector<std::string> names = spec.feature_names();
  std::vector<double> values;
  std::vector<double> targets;
  std::vector<Timestamp> times;
  std::vector<double> row(names.size());

  const std::int64_t horizon = spec.horizon_hours * 60;
  const auto& kp = sources.kp;
  // The kp series is epoch-aligned at 180 minutes, so its samples are
  // exactly the prediction grid.
  for (std::size_t g = 0; g < kp.size(); ++g) {
    const Timestamp t = kp.start() + static_cast<std::int64_t>(g) * kKpCadence;
    const Reading target = kp.at(t + horizon);
    if (!target) continue;
    bool complete = true;
    std::size_t col = 0;
    for (const auto& series : sources.solar) {
      for (int lag = 0; complete && lag < spec.solar_wind_lookback_minutes;
           lag += spec.solar_wind_step_minutes) {
        const Reading v = series.at(t - lag);
        if (!v) complete = false;
        else row[col++] = *v;
      }
      if (!complete) break;
    }
    for (int h = 0; complete && h < spec.dst_lookback_hours; ++h) {
      const Reading v = sources.dst.at(t - h * 60);
      if (!v) complete = false;
      else row[col++] = *v;
    }
    for (int h = 0; complete && h < spec.kp_lookback_hours; h += 3) {
      const Reading v = kp.at(t - h * 60);
      if (!v) complete = false;
      else row[col++] = *v;
    }
    if (!complete) continue;
    values.insert(values.end(), row.begin(), row.end());
    targets.push_back(*target);
    times.push_back(t);
  }
  if (targets.empty())
    throw Error(ErrorKind::kEmptyIntersection,
                "no prediction instant has a complete lag window and target");
  return FusedDataset(std::move(names), std::move(values), std::move(targets),
                      std::move(times));
}

FusedDataset downsample_low_kp(const FusedDataset& data, int factor,
                               double threshold, std::uint64_t seed) {
  if (factor < 1)
    throw Error(ErrorKind::kInvalidArgument, "downsampling factor must be >= 1");
  if (!(threshold >= 0.0 && threshold <= 9.0))
    throw Error(ErrorKind::kInvalidArgument, "threshold must lie in [0, 9]");
  if (factor == 1) return data;

  std::vector<std::size_t> low;
  std::vector<char> keep(data.n_rows(), 0);
  for (std::size_t i = 0; i < data.n_rows(); ++i) {
    if (data.targets()[i] > threshold) keep[i] = 1;
    else low.push_back(i);
  }
  const std::size_t quota =
      (low.size() + static_cast<std::size_t>(factor) - 1) /
      static_cast<std::size_t>(factor);
  Rng rng(seed);
  // Partial Fisher-Yates: the first `quota` slots become a uniform sample.
  for (std::size_t i = 0; i < quota; ++i) {
    const auto j = i + rng.below(low.size() - i);
    std::swap(low[i], low[j]);
    keep[low[i]] = 1;
  }
  std::vector<std::size_t> survivors;
  for (std::size_t i = 0; i < data.n_rows(); ++i)
    if (keep[i]) survivors.push_back(i);
  return data.take_rows(survivors);
}

FusedDataset select_features(const FusedDataset& data,
                             const FeatureSubset& subset) {
  const std::size_t p = data.n_features();
  for (auto idx : subset.indices)
    if (idx >= p)
      throw Error(ErrorKind::kIndexOutOfRange,
                  fmt::format("feature index {} on {}-column data", idx, p));
  std::vector<std::string> names;
  names.reserve(subset.indices.size());
  for (auto idx : subset.indices) names.push_back(data.feature_names()[idx]);
  std::vector<double> values;
  values.reserve(data.n_rows() * subset.indices.size());
  for (std::size_t r = 0; r < data.n_rows(); ++r) {
    auto row = data.row(r);
    for (auto idx : subset.indices) values.push_back(row[idx]);
  }
  return FusedDataset(std::move(names), std::move(values), data.targets(),
                      data.row_times());
}

FusedDataset select_features(const FusedDataset& data,
                             std::span<const std::string> names) {
  FeatureSubset subset;
  const auto& have = data.feature_names();
  for (const auto& name : names) {
    auto it = std::find(have.begin(), have.end(), name);
    if (it == have.end())
      throw Error(ErrorKind::kIndexOutOfRange,
                  fmt::format("dataset has no feature '{}'", name));
    subset.indices.push_back(static_cast<std::size_t>(it - have.begin()));
    subset.names.push_back(name);
  }
  return select_features(data, subset);
}

std::pair<FusedDataset, FusedDataset> split_by_time(const FusedDataset& data,
                                                    Timestamp cutoff) {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
  for (std::size_t i = 0; i < data.n_rows(); ++i)
    (data.row_times()[i] < cutoff ? train : test).push_back(i);
  return {data.take_rows(train), data.take_rows(test)};
}

std::string format_dataset(const FusedDataset& data) {
  std::string out;
  for (const auto& name : data.feature_names()) {
    out += name;
    out += ',';
  }
  out += "target,row_time\n";
  auto buffer = fmt::memory_buffer();
  for (std::size_t r = 0; r < data.n_rows(); ++r) {
    buffer.clear();
    for (double v : data.row(r)) fmt::format_to(std::back_inserter(buffer), "{:.17g},", v);
    fmt::format_to(std::back_inserter(buffer), "{:.17g},{}\n", data.targets()[r],
                   data.row_times()[r].to_string());
    out.append(buffer.data(), buffer.size());
  }
  return out;
}

FusedDataset parse_dataset(std::string_view content) {
  std::vector<std::string> names;
  std::vector<double> values;
  std::vector<double> targets;
  std::vector<Timestamp> times;
  bool have_header = false;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < content.size()) {
    auto eol = content.find('\n', pos);
    if (eol == std::string_view::npos) eol = content.size();
    std::string_view line = content.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ' ||
                             line.back() == '\t'))
      line.remove_suffix(1);
    if (line.empty() || line.front() == '#') continue;

    std::vector<std::string_view> fields;
    for (std::size_t start = 0;;) {
      auto comma = line.find(',', start);
      fields.push_back(line.substr(start, comma == std::string_view::npos
                                              ? std::string_view::npos
                                              : comma - start));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (!have_header) {
      if (fields.size() < 2 || fields[fields.size() - 2] != "target" ||
          fields.back() != "row_time")
        throw Error(ErrorKind::kMalformedLine,
                    "dataset header must end with target,row_time", line_no);
      for (std::size_t i = 0; i + 2 < fields.size(); ++i)
        names.emplace_back(fields[i]);
      have_header = true;
      continue;
    }
    if (fields.size() != names.size() + 2)
      throw Error(ErrorKind::kMalformedLine,
                  fmt::format("expected {} columns, got {}", names.size() + 2,
                              fields.size()),
                  line_no);
    for (std::size_t i = 0; i + 1 < fields.size(); ++i) {
      double v = 0.0;
      auto f = fields[i];
      auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
      if (f.empty() || ec != std::errc() || ptr != f.data() + f.size())
        throw Error(ErrorKind::kMalformedLine,
                    fmt::format("cannot parse number '{}'", f), line_no);
      if (i + 2 < fields.size()) values.push_back(v);
      else targets.push_back(v);
    }
    auto t = Timestamp::parse(fields.back());
    if (!t)
      throw Error(ErrorKind::kBadTimestamp,
                  fmt::format("invalid timestamp '{}'", fields.back()), line_no);
    times.push_back(*t);
  }
  if (!have_header)
    throw Error(ErrorKind::kEmptyDataset, "dataset file has no header");
  return FusedDataset(std::move(names), std::move(values), std::move(targets),
                      std::move(times));
}

}  // namespace kpstorm
