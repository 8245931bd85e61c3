#include "kpstorm/ingest.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

#include <fmt/format.h>

#include "kpstorm/error.hpp"

namespace kpstorm {

namespace {

struct Line {
  std::size_t number;
  std::string_view text;
};

// Yields data lines (comments and blank lines removed, trailing whitespace
// stripped) together with their 1-based physical line numbers.
std::vector<Line> data_lines(std::string_view content) {
  std::vector<Line> lines;
  std::size_t number = 0;
  std::size_t pos = 0;
  while (pos < content.size()) {
    auto eol = content.find('\n', pos);
    if (eol == std::string_view::npos) eol = content.size();
    std::string_view text = content.substr(pos, eol - pos);
    pos = eol + 1;
    ++number;
    while (!text.empty() &&
           (text.back() == ' ' || text.back() == '\t' || text.back() == '\r'))
      text.remove_suffix(1);
    if (text.empty() || text.front() == '#') continue;
    lines.push_back({number, text});
  }
  return lines;
}

std::vector<std::string_view> split_fields(std::string_view text) {
  std::vector<std::string_view> fields;
  std::size_t pos = 0;
  while (true) {
    auto comma = text.find(',', pos);
    if (comma == std::string_view::npos) {
      fields.push_back(text.substr(pos));
      return fields;
    }
    fields.push_back(text.substr(pos, comma - pos));
    pos = comma + 1;
  }
}

Reading parse_reading(std::string_view field, std::size_t line) {
  if (field.empty()) return std::nullopt;
  double value = 0.0;
  const char* first = field.data();
  const char* last = first + field.size();
  if (*first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || !std::isfinite(value))
    throw Error(ErrorKind::kMalformedLine,
                fmt::format("cannot parse number '{}'", field), line);
  return value;
}

Timestamp parse_time(std::string_view field, std::size_t line) {
  auto t = Timestamp::parse(field);
  if (!t)
    throw Error(ErrorKind::kBadTimestamp,
                fmt::format("invalid timestamp '{}'", field), line);
  return *t;
}

void require_non_negative(const Reading& r, std::string_view name,
                          std::size_t line) {
  if (r && *r < 0.0)
    throw Error(ErrorKind::kValueOutOfRange,
                fmt::format("{} must be non-negative, got {}", name, *r), line);
}

// Shared driver: splits lines, checks column count and time ordering, and
// hands each line's fields to `build`.
template <typename Record>
std::vector<Record> parse_records(
    std::string_view content, std::size_t columns,
    const std::function<Record(const std::vector<std::string_view>&,
                               std::size_t)>& build) {
  std::vector<Record> out;
  for (const auto& [number, text] : data_lines(content)) {
    auto fields = split_fields(text);
    if (fields.size() != columns)
      throw Error(ErrorKind::kMalformedLine,
                  fmt::format("expected {} columns, got {}", columns,
                              fields.size()),
                  number);
    Record rec = build(fields, number);
    if (!out.empty() && rec.t <= out.back().t)
      throw Error(ErrorKind::kNonMonotonicTime,
                  fmt::format("{} does not follow {}", rec.t.to_string(),
                              out.back().t.to_string()),
                  number);
    out.push_back(std::move(rec));
  }
  return out;
}

std::string format_reading(const Reading& r) {
  return r ? fmt::format("{}", *r) : std::string();
}

MeasurementSeries grid(std::string name, std::span<const Timestamp> times,
                       std::span<const Reading> values, std::int64_t cadence) {
  if (cadence <= 0)
    throw Error(ErrorKind::kInvalidArgument, "cadence must be positive");
  if (times.empty()) return MeasurementSeries(std::move(name), cadence, {}, {});
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (!times[i].aligned_to(cadence))
      throw Error(ErrorKind::kCadenceMismatch,
                  fmt::format("{} is not on the {}-minute grid",
                              times[i].to_string(), cadence));
    if (i > 0 && times[i] <= times[i - 1])
      throw Error(ErrorKind::kNonMonotonicTime,
                  fmt::format("{} does not follow {}", times[i].to_string(),
                              times[i - 1].to_string()));
  }
  const Timestamp start = times.front();
  const auto length =
      static_cast<std::size_t>((times.back() - start) / cadence) + 1;
  std::vector<Reading> grid_values(length);
  for (std::size_t i = 0; i < times.size(); ++i)
    grid_values[static_cast<std::size_t>((times[i] - start) / cadence)] =
        values[i];
  return MeasurementSeries(std::move(name), cadence, start,
                           std::move(grid_values));
}

template <typename Record, typename Get>
MeasurementSeries grid_records(std::string name,
                               std::span<const Record> records,
                               std::int64_t cadence, Get get) {
  std::vector<Timestamp> times;
  std::vector<Reading> values;
  times.reserve(records.size());
  values.reserve(records.size());
  for (const auto& r : records) {
    times.push_back(r.t);
    values.push_back(get(r));
  }
  return grid(std::move(name), times, values, cadence);
}

}  // namespace

Reading SolarWindRecord::field(std::string_view name) const {
  if (name == "fma") return fma;
  if (name == "bx") return bx;
  if (name == "by") return by;
  if (name == "bz") return bz;
  if (name == "speed") return speed;
  if (name == "density") return density;
  if (name == "temperature") return temperature;
  throw Error(ErrorKind::kInvalidArgument,
              fmt::format("unknown solar-wind field '{}'", name));
}

MeasurementSeries::MeasurementSeries(std::string name,
                                     std::int64_t cadence_minutes,
                                     Timestamp start,
                                     std::vector<Reading> values)
    : name_(std::move(name)),
      cadence_(cadence_minutes),
      start_(start),
      values_(std::move(values)) {
  if (cadence_ <= 0)
    throw Error(ErrorKind::kInvalidArgument, "cadence must be positive");
}

Reading MeasurementSeries::at(Timestamp t) const {
  const auto offset = t - start_;
  if (offset < 0 || offset % cadence_ != 0) return std::nullopt;
  const auto index = static_cast<std::size_t>(offset / cadence_);
  if (index >= values_.size()) return std::nullopt;
  return values_[index];
}

std::vector<SolarWindRecord> parse_solar_wind(std::string_view content) {
  return parse_records<SolarWindRecord>(
      content, 8, [](const auto& f, std::size_t line) {
        SolarWindRecord r;
        r.t = parse_time(f[0], line);
        r.fma = parse_reading(f[1], line);
        r.bx = parse_reading(f[2], line);
        r.by = parse_reading(f[3], line);
        r.bz = parse_reading(f[4], line);
        r.speed = parse_reading(f[5], line);
        r.density = parse_reading(f[6], line);
        r.temperature = parse_reading(f[7], line);
        require_non_negative(r.fma, "fma", line);
        require_non_negative(r.speed, "speed", line);
        require_non_negative(r.density, "density", line);
        require_non_negative(r.temperature, "temperature", line);
        return r;
      });
}

std::vector<DstRecord> parse_dst(std::string_view content) {
  return parse_records<DstRecord>(
      content, 2, [](const auto& f, std::size_t line) {
        DstRecord r;
        r.t = parse_time(f[0], line);
        if (!r.t.aligned_to(kDstCadence))
          throw Error(ErrorKind::kBadTimestamp,
                      fmt::format("{} is not hour-aligned", f[0]), line);
        r.dst = parse_reading(f[1], line);
        return r;
      });
}

std::vector<KpRecord> parse_kp(std::string_view content) {
  return parse_records<KpRecord>(
      content, 2, [](const auto& f, std::size_t line) {
        KpRecord r;
        r.t = parse_time(f[0], line);
        if (!r.t.aligned_to(kKpCadence))
          throw Error(ErrorKind::kBadTimestamp,
                      fmt::format("{} is not on a 3-hour boundary", f[0]),
                      line);
        r.kp = parse_reading(f[1], line);
        if (r.kp && (*r.kp < 0.0 || *r.kp > 9.0))
          throw Error(ErrorKind::kValueOutOfRange,
                      fmt::format("kp {} outside [0, 9]", *r.kp), line);
        return r;
      });
}

std::string format_solar_wind(std::span<const SolarWindRecord> records) {
  std::string out = "# timestamp,fma,bx,by,bz,speed,density,temperature\n";
  for (const auto& r : records) {
    out += fmt::format("{},{},{},{},{},{},{},{}\n", r.t.to_string(),
                       format_reading(r.fma), format_reading(r.bx),
                       format_reading(r.by), format_reading(r.bz),
                       format_reading(r.speed), format_reading(r.density),
                       format_reading(r.temperature));
  }
  return out;
}

std::string format_dst(std::span<const DstRecord> records) {
  std::string out = "# timestamp,dst\n";
  for (const auto& r : records)
    out += fmt::format("{},{}\n", r.t.to_string(), format_reading(r.dst));
  return out;
}

std::string format_kp(std::span<const KpRecord> records) {
  std::string out = "# timestamp,kp\n";
  for (const auto& r : records)
    out += fmt::format("{},{}\n", r.t.to_string(), format_reading(r.kp));
  return out;
}

MeasurementSeries to_series(std::span<const SolarWindRecord> records,
                            std::string_view field,
                            std::int64_t expected_cadence) {
  SolarWindRecord{}.field(field);  // validates the name
  return grid_records(std::string(field), records, expected_cadence,
                      [field](const SolarWindRecord& r) { return r.field(field); });
}

MeasurementSeries to_series(std::span<const DstRecord> records,
                            std::int64_t expected_cadence) {
  return grid_records("dst", records, expected_cadence,
                      [](const DstRecord& r) { return r.dst; });
}

MeasurementSeries to_series(std::span<const KpRecord> records,
                            std::int64_t expected_cadence) {
  return grid_records("kp", records, expected_cadence,
                      [](const KpRecord& r) { return r.kp; });
}

SourceSeries make_sources(std::span<const SolarWindRecord> solar,
                          std::span<const DstRecord> dst,
                          std::span<const KpRecord> kp) {
  SourceSeries s;
  for (std::size_t i = 0; i < kSolarFields.size(); ++i)
    s.solar[i] = to_series(solar, kSolarFields[i], kSolarWindCadence);
  s.dst = to_series(dst, kDstCadence);
  s.kp = to_series(kp, kKpCadence);
  return s;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, fmt::format("cannot open '{}'", path));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::kIo, fmt::format("cannot write '{}'", path));
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw Error(ErrorKind::kIo, fmt::format("write failed for '{}'", path));
}

SourceSeries load_sources(const std::string& solar_path,
                          const std::string& dst_path,
                          const std::string& kp_path) {
  auto with_path = [](const std::string& path, auto&& parse) {
    try {
      return parse(read_file(path));
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::kIo) throw;
      throw Error(e.kind(), fmt::format("{}: {}", path, e.message()), e.line());
    }
  };
  auto solar = with_path(solar_path, [](const std::string& s) { return parse_solar_wind(s); });
  auto dst = with_path(dst_path, [](const std::string& s) { return parse_dst(s); });
  auto kp = with_path(kp_path, [](const std::string& s) { return parse_kp(s); });
  return make_sources(solar, dst, kp);
}

}  // namespace kpstorm
