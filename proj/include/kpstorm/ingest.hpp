#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "kpstorm/timestamp.hpp"

namespace kpstorm {

/// A measurement that may be missing. Gaps are never represented as numbers.
using Reading = std::optional<double>;

inline constexpr std::int64_t kSolarWindCadence = 5;
inline constexpr std::int64_t kDstCadence = 60;
inline constexpr std::int64_t kKpCadence = 180;

/// Solar-wind quantities in canonical column order.
inline constexpr std::array<std::string_view, 7> kSolarFields = {
    "fma", "bx", "by", "bz", "speed", "density", "temperature"};

struct SolarWindRecord {
  Timestamp t;
  Reading fma;          // nT
  Reading bx, by, bz;   // nT
  Reading speed;        // km/s
  Reading density;      // particles/cm^3
  Reading temperature;  // K

  /// Field by canonical name; throws InvalidArgument for unknown names.
  Reading field(std::string_view name) const;
  friend bool operator==(const SolarWindRecord&, const SolarWindRecord&) = default;
};

struct DstRecord {
  Timestamp t;
  Reading dst;  // nT
  friend bool operator==(const DstRecord&, const DstRecord&) = default;
};

struct KpRecord {
  Timestamp t;
  Reading kp;
  friend bool operator==(const KpRecord&, const KpRecord&) = default;
};

/// Uniformly sampled series: value i belongs to start + i * cadence.
class MeasurementSeries {
 public:
  MeasurementSeries() = default;
  MeasurementSeries(std::string name, std::int64_t cadence_minutes,
                    Timestamp start, std::vector<Reading> values);

  const std::string& name() const { return name_; }
  std::int64_t cadence_minutes() const { return cadence_; }
  Timestamp start() const { return start_; }
  /// One cadence step past the final sample.
  Timestamp end() const {
    return start_ + cadence_ * static_cast<std::int64_t>(values_.size());
  }
  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }
  const std::vector<Reading>& values() const { return values_; }

  /// Value at `t`; nullopt for gaps, off-grid instants and out-of-range times.
  Reading at(Timestamp t) const;

  friend bool operator==(const MeasurementSeries&,
                         const MeasurementSeries&) = default;

 private:
  std::string name_;
  std::int64_t cadence_ = 0;
  Timestamp start_;
  std::vector<Reading> values_;
};

// Canonical CSV parsers. Comment lines (`#`) and blank lines are skipped,
// trailing whitespace is tolerated, an empty field is a gap.
std::vector<SolarWindRecord> parse_solar_wind(std::string_view content);
std::vector<DstRecord> parse_dst(std::string_view content);
std::vector<KpRecord> parse_kp(std::string_view content);

std::string format_solar_wind(std::span<const SolarWindRecord> records);
std::string format_dst(std::span<const DstRecord> records);
std::string format_kp(std::span<const KpRecord> records);

/// Grid the records on an epoch-aligned cadence. Missing instants become gaps.
MeasurementSeries to_series(std::span<const SolarWindRecord> records,
                            std::string_view field,
                            std::int64_t expected_cadence);
MeasurementSeries to_series(std::span<const DstRecord> records,
                            std::int64_t expected_cadence = kDstCadence);
MeasurementSeries to_series(std::span<const KpRecord> records,
                            std::int64_t expected_cadence = kKpCadence);

/// The seven solar series, one dst series and one kp series.
struct SourceSeries {
  std::array<MeasurementSeries, 7> solar;
  MeasurementSeries dst;
  MeasurementSeries kp;
};

SourceSeries make_sources(std::span<const SolarWindRecord> solar,
                          std::span<const DstRecord> dst,
                          std::span<const KpRecord> kp);

/// Reads and parses the three canonical files. Parse errors are re-thrown
/// with the file path prefixed to the message.
SourceSeries load_sources(const std::string& solar_path,
                          const std::string& dst_path,
                          const std::string& kp_path);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view content);

}  // namespace kpstorm
