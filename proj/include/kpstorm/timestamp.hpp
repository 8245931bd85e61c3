#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace kpstorm {

/// UTC instant at minute resolution, stored as minutes since 1970-01-01T00:00Z.
class Timestamp {
 public:
  constexpr Timestamp() = default;
  static constexpr Timestamp from_minutes(std::int64_t minutes) {
    Timestamp t;
    t.minutes_ = minutes;
    return t;
  }
  static Timestamp from_civil(int year, unsigned month, unsigned day,
                              unsigned hour = 0, unsigned minute = 0);

  /// Accepts `YYYY-MM-DDTHH:MMZ` (an optional `:00` seconds field is
  /// tolerated). Returns nullopt on any other shape or an invalid date.
  static std::optional<Timestamp> parse(std::string_view text);

  constexpr std::int64_t minutes() const { return minutes_; }
  std::string to_string() const;

  constexpr bool aligned_to(std::int64_t cadence_minutes) const {
    auto r = minutes_ % cadence_minutes;
    return r == 0;
  }

  constexpr Timestamp operator+(std::int64_t delta_minutes) const {
    return from_minutes(minutes_ + delta_minutes);
  }
  constexpr Timestamp operator-(std::int64_t delta_minutes) const {
    return from_minutes(minutes_ - delta_minutes);
  }
  constexpr std::int64_t operator-(Timestamp other) const {
    return minutes_ - other.minutes_;
  }

  friend constexpr auto operator<=>(Timestamp, Timestamp) = default;

 private:
  std::int64_t minutes_ = 0;
};

}  // namespace kpstorm
