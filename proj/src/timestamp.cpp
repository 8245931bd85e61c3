#include "kpstorm/timestamp.hpp"

#include <chrono>
#include <fmt/format.h>

namespace kpstorm {

namespace {

bool read_digits(std::string_view s, std::size_t pos, std::size_t n, int& out) {
  if (pos + n > s.size()) return false;
  int v = 0;
  for (std::size_t i = pos; i < pos + n; ++i) {
    char c = s[i];
    if (c < '0' || c > '9') return false;
    v = v * 10 + (c - '0');
  }
  out = v;
  return true;
}

}  // namespace

Timestamp Timestamp::from_civil(int year, unsigned month, unsigned day,
                                unsigned hour, unsigned minute) {
  using namespace std::chrono;
  sys_days d = year_month_day{std::chrono::year{year}, std::chrono::month{month},
                              std::chrono::day{day}};
  return from_minutes(static_cast<std::int64_t>(d.time_since_epoch().count()) *
                          1440 +
                      hour * 60 + minute);
}

std::optional<Timestamp> Timestamp::parse(std::string_view s) {
  // 2021-01-01T00:00Z or 2021-01-01T00:00:00Z
  int year, month, day, hour, minute;
  if (s.size() != 17 && s.size() != 20) return std::nullopt;
  if (!read_digits(s, 0, 4, year) || s[4] != '-' ||
      !read_digits(s, 5, 2, month) || s[7] != '-' ||
      !read_digits(s, 8, 2, day) || s[10] != 'T' ||
      !read_digits(s, 11, 2, hour) || s[13] != ':' ||
      !read_digits(s, 14, 2, minute))
    return std::nullopt;
  std::size_t z = 16;
  if (s.size() == 20) {
    int seconds;
    if (s[16] != ':' || !read_digits(s, 17, 2, seconds) || seconds != 0)
      return std::nullopt;
    z = 19;
  }
  if (s[z] != 'Z') return std::nullopt;
  if (hour > 23 || minute > 59) return std::nullopt;
  std::chrono::year_month_day ymd{std::chrono::year{year},
                                  std::chrono::month{static_cast<unsigned>(month)},
                                  std::chrono::day{static_cast<unsigned>(day)}};
  if (!ymd.ok()) return std::nullopt;
  return from_civil(year, month, day, hour, minute);
}

std::string Timestamp::to_string() const {
  using namespace std::chrono;
  auto days = minutes_ >= 0 ? minutes_ / 1440 : -((-minutes_ + 1439) / 1440);
  auto rem = minutes_ - days * 1440;
  year_month_day ymd{sys_days{std::chrono::days{days}}};
  return fmt::format("{:04d}-{:02d}-{:02d}T{:02d}:{:02d}Z",
                     static_cast<int>(ymd.year()),
                     static_cast<unsigned>(ymd.month()),
                     static_cast<unsigned>(ymd.day()), rem / 60, rem % 60);
}

}  // namespace kpstorm
