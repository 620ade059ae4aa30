#pragma once

#include <cstdint>
#include <string>

namespace ahumpc {

// All simulation timestamps are integer minutes since 1970-01-01T00:00.
// ISO-8601 minute strings ("YYYY-MM-DDTHH:MM") compare lexicographically in
// chronological order, which the append-only stores rely on.
using Minute = std::int64_t;

constexpr int kMinutesPerDay = 1440;

struct CivilDate {
  int year = 1970;
  int month = 1;  // 1..12
  int day = 1;    // 1..31
};

// Days since 1970-01-01 (Howard Hinnant's civil-days algorithm).
std::int64_t days_from_civil(const CivilDate& d);
CivilDate civil_from_days(std::int64_t z);

// "YYYY-MM-DD" <-> civil date. Throws std::invalid_argument on bad input.
CivilDate parse_date(const std::string& s);
std::string format_date(const CivilDate& d);

// "YYYY-MM-DDTHH:MM" <-> minutes since epoch.
Minute parse_minute(const std::string& s);
std::string format_minute(Minute m);

inline Minute minutes_from_date(const CivilDate& d) {
  return days_from_civil(d) * kMinutesPerDay;
}

inline int minute_of_day(Minute m) {
  return static_cast<int>(((m % kMinutesPerDay) + kMinutesPerDay) % kMinutesPerDay);
}

inline std::int64_t day_of(Minute m) {
  Minute mod = ((m % kMinutesPerDay) + kMinutesPerDay) % kMinutesPerDay;
  return (m - mod) / kMinutesPerDay;
}

// "HH:MM" -> minute of day. Throws std::invalid_argument on bad input.
int parse_time_of_day(const std::string& s);

}  // namespace ahumpc
