#include "ahumpc/time_util.hpp"

#include <cstdio>
#include <stdexcept>

namespace ahumpc {

std::int64_t days_from_civil(const CivilDate& d) {
  std::int64_t y = d.year;
  const int m = d.month;
  const int day = d.day;
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153u * (m + (m > 2 ? -3 : 9)) + 2) / 5 + day - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

CivilDate civil_from_days(std::int64_t z) {
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  const unsigned day = doy - (153 * mp + 2) / 5 + 1;
  const unsigned m = mp + (mp < 10 ? 3 : -9);
  return CivilDate{static_cast<int>(y + (m <= 2)), static_cast<int>(m),
                   static_cast<int>(day)};
}

CivilDate parse_date(const std::string& s) {
  int y = 0, m = 0, d = 0;
  if (std::sscanf(s.c_str(), "%4d-%2d-%2d", &y, &m, &d) != 3 || m < 1 ||
      m > 12 || d < 1 || d > 31) {
    throw std::invalid_argument("bad date: " + s);
  }
  return CivilDate{y, m, d};
}

std::string format_date(const CivilDate& d) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", d.year, d.month, d.day);
  return buf;
}

Minute parse_minute(const std::string& s) {
  int y = 0, mo = 0, d = 0, h = 0, mi = 0;
  if (std::sscanf(s.c_str(), "%4d-%2d-%2dT%2d:%2d", &y, &mo, &d, &h, &mi) != 5 ||
      mo < 1 || mo > 12 || d < 1 || d > 31 || h < 0 || h > 23 || mi < 0 ||
      mi > 59) {
    throw std::invalid_argument("bad timestamp: " + s);
  }
  return days_from_civil(CivilDate{y, mo, d}) * kMinutesPerDay + h * 60 + mi;
}

std::string format_minute(Minute m) {
  const std::int64_t day = day_of(m);
  const int mod = minute_of_day(m);
  const CivilDate d = civil_from_days(day);
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d", d.year, d.month,
                d.day, mod / 60, mod % 60);
  return buf;
}

int parse_time_of_day(const std::string& s) {
  int h = 0, mi = 0;
  if (std::sscanf(s.c_str(), "%2d:%2d", &h, &mi) != 2 || h < 0 || h > 24 ||
      mi < 0 || mi > 59 || (h == 24 && mi != 0)) {
    throw std::invalid_argument("bad time of day: " + s);
  }
  return h * 60 + mi;
}

}  // namespace ahumpc
