#include "telerank/util/time.hpp"

#include <cctype>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <stdexcept>

namespace telerank {
namespace {

// Days since 1970-01-01 for a proleptic Gregorian date.
constexpr std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

int read_digits(std::string_view s, std::size_t pos, std::size_t count) {
  if (pos + count > s.size()) throw std::invalid_argument("truncated timestamp");
  int value = 0;
  for (std::size_t i = pos; i < pos + count; ++i) {
    if (!std::isdigit(static_cast<unsigned char>(s[i]))) {
      throw std::invalid_argument("bad digit in timestamp: " + std::string(s));
    }
    value = value * 10 + (s[i] - '0');
  }
  return value;
}

void expect(std::string_view s, std::size_t pos, char c) {
  if (pos >= s.size() || s[pos] != c) {
    throw std::invalid_argument("malformed timestamp: " + std::string(s));
  }
}

}  // namespace

UnixSeconds parse_iso8601(std::string_view s) {
  const int year = read_digits(s, 0, 4);
  expect(s, 4, '-');
  const int month = read_digits(s, 5, 2);
  expect(s, 7, '-');
  const int day = read_digits(s, 8, 2);
  const std::chrono::year_month_day ymd{std::chrono::year(year), std::chrono::month(static_cast<unsigned>(month)),
                                       std::chrono::day(static_cast<unsigned>(day))};
  if (!ymd.ok()) {
    throw std::invalid_argument("date out of range: " + std::string(s));
  }
  UnixSeconds t = days_from_civil(year, static_cast<unsigned>(month), static_cast<unsigned>(day)) * kSecondsPerDay;
  std::size_t pos = 10;
  if (pos == s.size()) return t;
  if (s[pos] != 'T' && s[pos] != ' ') throw std::invalid_argument("malformed timestamp: " + std::string(s));
  const int hh = read_digits(s, 11, 2);
  expect(s, 13, ':');
  const int mm = read_digits(s, 14, 2);
  int ss = 0;
  pos = 16;
  if (pos < s.size() && s[pos] == ':') {
    ss = read_digits(s, 17, 2);
    pos = 19;
  }
  if (hh > 23 || mm > 59 || ss > 60) throw std::invalid_argument("time out of range: " + std::string(s));
  t += hh * 3600 + mm * 60 + ss;
  if (pos == s.size() || (s[pos] == 'Z' && pos + 1 == s.size())) return t;
  if ((s[pos] == '+' || s[pos] == '-') && pos + 6 == s.size()) {
    const int oh = read_digits(s, pos + 1, 2);
    expect(s, pos + 3, ':');
    const int om = read_digits(s, pos + 4, 2);
    const int offset = oh * 3600 + om * 60;
    return s[pos] == '+' ? t - offset : t + offset;
  }
  throw std::invalid_argument("malformed timestamp suffix: " + std::string(s));
}

std::string format_iso8601(UnixSeconds t) {
  const std::time_t tt = static_cast<std::time_t>(t);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02dZ", tm.tm_year + 1900, tm.tm_mon + 1,
                tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec);
  return buf;
}

std::string format_date(UnixSeconds t) { return format_iso8601(t).substr(0, 10); }

}  // namespace telerank
