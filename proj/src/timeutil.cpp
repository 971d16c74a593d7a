#include "floodtwin/timeutil.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>

#include "floodtwin/error.hpp"

namespace floodtwin {
namespace {

int parse_digits(std::string_view s, std::size_t pos, std::size_t n, std::string_view whole) {
  if (pos + n > s.size()) throw DataError("truncated timestamp '" + std::string(whole) + "'");
  int v = 0;
  for (std::size_t i = pos; i < pos + n; ++i) {
    if (s[i] < '0' || s[i] > '9') throw DataError("bad timestamp '" + std::string(whole) + "'");
    v = v * 10 + (s[i] - '0');
  }
  return v;
}

}  // namespace

EpochSeconds parse_iso8601(std::string_view text) {
  std::string_view s = text;
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  if (!s.empty() && (s.back() == 'Z' || s.back() == 'z')) s.remove_suffix(1);

  if (s.size() < 10 || s[4] != '-' || s[7] != '-')
    throw DataError("bad timestamp '" + std::string(text) + "'");
  const int y = parse_digits(s, 0, 4, text);
  const int mo = parse_digits(s, 5, 2, text);
  const int d = parse_digits(s, 8, 2, text);
  int hh = 0, mm = 0;
  double ss = 0.0;
  if (s.size() > 10) {
    if ((s[10] != 'T' && s[10] != ' ') || s.size() < 16 || s[13] != ':')
      throw DataError("bad timestamp '" + std::string(text) + "'");
    hh = parse_digits(s, 11, 2, text);
    mm = parse_digits(s, 14, 2, text);
    if (s.size() > 16) {
      if (s[16] != ':' || s.size() < 19) throw DataError("bad timestamp '" + std::string(text) + "'");
      ss = parse_digits(s, 17, 2, text);
      if (s.size() > 19) {
        if (s[19] != '.') throw DataError("bad timestamp '" + std::string(text) + "'");
        double scale = 0.1;
        for (std::size_t i = 20; i < s.size(); ++i, scale *= 0.1) {
          if (s[i] < '0' || s[i] > '9') throw DataError("bad timestamp '" + std::string(text) + "'");
          ss += (s[i] - '0') * scale;
        }
      }
    }
  }

  using namespace std::chrono;
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || hh > 23 || mm > 59 || ss >= 61.0)
    throw DataError("out-of-range timestamp '" + std::string(text) + "'");
  const auto days = sys_days{ymd}.time_since_epoch().count();
  return static_cast<double>(days) * kSecondsPerDay + hh * 3600.0 + mm * 60.0 + ss;
}

std::string format_iso8601(EpochSeconds t) {
  using namespace std::chrono;
  const auto whole = static_cast<long long>(std::floor(t));
  long long days = whole / 86400;
  long long rem = whole % 86400;
  if (rem < 0) {
    rem += 86400;
    --days;
  }
  const year_month_day ymd{sys_days{std::chrono::days{days}}};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02lld:%02lld:%02lldZ", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()), rem / 3600,
                (rem / 60) % 60, rem % 60);
  return buf;
}

std::string format_date(EpochSeconds t) { return format_iso8601(t).substr(0, 10); }

}  // namespace floodtwin
