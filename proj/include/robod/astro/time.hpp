/**
 * @file time.hpp
 * @brief Epochs as seconds past J2000 (2000-01-01T12:00:00) on one uniform
 *        time scale, and ISO-8601 conversion.
 */
#pragma once

#include <chrono>
#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <string>

namespace robod::astro {

using Epoch = double;

inline Epoch epoch_from_civil(int year, unsigned month, unsigned day, int hour, int minute, double second) {
  using namespace std::chrono;
  const year_month_day ymd{std::chrono::year{year}, std::chrono::month{month}, std::chrono::day{day}};
  if (!ymd.ok()) throw std::invalid_argument("invalid calendar date");
  const year_month_day j2000{std::chrono::year{2000}, std::chrono::month{1}, std::chrono::day{1}};
  const auto days = (sys_days{ymd} - sys_days{j2000}).count();
  return static_cast<double>(days) * 86400.0 + (hour - 12) * 3600.0 + minute * 60.0 + second;
}

/// Accepts YYYY-MM-DDTHH:MM:SS[.fff...][Z].
inline Epoch parse_iso8601(const std::string& s) {
  int y = 0, mo = 0, d = 0, h = 0, mi = 0;
  char tail[64] = {0};
  if (std::sscanf(s.c_str(), "%d-%d-%dT%d:%d:%63s", &y, &mo, &d, &h, &mi, tail) != 6) {
    throw std::invalid_argument("bad ISO-8601 epoch: " + s);
  }
  std::string sec(tail);
  if (!sec.empty() && (sec.back() == 'Z' || sec.back() == 'z')) sec.pop_back();
  std::size_t used = 0;
  double second = 0.0;
  try {
    second = std::stod(sec, &used);
  } catch (const std::exception&) {
    throw std::invalid_argument("bad ISO-8601 epoch: " + s);
  }
  if (used != sec.size() || h < 0 || h > 23 || mi < 0 || mi > 59 || second < 0 || second >= 61) {
    throw std::invalid_argument("bad ISO-8601 epoch: " + s);
  }
  return epoch_from_civil(y, static_cast<unsigned>(mo), static_cast<unsigned>(d), h, mi, 0.0) + second;
}

/// Nanosecond-resolution ISO string, e.g. 2019-02-25T18:49:01.148000000Z.
inline std::string format_iso8601(Epoch t) {
  using namespace std::chrono;
  // Shift to seconds past 2000-01-01T00:00 and split at the nanosecond.
  const double s0 = t + 43200.0;
  long long ns = std::llround(s0 * 1e9);
  long long days = ns >= 0 ? ns / 86400000000000LL : -((-ns + 86400000000000LL - 1) / 86400000000000LL);
  long long rem = ns - days * 86400000000000LL;
  const year_month_day ymd{sys_days{year_month_day{std::chrono::year{2000}, std::chrono::month{1}, std::chrono::day{1}}} +
                           std::chrono::days{days}};
  const long long secs = rem / 1000000000LL;
  const long long frac = rem % 1000000000LL;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02lld:%02lld:%02lld.%09lldZ", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()), secs / 3600, (secs / 60) % 60,
                secs % 60, frac);
  return buf;
}

}  // namespace robod::astro
