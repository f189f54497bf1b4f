// Copyright 2026 The OrCo Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// UTC instants with nanosecond resolution. Leap seconds are ignored: an
// Instant is a count of SI seconds since 1970-01-01 on a uniform day grid,
// which is how SGP4 treats time anyway.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <string>
#include <string_view>

#include "orco/error.hpp"

namespace orco {

using Nanoseconds = std::chrono::nanoseconds;
using Instant = std::chrono::sys_time<Nanoseconds>;

inline constexpr std::int64_t kNanosPerSecond = 1'000'000'000;
inline constexpr std::int64_t kNanosPerDay = 86'400 * kNanosPerSecond;

inline double seconds_between(Instant from, Instant to) {
  return static_cast<double>((to - from).count()) / static_cast<double>(kNanosPerSecond);
}

inline Instant add_seconds(Instant t, double seconds) {
  return t + Nanoseconds(static_cast<std::int64_t>(std::llround(seconds * static_cast<double>(kNanosPerSecond))));
}

/// Midnight UTC of January 1st of `year`.
inline Instant start_of_year(int year) {
  using namespace std::chrono;
  return Instant(sys_days(std::chrono::year(year) / January / 1));
}

/// ISO-8601 with millisecond precision, e.g. 2025-01-20T11:58:43.000Z.
inline std::string to_iso8601(Instant t) {
  using namespace std::chrono;
  const auto rounded = floor<milliseconds>(t + microseconds(500));
  const auto day = floor<days>(rounded);
  const year_month_day ymd{day};
  const hh_mm_ss<milliseconds> hms{rounded - day};
  char buf[40];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02d.%03dZ", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<int>(hms.hours().count()), static_cast<int>(hms.minutes().count()),
                static_cast<int>(hms.seconds().count()), static_cast<int>(hms.subseconds().count()));
  return buf;
}

/// "YYYY-MM-DD" of the UTC day containing t.
inline std::string to_iso_date(Instant t) {
  using namespace std::chrono;
  const year_month_day ymd{floor<days>(t)};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                static_cast<unsigned>(ymd.day()));
  return buf;
}

/// Accepts YYYY-MM-DD, YYYY-MM-DDTHH:MM[:SS[.fff...]] with optional 'Z'.
/// A space is accepted in place of 'T'.
inline Instant parse_iso8601(std::string_view text) {
  using namespace std::chrono;
  auto fail = [&]() -> Error { return Error(ErrorCode::InvalidArgument, "bad ISO-8601 time '" + std::string(text) + "'"); };
  auto digits = [&](std::size_t pos, std::size_t count) -> int {
    if (pos + count > text.size()) throw fail();
    int v = 0;
    for (std::size_t i = pos; i < pos + count; ++i) {
      if (text[i] < '0' || text[i] > '9') throw fail();
      v = v * 10 + (text[i] - '0');
    }
    return v;
  };
  if (!text.empty() && text.back() == 'Z') text.remove_suffix(1);
  if (text.size() < 10 || text[4] != '-' || text[7] != '-') throw fail();
  const int y = digits(0, 4);
  const int mo = digits(5, 2);
  const int d = digits(8, 2);
  const year_month_day ymd{year(y), month(static_cast<unsigned>(mo)), day(static_cast<unsigned>(d))};
  if (!ymd.ok()) throw fail();
  Instant t{sys_days(ymd)};
  if (text.size() == 10) return t;
  if (text[10] != 'T' && text[10] != ' ') throw fail();
  if (text.size() < 16 || text[13] != ':') throw fail();
  const int hh = digits(11, 2);
  const int mm = digits(14, 2);
  int ss = 0;
  std::int64_t frac_ns = 0;
  if (text.size() > 16) {
    if (text[16] != ':') throw fail();
    ss = digits(17, 2);
    if (text.size() > 19) {
      if (text[19] != '.' || text.size() == 20) throw fail();
      std::int64_t scale = 100'000'000;
      for (std::size_t i = 20; i < text.size(); ++i) {
        if (text[i] < '0' || text[i] > '9') throw fail();
        frac_ns += (text[i] - '0') * scale;
        scale /= 10;
      }
    }
  }
  if (hh > 23 || mm > 59 || ss > 60) throw fail();
  return t + hours(hh) + minutes(mm) + seconds(ss) + Nanoseconds(frac_ns);
}

}  // namespace orco
