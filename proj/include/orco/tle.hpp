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

// Two-line element sets: fixed-column parsing, checksum and rendering.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>
#include <string_view>
#include <utility>

#include "orco/error.hpp"
#include "orco/time.hpp"

namespace orco {

inline constexpr std::size_t kTleLineLength = 69;

/// The mean elements SGP4 consumes, in TLE units.
struct MeanElements {
  double mean_motion = 0.0;      ///< rev/day (Kozai mean motion)
  double eccentricity = 0.0;
  double inclination_deg = 0.0;
  double raan_deg = 0.0;
  double arg_perigee_deg = 0.0;
  double mean_anomaly_deg = 0.0;
  double bstar = 0.0;            ///< 1/earth radii
  double ndot = 0.0;             ///< rev/day^2, as published (first derivative / 2)
  double nddot = 0.0;            ///< rev/day^3, as published (second derivative / 6)

  bool operator==(const MeanElements&) const = default;
};

struct TleRecord {
  int norad_id = 0;
  std::optional<std::string> name;
  Instant epoch{};
  MeanElements elements;
  int element_set_no = 0;
  int rev_at_epoch = 0;
  char classification = 'U';
  std::string intl_designator = "        ";  ///< cols 10-17, kept verbatim
  char ephemeris_type = '0';
  std::string line1_raw;
  std::string line2_raw;

  bool operator==(const TleRecord&) const = default;
};

/// Standard modulo-10 checksum: digits count their value, '-' counts 1.
inline int checksum(std::string_view body) {
  if (body.size() != kTleLineLength - 1) {
    throw Error(ErrorCode::LineLength, "checksum body must be 68 characters, got " + std::to_string(body.size()));
  }
  int sum = 0;
  for (char c : body) {
    if (c >= '0' && c <= '9') sum += c - '0';
    else if (c == '-') sum += 1;
  }
  return sum % 10;
}

namespace tle_detail {

inline Error syntax_error(int line_no, int first, int last, std::string_view text, std::string_view what) {
  return Error(ErrorCode::FieldSyntax, "line " + std::to_string(line_no) + " cols " + std::to_string(first) + "-" +
                                           std::to_string(last) + " (" + std::string(what) + "): '" +
                                           std::string(text) + "'");
}

/// Columns are 1-indexed and inclusive, as in the published layout.
inline std::string_view cols(std::string_view line, int first, int last) {
  return line.substr(static_cast<std::size_t>(first - 1), static_cast<std::size_t>(last - first + 1));
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
  return s;
}

/// Unsigned integer with optional leading-space padding. Blank allowed only if `blank_ok`.
inline int parse_uint(std::string_view line, int line_no, int first, int last, std::string_view what, bool blank_ok) {
  const auto raw = cols(line, first, last);
  auto s = raw;
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  if (s.empty()) {
    if (blank_ok) return 0;
    throw syntax_error(line_no, first, last, raw, what);
  }
  int value = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.front() == '-' || s.front() == '+') {
    throw syntax_error(line_no, first, last, raw, what);
  }
  return value;
}

inline double parse_decimal(std::string_view line, int line_no, int first, int last, std::string_view what) {
  const auto raw = cols(line, first, last);
  auto s = trim(raw);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double value = 0.0;
  if (s.empty()) throw syntax_error(line_no, first, last, raw, what);
  for (char c : s) {
    if (!((c >= '0' && c <= '9') || c == '.' || c == '-')) throw syntax_error(line_no, first, last, raw, what);
  }
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || ptr != s.data() + s.size()) throw syntax_error(line_no, first, last, raw, what);
  return value;
}

/// Implied-decimal mantissa with signed exponent: "[ +-]ddddd[+-]d" meaning +-0.ddddd x 10^(+-d).
inline double parse_implied_exponent(std::string_view line, int line_no, int first, int last,
                                     std::string_view what) {
  const auto raw = cols(line, first, last);
  if (raw.size() != 8) throw syntax_error(line_no, first, last, raw, what);
  const char sign = raw[0];
  if (sign != ' ' && sign != '+' && sign != '-') throw syntax_error(line_no, first, last, raw, what);
  std::string mantissa;
  bool leading = true;
  for (std::size_t i = 1; i <= 5; ++i) {
    const char c = raw[i];
    if (c == ' ' && leading) {
      mantissa.push_back('0');
    } else if (c >= '0' && c <= '9') {
      leading = false;
      mantissa.push_back(c);
    } else {
      throw syntax_error(line_no, first, last, raw, what);
    }
  }
  const char exp_sign = raw[6];
  const char exp_digit = raw[7];
  if ((exp_sign != '+' && exp_sign != '-') || exp_digit < '0' || exp_digit > '9') {
    throw syntax_error(line_no, first, last, raw, what);
  }
  const std::string text = std::string(sign == '-' ? "-" : "") + "0." + mantissa + "e" + exp_sign + exp_digit;
  double value = 0.0;
  std::from_chars(text.data(), text.data() + text.size(), value);
  return value;
}

/// Renders +-0.ddddd x 10^e as the 8-character implied-decimal field.
inline std::string format_implied_exponent(double value) {
  char sign = value < 0.0 ? '-' : ' ';
  double mag = std::fabs(value);
  if (mag == 0.0) return std::string(1, sign == '-' ? '-' : ' ') + "00000-0";
  int exponent = static_cast<int>(std::floor(std::log10(mag))) + 1;
  auto mantissa = static_cast<long>(std::llround(mag / std::pow(10.0, exponent) * 1e5));
  if (mantissa >= 100000) {
    mantissa /= 10;
    ++exponent;
  }
  if (mantissa < 10000) {
    // value slightly below a power of ten: renormalize
    --exponent;
    mantissa = static_cast<long>(std::llround(mag / std::pow(10.0, exponent) * 1e5));
  }
  if (exponent > 9 || exponent < -9) {
    throw Error(ErrorCode::InvalidArgument, "value out of range for implied-exponent field");
  }
  char buf[16];
  std::snprintf(buf, sizeof buf, "%c%05ld%c%d", sign, mantissa, exponent < 0 ? '-' : '+', std::abs(exponent));
  return buf;
}

/// Renders the first derivative of mean motion as "[ -].dddddddd".
inline std::string format_ndot(double value) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%.8f", std::fabs(value));
  std::string s(buf);
  if (s[0] != '0') throw Error(ErrorCode::InvalidArgument, "ndot out of range for the TLE field");
  s.erase(0, 1);
  return (value < 0.0 ? "-" : " ") + s;
}

inline Instant parse_epoch(std::string_view line) {
  const int yy = parse_uint(line, 1, 19, 20, "epoch year", false);
  const auto raw = cols(line, 21, 32);
  const auto dot = raw.find('.');
  if (dot == std::string_view::npos) throw syntax_error(1, 21, 32, raw, "epoch day");
  std::string_view day_part = raw.substr(0, dot);
  std::string_view frac_part = raw.substr(dot + 1);
  while (!day_part.empty() && day_part.front() == ' ') day_part.remove_prefix(1);
  if (day_part.empty() || frac_part.empty() || frac_part.size() > 8) throw syntax_error(1, 21, 32, raw, "epoch day");
  int day = 0;
  for (char c : day_part) {
    if (c < '0' || c > '9') throw syntax_error(1, 21, 32, raw, "epoch day");
    day = day * 10 + (c - '0');
  }
  std::int64_t frac = 0;
  for (std::size_t i = 0; i < 8; ++i) {
    const char c = i < frac_part.size() ? frac_part[i] : '0';
    if (c < '0' || c > '9') throw syntax_error(1, 21, 32, raw, "epoch day");
    frac = frac * 10 + (c - '0');
  }
  if (day < 1 || day > 366) throw syntax_error(1, 21, 32, raw, "epoch day");
  const int year = yy < 57 ? 2000 + yy : 1900 + yy;
  // 1e-8 day is exactly 864000 ns, so the decoded epoch is exact.
  return start_of_year(year) + Nanoseconds(static_cast<std::int64_t>(day - 1) * kNanosPerDay + frac * 864'000);
}

inline void check_range(bool ok, int line_no, int first, int last, std::string_view line, std::string_view what) {
  if (!ok) throw syntax_error(line_no, first, last, cols(line, first, last), what);
}

inline void check_line(std::string_view line, int line_no) {
  if (line.size() != kTleLineLength) {
    throw Error(ErrorCode::LineLength, "line " + std::to_string(line_no) + " has " + std::to_string(line.size()) +
                                           " characters, expected 69");
  }
  if (line[0] != static_cast<char>('0' + line_no)) {
    throw syntax_error(line_no, 1, 1, cols(line, 1, 1), "line number");
  }
  const char stored = line[68];
  if (stored < '0' || stored > '9') throw syntax_error(line_no, 69, 69, cols(line, 69, 69), "checksum");
  const int computed = checksum(line.substr(0, 68));
  if (computed != stored - '0') {
    throw Error(ErrorCode::ChecksumMismatch, "line " + std::to_string(line_no) + " computed " +
                                                 std::to_string(computed) + ", stored " + std::string(1, stored));
  }
}

}  // namespace tle_detail

/// Parses one element set. `line0` is the optional name line (a leading "0 " is stripped).
inline TleRecord parse_tle(std::optional<std::string_view> line0, std::string_view line1, std::string_view line2) {
  using namespace tle_detail;
  while (!line1.empty() && (line1.back() == '\r' || line1.back() == '\n')) line1.remove_suffix(1);
  while (!line2.empty() && (line2.back() == '\r' || line2.back() == '\n')) line2.remove_suffix(1);
  check_line(line1, 1);
  check_line(line2, 2);

  TleRecord r;
  r.norad_id = parse_uint(line1, 1, 3, 7, "catalog number", false);
  const int id2 = parse_uint(line2, 2, 3, 7, "catalog number", false);
  if (r.norad_id != id2) {
    throw Error(ErrorCode::IdMismatch,
                "line 1 catalog number " + std::to_string(r.norad_id) + " != line 2 " + std::to_string(id2));
  }
  check_range(r.norad_id > 0, 1, 3, 7, line1, "catalog number");
  r.classification = line1[7];
  r.intl_designator = std::string(cols(line1, 10, 17));
  r.epoch = parse_epoch(line1);
  auto& e = r.elements;
  e.ndot = parse_decimal(line1, 1, 34, 43, "ndot");
  e.nddot = parse_implied_exponent(line1, 1, 45, 52, "nddot");
  e.bstar = parse_implied_exponent(line1, 1, 54, 61, "bstar");
  r.ephemeris_type = line1[62];
  r.element_set_no = parse_uint(line1, 1, 65, 68, "element set number", true);

  e.inclination_deg = parse_decimal(line2, 2, 9, 16, "inclination");
  e.raan_deg = parse_decimal(line2, 2, 18, 25, "raan");
  {
    const auto raw = cols(line2, 27, 33);
    for (char c : raw) {
      if (c < '0' || c > '9') throw syntax_error(2, 27, 33, raw, "eccentricity");
    }
    e.eccentricity = parse_decimal("0." + std::string(raw), 2, 1, 9, "eccentricity");
  }
  e.arg_perigee_deg = parse_decimal(line2, 2, 35, 42, "argument of perigee");
  e.mean_anomaly_deg = parse_decimal(line2, 2, 44, 51, "mean anomaly");
  e.mean_motion = parse_decimal(line2, 2, 53, 63, "mean motion");
  r.rev_at_epoch = parse_uint(line2, 2, 64, 68, "revolution number", true);

  check_range(e.inclination_deg >= 0.0 && e.inclination_deg <= 180.0, 2, 9, 16, line2, "inclination range");
  check_range(e.raan_deg >= 0.0 && e.raan_deg < 360.0, 2, 18, 25, line2, "raan range");
  check_range(e.arg_perigee_deg >= 0.0 && e.arg_perigee_deg < 360.0, 2, 35, 42, line2, "argument of perigee range");
  check_range(e.mean_anomaly_deg >= 0.0 && e.mean_anomaly_deg < 360.0, 2, 44, 51, line2, "mean anomaly range");
  check_range(e.mean_motion > 0.0, 2, 53, 63, line2, "mean motion range");

  if (line0) {
    std::string_view name = *line0;
    while (!name.empty() && (name.back() == '\r' || name.back() == '\n' || name.back() == ' ')) name.remove_suffix(1);
    if (name.size() >= 2 && name[0] == '0' && name[1] == ' ') name.remove_prefix(2);
    name = trim(name);
    if (!name.empty()) r.name = std::string(name);
  }
  r.line1_raw = std::string(line1);
  r.line2_raw = std::string(line2);
  return r;
}

/// Renders the two lines for a record from its decoded fields (raw lines are ignored).
inline std::pair<std::string, std::string> format_tle(const TleRecord& r) {
  using namespace std::chrono;
  using namespace tle_detail;
  const auto& e = r.elements;
  if (r.norad_id <= 0 || r.norad_id > 99999) throw Error(ErrorCode::InvalidArgument, "catalog number out of range");

  const auto day_floor = floor<days>(r.epoch);
  const int year = static_cast<int>(year_month_day{day_floor}.year());
  const std::int64_t offset_ns = (r.epoch - start_of_year(year)).count();
  const std::int64_t units = (offset_ns + 432'000) / 864'000;  // 1e-8 day units, rounded
  const std::int64_t day = units / 100'000'000 + 1;
  const std::int64_t frac = units % 100'000'000;

  std::string intl = r.intl_designator;
  intl.resize(8, ' ');
  char l1[96];
  std::snprintf(l1, sizeof l1, "1 %05d%c %s %02d%03lld.%08lld %s %s %s %c %4d", r.norad_id, r.classification,
                intl.c_str(), year % 100, static_cast<long long>(day), static_cast<long long>(frac),
                format_ndot(e.ndot).c_str(), format_implied_exponent(e.nddot).c_str(),
                format_implied_exponent(e.bstar).c_str(), r.ephemeris_type, r.element_set_no % 10000);

  const auto ecc_digits = static_cast<long>(std::llround(e.eccentricity * 1e7));
  if (ecc_digits < 0 || ecc_digits > 9'999'999) throw Error(ErrorCode::InvalidArgument, "eccentricity out of range");
  char l2[96];
  std::snprintf(l2, sizeof l2, "2 %05d %8.4f %8.4f %07ld %8.4f %8.4f %11.8f%5d", r.norad_id, e.inclination_deg,
                e.raan_deg, ecc_digits, e.arg_perigee_deg, e.mean_anomaly_deg, e.mean_motion,
                r.rev_at_epoch % 100000);
  std::string line1(l1);
  std::string line2(l2);
  if (line1.size() != 68 || line2.size() != 68) {
    throw Error(ErrorCode::InvalidArgument, "record fields do not fit the fixed-column layout");
  }
  line1.push_back(static_cast<char>('0' + checksum(line1)));
  line2.push_back(static_cast<char>('0' + checksum(line2)));
  return {line1, line2};
}

/// Builds a record from fields by rendering and re-parsing, so raw lines and
/// decoded fields agree exactly. Useful for constructed fixtures.
inline TleRecord make_tle(int norad_id, Instant epoch, const MeanElements& elements,
                          std::optional<std::string> name = std::nullopt) {
  TleRecord r;
  r.norad_id = norad_id;
  r.epoch = epoch;
  r.elements = elements;
  r.name = std::move(name);
  const auto [l1, l2] = format_tle(r);
  return parse_tle(r.name ? std::optional<std::string_view>(*r.name) : std::nullopt, l1, l2);
}

}  // namespace orco
