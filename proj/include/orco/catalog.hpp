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

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "orco/error.hpp"
#include "orco/sgp4.hpp"
#include "orco/time.hpp"
#include "orco/tle.hpp"

namespace orco {

enum class CatalogSource { file, space_track };

constexpr std::string_view to_string(CatalogSource s) { return s == CatalogSource::file ? "file" : "space_track"; }

/// Immutable set of element sets, at most one per catalog number.
struct CatalogSnapshot {
  Instant fetched_at{};
  CatalogSource source = CatalogSource::file;
  std::map<int, TleRecord> records;
};

/// One element set that failed to parse. `line` is the 1-based first line of the set.
struct RejectEntry {
  std::size_t line = 0;
  std::optional<int> norad_id;
  ErrorCode code = ErrorCode::FieldSyntax;
  std::string message;
};

struct CatalogLoad {
  CatalogSnapshot snapshot;
  std::vector<RejectEntry> rejects;
};

/// Two-body semimajor axis from Kozai mean motion, a = (mu/n^2)^(1/3), n in rad/s.
inline double semi_major_axis_km(const MeanElements& e) {
  const double n = e.mean_motion * 2.0 * std::numbers::pi / 86400.0;
  return std::cbrt(wgs72::kMu / (n * n));
}

inline double perigee_altitude_km(const MeanElements& e) {
  return semi_major_axis_km(e) * (1.0 - e.eccentricity) - wgs72::kEarthRadiusKm;
}

inline double apogee_altitude_km(const MeanElements& e) {
  return semi_major_axis_km(e) * (1.0 + e.eccentricity) - wgs72::kEarthRadiusKm;
}

namespace catalog_detail {

inline bool starts_with_line_no(std::string_view line, char no) {
  return line.size() >= 2 && line[0] == no && line[1] == ' ';
}

inline std::optional<int> peek_norad(std::string_view line) {
  if (line.size() < 7) return std::nullopt;
  try {
    return tle_detail::parse_uint(line, 1, 3, 7, "catalog number", false);
  } catch (const Error&) {
    return std::nullopt;
  }
}

inline void insert_latest(CatalogSnapshot& snap, TleRecord record) {
  auto it = snap.records.find(record.norad_id);
  if (it == snap.records.end()) {
    snap.records.emplace(record.norad_id, std::move(record));
  } else if (record.epoch >= it->second.epoch) {
    it->second = std::move(record);
  }
}

}  // namespace catalog_detail

/// Parses concatenated 2-line or 3-line element sets. Never drops input silently:
/// every set that fails to parse is listed in `rejects`.
inline CatalogLoad parse_catalog_text(std::string_view text, CatalogSource source = CatalogSource::file,
                                      Instant fetched_at = {}) {
  using catalog_detail::starts_with_line_no;
  struct NumberedLine {
    std::size_t no;
    std::string_view text;
  };
  std::vector<NumberedLine> lines;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.remove_suffix(1);
    if (!line.empty()) lines.push_back({line_no, line});
  }

  CatalogLoad out;
  out.snapshot.source = source;
  out.snapshot.fetched_at = fetched_at;
  std::size_t i = 0;
  while (i < lines.size()) {
    std::optional<std::string_view> name;
    std::size_t first = i;
    std::size_t consumed = 0;
    if (starts_with_line_no(lines[i].text, '1') && i + 1 < lines.size() &&
        starts_with_line_no(lines[i + 1].text, '2')) {
      consumed = 2;
    } else if (i + 2 < lines.size() && starts_with_line_no(lines[i + 1].text, '1') &&
               starts_with_line_no(lines[i + 2].text, '2')) {
      name = lines[i].text;
      first = i + 1;
      consumed = 3;
    } else {
      out.rejects.push_back({lines[i].no, catalog_detail::peek_norad(lines[i].text), ErrorCode::FieldSyntax,
                             "line does not start a 2- or 3-line element set"});
      ++i;
      continue;
    }
    try {
      catalog_detail::insert_latest(out.snapshot, parse_tle(name, lines[first].text, lines[first + 1].text));
    } catch (const Error& e) {
      out.rejects.push_back({lines[i].no, catalog_detail::peek_norad(lines[first].text), e.code(), e.detail()});
    }
    i += consumed;
  }
  return out;
}

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw Error(ErrorCode::IoFailure, "read failed on '" + path.string() + "'");
  return ss.str();
}

inline CatalogLoad load_catalog_file(const std::filesystem::path& path, Instant fetched_at = {}) {
  if (!std::filesystem::is_regular_file(path)) {
    throw Error(ErrorCode::IoFailure, "catalog file '" + path.string() + "' does not exist");
  }
  if (fetched_at == Instant{}) fetched_at = std::chrono::floor<Nanoseconds>(std::chrono::system_clock::now());
  return parse_catalog_text(read_text_file(path), CatalogSource::file, fetched_at);
}

/// Closed interval; unbounded ends are +-infinity.
struct Range {
  double min = -std::numeric_limits<double>::infinity();
  double max = std::numeric_limits<double>::infinity();

  [[nodiscard]] bool contains(double v) const { return v >= min && v <= max; }
};

/// Conjunction of optional ranges on mean-element quantities.
struct OrbitalFilter {
  std::optional<Range> inclination_deg;
  std::optional<Range> eccentricity;
  std::optional<Range> mean_motion;
  std::optional<Range> perigee_km;
  std::optional<Range> apogee_km;

  void validate() const {
    auto check = [](const std::optional<Range>& r, const char* what) {
      if (r && !(r->min <= r->max)) {
        throw Error(ErrorCode::InvalidRange, std::string(what) + ": min " + std::to_string(r->min) + " > max " +
                                                 std::to_string(r->max));
      }
    };
    check(inclination_deg, "inclination_deg");
    check(eccentricity, "eccentricity");
    check(mean_motion, "mean_motion");
    check(perigee_km, "perigee_km");
    check(apogee_km, "apogee_km");
  }

  [[nodiscard]] bool matches(const TleRecord& r) const {
    const auto& e = r.elements;
    if (inclination_deg && !inclination_deg->contains(e.inclination_deg)) return false;
    if (eccentricity && !eccentricity->contains(e.eccentricity)) return false;
    if (mean_motion && !mean_motion->contains(e.mean_motion)) return false;
    if (perigee_km && !perigee_km->contains(perigee_altitude_km(e))) return false;
    if (apogee_km && !apogee_km->contains(apogee_altitude_km(e))) return false;
    return true;
  }
};

inline CatalogSnapshot filter_catalog(const CatalogSnapshot& snapshot, const OrbitalFilter& filter) {
  filter.validate();
  CatalogSnapshot out;
  out.fetched_at = snapshot.fetched_at;
  out.source = snapshot.source;
  for (const auto& [id, record] : snapshot.records) {
    if (filter.matches(record)) out.records.emplace(id, record);
  }
  return out;
}

}  // namespace orco
