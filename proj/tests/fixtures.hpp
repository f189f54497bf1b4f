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

// Constructed element sets shared by the conjunction, pipeline, service,
// CLI and acceptance tests.

#include <string>
#include <utility>

#include "orco/time.hpp"
#include "orco/tle.hpp"

namespace orco::test {

inline Instant crossing_epoch() { return parse_iso8601("2024-03-01T00:00:00Z"); }

/// Coplanar pair on the same period: A circular, B with e = 0.005 and its mean
/// longitude offset by about -2e rad so B's relative ellipse passes near A
/// once per revolution (first pass ~00:23:45 after the epoch, ~1.5 km miss).
inline std::pair<TleRecord, TleRecord> crossing_pair(double b_mean_anomaly_offset_deg = -0.56) {
  MeanElements a{};
  a.mean_motion = 15.2;
  a.eccentricity = 0.0;
  a.inclination_deg = 51.6;
  a.raan_deg = 30.0;
  a.bstar = 1e-5;
  MeanElements b = a;
  b.eccentricity = 0.005;
  b.mean_anomaly_deg = 360.0 + b_mean_anomaly_offset_deg;
  return {make_tle(90001, crossing_epoch(), a, "CROSS-A"), make_tle(90002, crossing_epoch(), b, "CROSS-B")};
}

/// Same epoch, 800 km higher circular orbit: disjoint altitude band.
inline TleRecord high_orbit() {
  MeanElements e{};
  e.mean_motion = 12.6;
  e.eccentricity = 0.001;
  e.inclination_deg = 98.0;
  e.raan_deg = 100.0;
  e.bstar = 1e-5;
  return make_tle(90003, crossing_epoch(), e, "HIGH");
}

inline std::string three_line(const TleRecord& r) {
  return (r.name ? *r.name : std::string("OBJECT")) + "\n" + r.line1_raw + "\n" + r.line2_raw + "\n";
}

}  // namespace orco::test
