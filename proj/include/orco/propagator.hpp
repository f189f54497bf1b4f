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
#include <cstdint>
#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include "orco/error.hpp"
#include "orco/sgp4.hpp"
#include "orco/time.hpp"
#include "orco/tle.hpp"

namespace orco {

/// Epoch-stamped TEME state. Positions in km, velocities in km/s.
struct StateVector {
  Instant epoch{};
  Vec3 position = Vec3::Zero();
  Vec3 velocity = Vec3::Zero();
  int norad_id = 0;
};

struct PropagatorOptions {
  double horizon_days = 30.0;
};

/// SGP4 bound to one element set and its epoch. Cheap to copy; pure.
class Propagator {
 public:
  Propagator(const MeanElements& elements, Instant epoch, int norad_id = 0, PropagatorOptions options = {})
      : model_(elements), epoch_(epoch), norad_id_(norad_id), options_(options) {}

  explicit Propagator(const TleRecord& record, PropagatorOptions options = {})
      : Propagator(record.elements, record.epoch, record.norad_id, options) {}

  [[nodiscard]] StateVector at(Instant t) const {
    const double dt_s = seconds_between(epoch_, t);
    if (std::fabs(dt_s) > options_.horizon_days * 86400.0) {
      throw Error(ErrorCode::HorizonExceeded, "|t - epoch| = " + std::to_string(dt_s / 86400.0) +
                                                  " days exceeds horizon of " +
                                                  std::to_string(options_.horizon_days) + " days");
    }
    const CartesianState s = model_.at_minutes(dt_s / 60.0);
    return StateVector{t, s.position, s.velocity, norad_id_};
  }

  [[nodiscard]] Instant epoch() const { return epoch_; }
  [[nodiscard]] int norad_id() const { return norad_id_; }
  [[nodiscard]] const Sgp4& model() const { return model_; }

 private:
  Sgp4 model_;
  Instant epoch_;
  int norad_id_;
  PropagatorOptions options_;
};

inline StateVector propagate(const TleRecord& record, Instant t, PropagatorOptions options = {}) {
  return Propagator(record, options).at(t);
}

struct Ephemeris {
  int norad_id = 0;
  Instant start{};
  Instant stop{};
  double step_s = 0.0;
  std::vector<StateVector> states;
};

/// Grid times start + k*step for every k with start + k*step <= stop.
inline std::vector<Instant> time_grid(Instant start, Instant stop, double step_s) {
  if (!(step_s > 0.0)) throw Error(ErrorCode::InvalidArgument, "step must be positive");
  if (!(start < stop)) throw Error(ErrorCode::EmptyWindow, "window start must precede stop");
  const auto step = Nanoseconds(static_cast<std::int64_t>(std::llround(step_s * 1e9)));
  if (step.count() <= 0) throw Error(ErrorCode::InvalidArgument, "step below time resolution");
  const std::int64_t count = (stop - start) / step + 1;
  std::vector<Instant> grid;
  grid.reserve(static_cast<std::size_t>(count));
  for (std::int64_t k = 0; k < count; ++k) grid.push_back(start + k * step);
  return grid;
}

inline Ephemeris make_ephemeris(const Propagator& propagator, Instant start, Instant stop, double step_s) {
  Ephemeris eph{propagator.norad_id(), start, stop, step_s, {}};
  const auto grid = time_grid(start, stop, step_s);
  eph.states.reserve(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    try {
      eph.states.push_back(propagator.at(grid[k]));
    } catch (const Error& e) {
      throw Error(e.code(), "grid point " + std::to_string(k) + " (" + to_iso8601(grid[k]) + "): " + e.detail());
    }
  }
  return eph;
}

inline Ephemeris make_ephemeris(const TleRecord& record, Instant start, Instant stop, double step_s,
                                PropagatorOptions options = {}) {
  return make_ephemeris(Propagator(record, options), start, stop, step_s);
}

/// Debug dump: epoch,rx,ry,rz,vx,vy,vz
inline void write_ephemeris_csv(std::ostream& out, const Ephemeris& eph) {
  out << "epoch,rx,ry,rz,vx,vy,vz\n";
  char buf[256];
  for (const auto& s : eph.states) {
    std::snprintf(buf, sizeof buf, "%s,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", to_iso8601(s.epoch).c_str(),
                  s.position.x(), s.position.y(), s.position.z(), s.velocity.x(), s.velocity.y(), s.velocity.z());
    out << buf;
  }
}

}  // namespace orco
