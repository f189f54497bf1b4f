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

// Close-approach screening between pairs of element sets: an apogee/perigee
// sieve, a coarse distance grid, golden-section TCA refinement, and the 2D
// encounter-plane projection used by the probability kernels.

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "orco/catalog.hpp"
#include "orco/error.hpp"
#include "orco/linalg.hpp"
#include "orco/propagator.hpp"
#include "orco/uncertainty.hpp"

namespace orco {

struct ScreeningConfig {
  Instant window_start{};
  Instant window_stop{};
  double coarse_step_s = 60.0;
  double screening_distance_km = 10.0;
  double hard_body_radius_m = 20.0;  ///< combined
  double tca_tolerance_s = 1e-3;
  /// Extra padding of each object's altitude band in the sieve. SGP4 radii
  /// leave the mean perigee/apogee band by up to ~8 km (short-periodic terms).
  double sieve_margin_km = 10.0;

  void validate() const {
    if (!(window_start < window_stop)) {
      throw Error(ErrorCode::InvalidArgument, "window_start " + to_iso8601(window_start) +
                                                  " must precede window_stop " + to_iso8601(window_stop));
    }
    if (!(coarse_step_s > 0.0)) throw Error(ErrorCode::InvalidArgument, "coarse_step must be positive");
    if (!(screening_distance_km > 0.0)) throw Error(ErrorCode::InvalidArgument, "screening_distance must be positive");
    if (!(hard_body_radius_m > 0.0)) throw Error(ErrorCode::InvalidArgument, "hard_body_radius must be positive");
    if (!(tca_tolerance_s > 0.0)) throw Error(ErrorCode::InvalidArgument, "tca_tolerance must be positive");
    if (!(sieve_margin_km >= 0.0)) throw Error(ErrorCode::InvalidArgument, "sieve_margin must be non-negative");
  }
};

struct ConjunctionEvent {
  int id_a = 0;
  int id_b = 0;
  Instant tca{};
  double miss_distance_km = 0.0;
  double relative_speed_km_s = 0.0;
  StateVector state_a;
  StateVector state_b;
};

struct EncounterPlane {
  Vector2 miss_vector_2d = Vector2::Zero();  ///< km
  Matrix2 covariance_2d = Matrix2::Zero();   ///< km^2
  Vec3 e1 = Vec3::UnitX();
  Vec3 e2 = Vec3::UnitY();
};

/// Pairs (id_a < id_b) whose [perigee - D - m, apogee + D + m] altitude bands
/// overlap, D = screening distance, m = sieve margin.
inline std::vector<std::pair<int, int>> prefilter_pairs(const CatalogSnapshot& catalog, const ScreeningConfig& config) {
  struct Band {
    double lo, hi;
    int id;
  };
  std::vector<Band> bands;
  bands.reserve(catalog.records.size());
  const double pad = config.screening_distance_km + config.sieve_margin_km;
  for (const auto& [id, r] : catalog.records) {
    bands.push_back({perigee_altitude_km(r.elements) - pad, apogee_altitude_km(r.elements) + pad, id});
  }
  std::sort(bands.begin(), bands.end(), [](const Band& a, const Band& b) { return a.lo < b.lo; });
  std::vector<std::pair<int, int>> out;
  for (std::size_t i = 0; i < bands.size(); ++i) {
    for (std::size_t j = i + 1; j < bands.size() && bands[j].lo <= bands[i].hi; ++j) {
      out.emplace_back(std::min(bands[i].id, bands[j].id), std::max(bands[i].id, bands[j].id));
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

namespace conjunction_detail {

/// Upper bound on relative acceleration between two Earth orbiters (km/s^2).
inline constexpr double kMaxRelativeAccel = 0.02;

struct PairPropagator {
  Propagator a;
  Propagator b;

  [[nodiscard]] std::pair<StateVector, StateVector> at(Instant t) const {
    return {at_one(a, t), at_one(b, t)};
  }

  [[nodiscard]] double distance(Instant t) const {
    const auto [sa, sb] = at(t);
    return (sb.position - sa.position).norm();
  }

  static StateVector at_one(const Propagator& p, Instant t) {
    try {
      return p.at(t);
    } catch (const Error& e) {
      throw Error(e.code(), "object " + std::to_string(p.norad_id()) + " at " + to_iso8601(t) + ": " + e.detail());
    }
  }
};

/// Golden-section minimum of the pair distance on [lo, hi].
inline Instant golden_section(const PairPropagator& pp, Instant lo, Instant hi, double tol_s) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = 0.0;
  double b = seconds_between(lo, hi);
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = pp.distance(add_seconds(lo, c));
  double fd = pp.distance(add_seconds(lo, d));
  while (b - a > tol_s) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = pp.distance(add_seconds(lo, c));
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = pp.distance(add_seconds(lo, d));
    }
  }
  return add_seconds(lo, fc <= fd ? c : d);
}

inline ConjunctionEvent make_event(const PairPropagator& pp, Instant t) {
  const auto [sa, sb] = pp.at(t);
  ConjunctionEvent e;
  e.id_a = sa.norad_id;
  e.id_b = sb.norad_id;
  e.tca = t;
  e.miss_distance_km = (sb.position - sa.position).norm();
  e.relative_speed_km_s = (sb.velocity - sa.velocity).norm();
  e.state_a = sa;
  e.state_b = sb;
  return e;
}

}  // namespace conjunction_detail

/// Relative distance spread (max - min, relative to the mean) below which a
/// pair is treated as constant-distance and reported once at window_start.
inline constexpr double kConstantDistanceRelTol = 1e-5;

/// Close approaches of one pair inside the window, sorted by tca, with
/// id_a < id_b regardless of argument order.
inline std::vector<ConjunctionEvent> find_conjunctions(const TleRecord& record_a, const TleRecord& record_b,
                                                       const ScreeningConfig& config, PropagatorOptions options = {}) {
  using namespace conjunction_detail;
  config.validate();
  const bool swap = record_b.norad_id < record_a.norad_id;
  const PairPropagator pp{Propagator(swap ? record_b : record_a, options),
                          Propagator(swap ? record_a : record_b, options)};

  std::vector<Instant> grid;
  const double span = seconds_between(config.window_start, config.window_stop);
  for (std::int64_t k = 0; static_cast<double>(k) * config.coarse_step_s < span; ++k) {
    grid.push_back(add_seconds(config.window_start, static_cast<double>(k) * config.coarse_step_s));
  }
  grid.push_back(config.window_stop);

  const std::size_t n = grid.size();
  std::vector<double> dist(n);
  std::vector<double> speed(n);
  for (std::size_t k = 0; k < n; ++k) {
    const auto [sa, sb] = pp.at(grid[k]);
    dist[k] = (sb.position - sa.position).norm();
    speed[k] = (sb.velocity - sa.velocity).norm();
  }

  std::vector<ConjunctionEvent> events;
  const auto [lo_it, hi_it] = std::minmax_element(dist.begin(), dist.end());
  double mean = 0.0;
  for (double d : dist) mean += d / static_cast<double>(n);
  if (*hi_it - *lo_it <= kConstantDistanceRelTol * mean) {
    if (dist.front() < config.screening_distance_km) events.push_back(make_event(pp, config.window_start));
    return events;
  }

  std::vector<ConjunctionEvent> raw;
  for (std::size_t k = 0; k < n; ++k) {
    // A plateau counts once, at its first sample.
    if (k > 0 && dist[k] >= dist[k - 1]) continue;
    std::size_t right = k;
    while (right + 1 < n && dist[right + 1] == dist[k]) ++right;
    if (right + 1 < n && dist[right + 1] < dist[k]) continue;
    const std::size_t lo = k == 0 ? 0 : k - 1;
    const std::size_t hi = std::min(right + 1, n - 1);
    const double step = seconds_between(grid[lo], grid[hi]);
    const double vmax = std::max({speed[lo], speed[k], speed[hi]}) + kMaxRelativeAccel * step;
    if (dist[k] - vmax * step >= config.screening_distance_km) continue;  // cannot dip below D in the bracket

    Instant tca = golden_section(pp, grid[lo], grid[hi], config.tca_tolerance_s);
    if (pp.distance(tca) > dist[k]) tca = grid[k];
    auto event = make_event(pp, tca);
    if (event.miss_distance_km < config.screening_distance_km) raw.push_back(std::move(event));
  }

  for (auto& e : raw) {
    if (!events.empty() && seconds_between(events.back().tca, e.tca) <= 2.0 * config.coarse_step_s) {
      if (e.miss_distance_km < events.back().miss_distance_km) events.back() = std::move(e);
    } else {
      events.push_back(std::move(e));
    }
  }
  return events;
}

/// Minimum relative speed (km/s) for the short-encounter model.
inline constexpr double kMinEncounterSpeed = 1e-6;

/// Projects the combined position covariance and the miss vector (B relative
/// to A) onto the plane normal to the relative velocity. Object errors are
/// assumed independent, so covariances add.
inline EncounterPlane build_encounter_plane(const ConjunctionEvent& event, const Covariance6& cov_a,
                                            const Covariance6& cov_b) {
  const Vec3 v = event.state_b.velocity - event.state_a.velocity;
  if (!(v.norm() > kMinEncounterSpeed)) {
    throw Error(ErrorCode::DegenerateEncounter,
                "relative speed " + std::to_string(v.norm()) + " km/s is too low for the short-encounter model");
  }
  auto teme = [](const Covariance6& c, const StateVector& s) {
    return c.frame == CovarianceFrame::TEME ? c.matrix : rsw_to_teme(c.matrix, s);
  };
  const Matrix3 combined =
      teme(cov_a, event.state_a).topLeftCorner<3, 3>() + teme(cov_b, event.state_b).topLeftCorner<3, 3>();

  const Vec3 u = v.normalized();
  const Vec3 r = event.state_b.position - event.state_a.position;
  const Vec3 proj = r - r.dot(u) * u;
  EncounterPlane plane;
  if (proj.norm() > 1e-12 * r.norm()) {
    plane.e1 = proj.normalized();
  } else {
    Eigen::Index axis = 0;
    u.cwiseAbs().minCoeff(&axis);
    plane.e1 = u.cross(Vec3::Unit(axis)).normalized();
  }
  plane.e2 = u.cross(plane.e1);
  Eigen::Matrix<double, 3, 2> basis;
  basis << plane.e1, plane.e2;
  plane.miss_vector_2d = Vector2(r.dot(plane.e1), 0.0);
  const Matrix2 c2 = basis.transpose() * combined * basis;
  plane.covariance_2d = 0.5 * (c2 + c2.transpose());
  return plane;
}

}  // namespace orco
