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

// Screening pipeline shared by the CLI and the service: sieve, per-pair close
// approaches, uncertainty propagated to each tca, encounter plane, pc by every
// requested method.

#include <algorithm>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "orco/catalog.hpp"
#include "orco/conjunction.hpp"
#include "orco/error.hpp"
#include "orco/probability.hpp"
#include "orco/uncertainty.hpp"

namespace orco {

constexpr std::string_view to_string(UncertaintyScheme s) {
  switch (s) {
    case UncertaintyScheme::monte_carlo: return "mc";
    case UncertaintyScheme::espt: return "espt";
    case UncertaintyScheme::aespt: return "aespt";
  }
  return "?";
}

inline UncertaintyScheme parse_uncertainty_scheme(std::string_view s) {
  if (s == "mc" || s == "monte_carlo") return UncertaintyScheme::monte_carlo;
  if (s == "espt") return UncertaintyScheme::espt;
  if (s == "aespt") return UncertaintyScheme::aespt;
  throw Error(ErrorCode::InvalidArgument, "unknown uncertainty scheme '" + std::string(s) + "'");
}

/// "all" or a comma-separated list; duplicates collapse, order is mc, patera, alfano.
inline std::vector<ProbabilityMethod> parse_method_list(std::string_view text) {
  std::vector<ProbabilityMethod> out;
  auto add = [&](ProbabilityMethod m) {
    if (std::find(out.begin(), out.end(), m) == out.end()) out.push_back(m);
  };
  while (!text.empty()) {
    const auto comma = text.find(',');
    const auto item = text.substr(0, comma);
    if (item == "all") {
      for (auto m : kAllMethods) add(m);
    } else {
      add(parse_probability_method(item));
    }
    text = comma == std::string_view::npos ? std::string_view{} : text.substr(comma + 1);
  }
  std::sort(out.begin(), out.end());
  if (out.empty()) throw Error(ErrorCode::InvalidArgument, "no probability method selected");
  return out;
}

struct ScreeningRequest {
  std::vector<int> ids;
  ScreeningConfig screening;
  UncertaintyConfig uncertainty;
  UncertaintyScheme scheme = UncertaintyScheme::espt;
  std::vector<ProbabilityMethod> methods{std::begin(kAllMethods), std::end(kAllMethods)};
  std::uint64_t mc_samples = 1'000'000;
  PropagatorOptions propagator;

  void validate() const {
    screening.validate();
    uncertainty.validate();
    if (ids.size() < 2) throw Error(ErrorCode::InvalidArgument, "at least two objects are required");
    if (methods.empty()) throw Error(ErrorCode::InvalidArgument, "no probability method selected");
    if (mc_samples == 0) throw Error(ErrorCode::InvalidArgument, "mc_samples must be positive");
  }
};

struct EventReport {
  ConjunctionEvent event;
  Covariance6 covariance_a;  ///< TEME at tca
  Covariance6 covariance_b;
  std::optional<EncounterPlane> plane;  ///< absent for slow encounters
  std::vector<ProbabilityResult> results;
  std::optional<Error> error;
};

struct PairFailure {
  int id_a = 0;
  int id_b = 0;
  Error error;
};

struct ScreeningReport {
  ScreeningRequest request;
  std::size_t pairs_screened = 0;
  std::vector<EventReport> events;  ///< by (tca, id_a, id_b)
  std::vector<PairFailure> failures;
};

/// Called with the completed fraction in [0, 1].
using ProgressFn = std::function<void(double)>;

namespace pipeline_detail {

inline ProbabilityRequest base_request(const ScreeningRequest& req) {
  ProbabilityRequest p;
  p.hard_body_radius_m = req.screening.hard_body_radius_m;
  p.mc_samples = req.mc_samples;
  p.rng_seed = req.uncertainty.rng_seed;
  return p;
}

/// Slow encounter: B - A on a 1 s grid over +-coarse_step around tca.
inline ProbabilityResult slow_encounter_pc(const ScreeningRequest& req, const TleRecord& a, const TleRecord& b,
                                           const EventReport& ev) {
  const Propagator pa(a, req.propagator);
  const Propagator pb(b, req.propagator);
  const auto half = static_cast<int>(std::ceil(req.screening.coarse_step_s));
  std::vector<Vec3> rel;
  for (int k = -half; k <= half; ++k) {
    const Instant t = add_seconds(ev.event.tca, k);
    rel.push_back(pb.at(t).position - pa.at(t).position);
  }
  const Matrix3 combined = ev.covariance_a.position_block() + ev.covariance_b.position_block();
  return pc_time_resolved_mc(rel, combined, req.screening.hard_body_radius_m, req.mc_samples,
                             req.uncertainty.rng_seed);
}

inline void assess(const ScreeningRequest& req, const TleRecord& a, const TleRecord& b,
                   const StateDistribution& dist_a, const StateDistribution& dist_b, EventReport& ev) {
  const Instant t = ev.event.tca;
  ev.covariance_a = propagate_uncertainty(req.scheme, dist_a, a, t, req.uncertainty, req.propagator).covariance;
  ev.covariance_b = propagate_uncertainty(req.scheme, dist_b, b, t, req.uncertainty, req.propagator).covariance;
  try {
    ev.plane = build_encounter_plane(ev.event, ev.covariance_a, ev.covariance_b);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::DegenerateEncounter) throw;
    ev.results.push_back(slow_encounter_pc(req, a, b, ev));
    return;
  }
  for (const auto method : req.methods) {
    ProbabilityRequest p = base_request(req);
    p.miss_km = ev.plane->miss_vector_2d;
    p.covariance_km2 = ev.plane->covariance_2d;
    p.method = method;
    ev.results.push_back(compute_pc(p));
  }
}

}  // namespace pipeline_detail

/// Runs the full screening over `req.ids`. Per-pair propagation failures and
/// per-event probability failures are recorded in the report, not thrown.
inline ScreeningReport run_screening(const CatalogSnapshot& catalog, const ScreeningRequest& req,
                                     const ProgressFn& progress = {}) {
  using namespace pipeline_detail;
  req.validate();
  CatalogSnapshot subset;
  for (const int id : req.ids) {
    const auto it = catalog.records.find(id);
    if (it == catalog.records.end()) {
      throw Error(ErrorCode::NotFound, "object " + std::to_string(id) + " is not in the catalog");
    }
    subset.records.emplace(id, it->second);
  }

  ScreeningReport report;
  report.request = req;
  std::sort(report.request.ids.begin(), report.request.ids.end());
  report.request.ids.erase(std::unique(report.request.ids.begin(), report.request.ids.end()),
                           report.request.ids.end());

  const auto pairs = prefilter_pairs(subset, req.screening);
  report.pairs_screened = pairs.size();
  std::map<int, std::optional<StateDistribution>> initial;
  auto initial_of = [&](const TleRecord& r) -> const StateDistribution& {
    auto& slot = initial[r.norad_id];
    if (!slot) slot = initial_distribution(r, req.uncertainty, req.propagator);
    return *slot;
  };

  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto [ida, idb] = pairs[i];
    const TleRecord& a = subset.records.at(ida);
    const TleRecord& b = subset.records.at(idb);
    try {
      for (auto& event : find_conjunctions(a, b, req.screening, req.propagator)) {
        EventReport ev;
        ev.event = std::move(event);
        try {
          assess(req, a, b, initial_of(a), initial_of(b), ev);
        } catch (const Error& e) {
          ev.results.clear();
          ev.error = e;
        }
        report.events.push_back(std::move(ev));
      }
    } catch (const Error& e) {
      report.failures.push_back({ida, idb, e});
    }
    if (progress) progress(static_cast<double>(i + 1) / static_cast<double>(pairs.size()));
  }
  std::stable_sort(report.events.begin(), report.events.end(), [](const EventReport& x, const EventReport& y) {
    return std::tie(x.event.tca, x.event.id_a, x.event.id_b) < std::tie(y.event.tca, y.event.id_a, y.event.id_b);
  });
  if (progress && pairs.empty()) progress(1.0);
  return report;
}

/// Ellipse of a 2x2 covariance for rendering: eigenvalues descending and the
/// major-axis angle from e1 in degrees, in (-90, 90].
struct EllipseParams {
  Vector2 eigenvalues_km2 = Vector2::Zero();
  double angle_deg = 0.0;
};

inline EllipseParams ellipse_params(const Matrix2& cov) {
  Eigen::SelfAdjointEigenSolver<Matrix2> es(0.5 * (cov + cov.transpose()));
  EllipseParams p;
  p.eigenvalues_km2 = Vector2(es.eigenvalues()[1], es.eigenvalues()[0]);
  const Vector2 major = es.eigenvectors().col(1);
  double angle = std::atan2(major.y(), major.x()) * 180.0 / std::numbers::pi;
  if (angle <= -90.0) angle += 180.0;
  if (angle > 90.0) angle -= 180.0;
  p.angle_deg = angle;
  return p;
}

}  // namespace orco
